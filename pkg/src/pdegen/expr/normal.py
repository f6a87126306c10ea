"""Canonical forms for expression trees.

An expression normalises to a quotient of multivariate polynomials over Q
whose indeterminates ("bases") are variables, symbolic constants, function
applications with canonical arguments, and radicals of composite
expressions.  Monomials map bases to rational exponents; composite bases
keep their fractional part in ``(0, 1)`` (integer powers are expanded),
``i*i`` folds to ``-1``, and exponential factors merge through content
extraction of their arguments.

Cancellation uses a primitive-PRS multivariate GCD; fractional exponents
are rescaled to integers around the GCD.  Inside the GCD all arithmetic is
"raw" (bases treated as free variables), which is always a sound
under-approximation of divisibility.  Floating-point coefficients poison a
polynomial: inexact polynomials are excluded from GCD cancellation.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd as _igcd

from .nodes import (
    IMAG_NAME,
    Apply,
    Const,
    Expr,
    Power,
    Product,
    Quotient,
    Sum,
    SymConst,
    Var,
)

__all__ = [
    "simplify",
    "is_zero",
    "as_constant",
    "ratform",
    "poly_to_expr",
    "poly_in_var",
    "NormalizationError",
]

Monomial = tuple  # tuple[tuple[Expr, Fraction], ...] sorted by base key
Poly = dict  # dict[Monomial, Fraction | float]

F0 = Fraction(0)
F1 = Fraction(1)
MONO_ONE: Monomial = ()
P_ZERO: Poly = {}


def P_ONE() -> Poly:
    return {MONO_ONE: F1}


class NormalizationError(ValueError):
    pass


# --- deterministic ordering -------------------------------------------------

_TERMINATOR = ((99,), F0)


def sort_key(e: Expr):
    """Total deterministic order on canonical expressions."""
    if isinstance(e, Const):
        v = e.value
        if isinstance(v, Fraction):
            return (0, 0, v.numerator, v.denominator)
        return (0, 1, v)
    if isinstance(e, Var):
        return (1, e.name)
    if isinstance(e, SymConst):
        return (2, e.name)
    if isinstance(e, Apply):
        return (3, e.fn, sort_key(e.arg))
    if isinstance(e, Power):
        return (4, sort_key(e.base), sort_key(e.exponent))
    if isinstance(e, Product):
        return (5,) + tuple(sort_key(f) for f in e.factors)
    if isinstance(e, Sum):
        return (6,) + tuple(sort_key(t) for t in e.terms)
    if isinstance(e, Quotient):
        return (7, sort_key(e.num), sort_key(e.den))
    raise TypeError(f"no sort key for {e!r}")


def mono_sort_key(m: Monomial):
    """Key under which ascending order lists leading monomials first."""
    return tuple((sort_key(b), -e) for b, e in m) + (_TERMINATOR,)


def _leading(p: Poly) -> tuple[Monomial, object]:
    m = min(p, key=mono_sort_key)
    return m, p[m]


# --- raw polynomial arithmetic (bases as free variables) ---------------------


def _mono_sorted(pairs) -> Monomial:
    return tuple(sorted(pairs, key=lambda be: sort_key(be[0])))


def raw_mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    exps: dict[Expr, Fraction] = dict(m1)
    for b, e in m2:
        ne = exps.get(b, F0) + e
        if ne == 0:
            exps.pop(b, None)
        else:
            exps[b] = ne
    return _mono_sorted(exps.items())


def raw_mono_div(m1: Monomial, m2: Monomial) -> Monomial | None:
    exps: dict[Expr, Fraction] = dict(m1)
    for b, e in m2:
        ne = exps.get(b, F0) - e
        if ne < 0:
            return None
        if ne == 0:
            exps.pop(b, None)
        else:
            exps[b] = ne
    return _mono_sorted(exps.items())


def p_add(p1: Poly, p2: Poly) -> Poly:
    out = dict(p1)
    for m, c in p2.items():
        nc = out.get(m, F0) + c
        if nc == 0 and not isinstance(nc, float):
            out.pop(m, None)
        elif nc == 0.0 and isinstance(nc, float):
            out.pop(m, None)
        else:
            out[m] = nc
    return out


def p_neg(p: Poly) -> Poly:
    return {m: -c for m, c in p.items()}


def p_scale(p: Poly, c) -> Poly:
    if c == 0:
        return {}
    return {m: cc * c for m, cc in p.items()}


_WORK_BUDGET = 150000
_WORK: int | None = None


def _work(n: int) -> None:
    global _WORK
    if _WORK is not None:
        _WORK -= n
        if _WORK < 0:
            raise NormalizationError("polynomial GCD work budget exceeded")


def p_mul_raw(p1: Poly, p2: Poly) -> Poly:
    out: Poly = {}
    _work(len(p1) * len(p2))
    for m1, c1 in p1.items():
        for m2, c2 in p2.items():
            m = raw_mono_mul(m1, m2)
            nc = out.get(m, F0) + c1 * c2
            if nc == 0 and not isinstance(nc, float):
                out.pop(m, None)
            else:
                out[m] = nc
    return {m: c for m, c in out.items() if not (isinstance(c, float) and c == 0.0)}


def poly_is_exact(p: Poly) -> bool:
    return all(isinstance(c, Fraction) for c in p.values())


def is_const_poly(p: Poly) -> bool:
    return not p or (len(p) == 1 and MONO_ONE in p)


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    return Fraction(_igcd(a.numerator, b.numerator),
                    (a.denominator * b.denominator) // _igcd(a.denominator, b.denominator))


def _content_signed(p: Poly) -> Fraction:
    """GCD of coefficients carrying the sign of the leading coefficient."""
    acc = F0
    for c in p.values():
        acc = _frac_gcd(acc, abs(c)) if acc else abs(c)
    if not p:
        return F1
    _, lead = _leading(p)
    return acc if lead > 0 else -acc


# --- multivariate GCD via primitive pseudo-remainder sequences ---------------


def _bases_of(p: Poly) -> set:
    out = set()
    for m in p:
        for b, _ in m:
            out.add(b)
    return out


def _univ(p: Poly, x: Expr) -> dict[int, Poly]:
    out: dict[int, Poly] = {}
    for m, c in p.items():
        deg = 0
        rest = []
        for b, e in m:
            if b == x:
                deg = int(e)
            else:
                rest.append((b, e))
        out.setdefault(deg, {})[_mono_sorted(rest)] = c
    return out


def _from_univ(u: dict[int, Poly], x: Expr) -> Poly:
    out: Poly = {}
    for deg, coeff in u.items():
        for m, c in coeff.items():
            mm = raw_mono_mul(m, ((x, Fraction(deg)),)) if deg else m
            out[mm] = out.get(mm, F0) + c
    return {m: c for m, c in out.items() if c != 0}


def divexact_raw(a: Poly, b: Poly) -> Poly | None:
    """Exact raw quotient a/b, or None when b does not divide a."""
    if not b:
        return None
    if not a:
        return {}
    lb_m, lb_c = _leading(b)
    q: Poly = {}
    r = dict(a)
    while r:
        lr_m, lr_c = _leading(r)
        qm = raw_mono_div(lr_m, lb_m)
        if qm is None:
            return None
        qc = lr_c / lb_c
        q[qm] = q.get(qm, F0) + qc
        piece = p_mul_raw({qm: qc}, b)
        r = p_add(r, p_neg(piece))
    return q


def _gcd_list(polys: list[Poly]) -> Poly:
    acc = polys[0]
    for p in polys[1:]:
        if is_const_poly(acc):
            return P_ONE()
        acc = _gcd_mv(acc, p)
    if is_const_poly(acc):
        return P_ONE()
    return acc


def _primitive(p: Poly, x: Expr | None = None) -> Poly:
    """Divide by content w.r.t. ``x`` (constant and polynomial), sign-normalise."""
    if not p:
        return p
    bases = _bases_of(p)
    if not bases:
        return P_ONE()
    if x is None or x not in bases:
        x = max(bases, key=sort_key)
    u = _univ(p, x)
    cont = _gcd_list(list(u.values()))
    if not is_const_poly(cont):
        u2 = {d: divexact_raw(c, cont) for d, c in u.items()}
        if all(c is not None for c in u2.values()):
            p = _from_univ(u2, x)
    c = _content_signed(p)
    return p_scale(p, 1 / c)


def _prem(f: dict[int, Poly], g: dict[int, Poly]) -> dict[int, Poly]:
    """Pseudo-remainder of univariate polys with Poly coefficients."""
    dg = max(g)
    lcg = g[dg]
    r = {d: dict(c) for d, c in f.items()}
    guard = 0
    while r and max(r) >= dg:
        guard += 1
        if guard > 1000:
            raise NormalizationError("pseudo-division did not terminate")
        dr = max(r)
        lcr = r[dr]
        shift = dr - dg
        new: dict[int, Poly] = {}
        for d, c in r.items():
            new[d] = p_mul_raw(c, lcg)
        for d, c in g.items():
            dd = d + shift
            piece = p_mul_raw(c, lcr)
            new[dd] = p_add(new.get(dd, {}), p_neg(piece))
        r = {d: c for d, c in new.items() if c}
    return r


def _gcd_mv(a: Poly, b: Poly) -> Poly:
    if not a:
        return _primitive(b) if b else P_ONE()
    if not b:
        return _primitive(a)
    if is_const_poly(a) or is_const_poly(b):
        return P_ONE()
    shared = _bases_of(a) & _bases_of(b)
    if not shared:
        return P_ONE()

    def max_deg(p: Poly, base: Expr) -> Fraction:
        d = F0
        for m in p:
            for bs, e in m:
                if bs == base and e > d:
                    d = e
        return d

    x = min(shared, key=lambda s: (min(max_deg(a, s), max_deg(b, s)), sort_key(s)))
    au, bu = _univ(a, x), _univ(b, x)
    cont_a = _primitive(a) if max(au) == 0 else _gcd_list(list(au.values()))
    cont_b = _primitive(b) if max(bu) == 0 else _gcd_list(list(bu.values()))
    c = _gcd_mv(cont_a, cont_b)
    if max(au) == 0 or max(bu) == 0:
        return c
    ppa = {d: divexact_raw(p, cont_a) for d, p in au.items()}
    ppb = {d: divexact_raw(p, cont_b) for d, p in bu.items()}
    if any(p is None for p in ppa.values()) or any(p is None for p in ppb.values()):
        raise NormalizationError("content division failed")
    f, g = (ppa, ppb) if max(ppa) >= max(ppb) else (ppb, ppa)
    while True:
        if not g:
            winner = f
            break
        if max(g) == 0:
            winner = {0: P_ONE()}
            break
        r = _prem(f, g)
        if not r:
            winner = g
            break
        rp = _from_univ(r, x)
        rp = _primitive(rp, x)
        f, g = g, _univ(rp, x)
    gp = _primitive(_from_univ(winner, x), x)
    return p_mul_raw(c, gp)


def _scaled_copy(p: Poly, scale: dict[Expr, int]) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        mm = _mono_sorted((b, e * scale.get(b, 1)) for b, e in m)
        out[mm] = c
    return out


def _unscaled_copy(p: Poly, scale: dict[Expr, int]) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        mm = _mono_sorted((b, e / scale.get(b, 1)) for b, e in m)
        out[mm] = c
    return out


def _mono_content(p: Poly) -> Monomial:
    """Largest monomial dividing every monomial of ``p``."""
    acc: dict[Expr, Fraction] | None = None
    for m in p:
        if acc is None:
            acc = dict(m)
        else:
            for b in list(acc):
                e = dict(m).get(b, F0)
                if e <= 0:
                    acc.pop(b)
                else:
                    acc[b] = min(acc[b], e)
        if not acc:
            break
    return _mono_sorted((acc or {}).items())


def _strip_mono(p: Poly, m: Monomial) -> Poly:
    if not m:
        return p
    out: Poly = {}
    for mm, c in p.items():
        q = raw_mono_div(mm, m)
        out[q] = c
    return out


def gcd_poly(a: Poly, b: Poly) -> Poly:
    """Common divisor of ``a`` and ``b`` (1 when no cancellation applies).

    Best effort: a work budget bounds the PRS; when exceeded only the common
    monomial factor is cancelled.  Any returned divisor is verified by exact
    division, so the result is always sound.
    """
    if not a or not b or not poly_is_exact(a) or not poly_is_exact(b):
        return P_ONE()
    if is_const_poly(a) or is_const_poly(b):
        return P_ONE()
    ca, cb = _mono_content(a), _mono_content(b)
    common: dict[Expr, Fraction] = {}
    dca, dcb = dict(ca), dict(cb)
    for base in set(dca) & set(dcb):
        common[base] = min(dca[base], dcb[base])
    g_mono = _mono_sorted(common.items())
    mono_part: Poly = {g_mono: F1}
    a1, b1 = _strip_mono(a, ca), _strip_mono(b, cb)
    global _WORK
    _WORK = _WORK_BUDGET
    try:
        g = None
        # proportionality fast path covers the common equal-denominator case
        for small, big in ((a1, b1), (b1, a1)):
            if len(small) <= len(big) and divexact_raw(big, small) is not None:
                g = p_mul_raw(mono_part, _primitive(small))
                break
        if g is None:
            scale: dict[Expr, int] = {}
            for p in (a1, b1):
                for m in p:
                    for base, e in m:
                        d = e.denominator
                        prev = scale.get(base, 1)
                        scale[base] = prev * d // _igcd(prev, d)
            g = _gcd_mv(_scaled_copy(a1, scale), _scaled_copy(b1, scale))
            g = p_mul_raw(mono_part, _unscaled_copy(g, scale))
    except NormalizationError:
        g = mono_part
    finally:
        _WORK = None
    if is_const_poly(g):
        return mono_part if g_mono else P_ONE()
    if divexact_raw(a, g) is None or divexact_raw(b, g) is None:
        return mono_part if g_mono else P_ONE()
    return g


# --- canonical normalisation --------------------------------------------------

_I_ATOM = SymConst(IMAG_NAME)
_ODD_FNS = {"sin", "sinh", "tanh"}
_EVEN_FNS = {"cos", "cosh"}
_ZERO_ARG_VALUE = {"sin": 0, "sinh": 0, "tanh": 0, "cos": 1, "cosh": 1}


def _is_expandable(b: Expr) -> bool:
    """Composite bases whose integer powers multiply out into the ring."""
    if isinstance(b, (Sum, Product, Const)):
        return True
    if isinstance(b, Power) and isinstance(b.exponent, Const) and b.exponent.is_exact:
        return True
    return False


def _iroot(n: int, r: int) -> int | None:
    if n == 0:
        return 0
    x = round(n ** (1.0 / r))
    for cand in (x - 1, x, x + 1):
        if cand >= 0 and cand ** r == n:
            return cand
    return None


def _exact_root(c: Fraction, q: Fraction) -> Fraction | None:
    """``c ** q`` as an exact positive rational, or None."""
    if c <= 0:
        return None
    a = _iroot(c.numerator, q.denominator)
    b = _iroot(c.denominator, q.denominator)
    if a is None or b is None or b == 0:
        return None
    return Fraction(a, b) ** q.numerator


class _Normalizer:
    def __init__(self):
        self.cache: dict[Expr, tuple[Poly, Poly]] = {}

    # -- canonical polynomial arithmetic --

    def mono_canon(self, exps: dict, coeff) -> Poly:
        out: dict[Expr, Fraction] = {}
        extras: list[Poly] = []
        for b, e in exps.items():
            if e == 0:
                continue
            if b == _I_ATOM and e.denominator == 1:
                k = e % 2
                if int((e - k) / 2) % 2:
                    coeff = -coeff
                if k:
                    out[b] = F1
                continue
            if _is_expandable(b):
                f = e % 1
                i = e - f
                if i < 0:
                    raise NormalizationError("negative composite power in monomial")
                if i:
                    extras.append(self.int_pow(self.base_poly(b), int(i)))
                if f:
                    out[b] = f
            else:
                out[b] = e
        poly: Poly = {_mono_sorted(out.items()): coeff}
        for q in extras:
            poly = self.p_mul(poly, q)
        return poly

    def p_mul(self, p1: Poly, p2: Poly) -> Poly:
        out: Poly = {}
        for m1, c1 in p1.items():
            for m2, c2 in p2.items():
                exps = dict(m1)
                for b, e in m2:
                    exps[b] = exps.get(b, F0) + e
                for m, c in self.mono_canon(exps, c1 * c2).items():
                    nc = out.get(m, F0) + c
                    if nc == 0 and not isinstance(nc, float):
                        out.pop(m, None)
                    else:
                        out[m] = nc
        return {m: c for m, c in out.items() if not (isinstance(c, float) and c == 0.0)}

    def p_recanon(self, p: Poly) -> Poly:
        out: Poly = {}
        for m, c in p.items():
            for mm, cc in self.mono_canon(dict(m), c).items():
                nc = out.get(mm, F0) + cc
                if nc == 0 and not isinstance(nc, float):
                    out.pop(mm, None)
                else:
                    out[mm] = nc
        return {m: c for m, c in out.items() if not (isinstance(c, float) and c == 0.0)}

    def int_pow(self, p: Poly, k: int) -> Poly:
        if k == 0:
            return P_ONE()
        acc = P_ONE()
        base = p
        n = k
        while n:
            if n & 1:
                acc = self.p_mul(acc, base)
            n >>= 1
            if n:
                base = self.p_mul(base, base)
        return acc

    def base_poly(self, b: Expr) -> Poly:
        n, d = self.rf(b)
        if d != P_ONE():
            raise NormalizationError(f"expected polynomial base, got quotient: {b!r}")
        return n

    # -- ratform building --

    def rf(self, e: Expr) -> tuple[Poly, Poly]:
        hit = self.cache.get(e)
        if hit is not None:
            return hit
        out = self._rf(e)
        self.cache[e] = out
        return out

    def _rf(self, e: Expr) -> tuple[Poly, Poly]:
        if isinstance(e, Const):
            v = e.value
            if v == 0 and not isinstance(v, float):
                return ({}, P_ONE())
            return ({MONO_ONE: v}, P_ONE())
        if isinstance(e, (Var, SymConst)):
            return ({((e, F1),): F1}, P_ONE())
        if isinstance(e, Sum):
            acc = ({}, P_ONE())
            for t in e.terms:
                acc = self.rf_add(acc, self.rf(t))
            return acc
        if isinstance(e, Product):
            acc = (P_ONE(), P_ONE())
            for f in e.factors:
                acc = self.rf_mul(acc, self.rf(f))
            return acc
        if isinstance(e, Quotient):
            return self.rf_div(self.rf(e.num), self.rf(e.den))
        if isinstance(e, Power):
            q = self._const_rational(e.exponent)
            if q is not None:
                return self.rf_pow(self.rf(e.base), q)
            base = self.expr_of(self.rf(e.base))
            expo = self.expr_of(self.rf(e.exponent))
            atom = Power(base, expo)
            return ({((atom, F1),): F1}, P_ONE())
        if isinstance(e, Apply):
            return self.apply_fn(e.fn, e.arg)
        raise TypeError(f"cannot normalise {e!r}")

    def _const_rational(self, e: Expr) -> Fraction | None:
        n, d = self.rf(e)
        if is_const_poly(n) and is_const_poly(d):
            cn = n.get(MONO_ONE, F0)
            cd = d.get(MONO_ONE, F1)
            if isinstance(cn, Fraction) and isinstance(cd, Fraction):
                return cn / cd
        return None

    def rf_add(self, a, b):
        n1, d1 = a
        n2, d2 = b
        if not n1:
            return b
        if not n2:
            return a
        if d1 == d2:
            return (p_add(n1, n2), d1)
        g = gcd_poly(d1, d2)
        if is_const_poly(g):
            return (p_add(self.p_mul(n1, d2), self.p_mul(n2, d1)), self.p_mul(d1, d2))
        d1r = divexact_raw(d1, g)
        d2r = divexact_raw(d2, g)
        if d1r is None or d2r is None:
            return (p_add(self.p_mul(n1, d2), self.p_mul(n2, d1)), self.p_mul(d1, d2))
        d1r, d2r = self.p_recanon(d1r), self.p_recanon(d2r)
        num = p_add(self.p_mul(n1, d2r), self.p_mul(n2, d1r))
        return (num, self.p_mul(d1, d2r))

    def rf_mul(self, a, b):
        n1, d1 = a
        n2, d2 = b
        return (self.p_mul(n1, n2), self.p_mul(d1, d2))

    def rf_div(self, a, b):
        n2, d2 = b
        if not n2:
            raise NormalizationError("division by an expression that simplifies to zero")
        return self.rf_mul(a, (d2, n2))

    def rf_pow(self, a, q: Fraction):
        n, d = a
        if q == 0:
            return (P_ONE(), P_ONE())
        if q.denominator == 1:
            k = int(q)
            if k > 0:
                return (self.int_pow(n, k), self.int_pow(d, k))
            if not n:
                raise NormalizationError("zero raised to a negative power")
            return (self.int_pow(d, -k), self.int_pow(n, -k))
        if q < 0:
            if not n:
                raise NormalizationError("zero raised to a negative power")
            n, d, q = d, n, -q
        return self.rf_div(self.frac_pow(n, q), self.frac_pow(d, q))

    def frac_pow(self, p: Poly, q: Fraction):
        """``p ** q`` for q > 0 with fractional part; returns a ratform."""
        if not p:
            return ({}, P_ONE())
        i = q - (q % 1)
        f = q % 1
        coeff_out = F1
        base = p
        if poly_is_exact(p):
            c = _content_signed(p)
            root = _exact_root(abs(c), q)
            if root is not None and abs(c) != 1:
                coeff_out = root
                base = p_scale(p, 1 / abs(c))
        intpart = self.int_pow(base, int(i)) if i else P_ONE()
        fr = self.frac_atom(base, f)
        return (p_scale(self.p_mul(intpart, fr), coeff_out), P_ONE())

    def frac_atom(self, p: Poly, f: Fraction) -> Poly:
        if len(p) == 1:
            [(m, c)] = p.items()
            if c == 1 and not isinstance(c, float):
                if m == MONO_ONE:
                    return P_ONE()
                if len(m) == 1 and m[0][1] == 1 and not _is_expandable(m[0][0]):
                    return {((m[0][0], f),): F1}
                if all(isinstance(b, Apply) and b.fn == "exp" for b, _ in m):
                    return {tuple((b, e * f) for b, e in m): F1}
        base_expr = self.poly_expr(p)
        return {((base_expr, f),): F1}

    # -- function applications --

    def apply_fn(self, fn: str, arg: Expr):
        arf = self.normalize_rf(self.rf(arg))
        if fn == "sqrt":
            return self.rf_pow(arf, Fraction(1, 2))
        n, d = arf
        if fn == "exp":
            return self.exp_rf(arf)
        if fn == "ln":
            return self.ln_rf(arf)
        if fn == "lambertW":
            if not n:
                return ({}, P_ONE())
            return self._atom_rf(Apply("lambertW", self.rebuild(arf)))
        if not n:
            v = _ZERO_ARG_VALUE[fn]
            return ({MONO_ONE: Fraction(v)}, P_ONE()) if v else ({}, P_ONE())
        _, lead = _leading(n)
        if lead < 0:
            flipped = (p_neg(n), d)
            inner = Apply(fn, self.rebuild(flipped))
            if fn in _ODD_FNS:
                return (p_scale(self._atom_rf(inner)[0], Fraction(-1)), P_ONE())
            return self._atom_rf(inner)
        return self._atom_rf(Apply(fn, self.rebuild(arf)))

    def _atom_rf(self, atom: Expr):
        return ({((atom, F1),): F1}, P_ONE())

    def exp_rf(self, arf):
        n, d = arf
        if not n:
            return (P_ONE(), P_ONE())
        acc = (P_ONE(), P_ONE())
        rest: Poly = {}
        # exp(q*ln(r) + rest) = r^q * exp(rest) for rational q; the denominator
        # must be a single monomial for the per-term coefficient to be exact
        if poly_is_exact(n) and poly_is_exact(d) and len(d) == 1:
            [(dm, dc)] = d.items()
            for m, c in n.items():
                lns = [(b, e) for b, e in m if isinstance(b, Apply) and b.fn == "ln"]
                if len(lns) == 1 and lns[0][1] == 1:
                    rest_m = tuple(be for be in m if be != lns[0])
                    q_mono = raw_mono_div(rest_m, dm)
                    if q_mono == MONO_ONE:
                        acc = self.rf_mul(acc, self.rf_pow(self.rf(lns[0][0].arg), c / dc))
                        continue
                rest[m] = c
        else:
            rest = n
        if not rest:
            return acc
        if poly_is_exact(rest) and poly_is_exact(d):
            cn = _content_signed(rest)
            cd = abs(_content_signed(d))
            c = cn / cd
            prim = (p_scale(rest, 1 / cn), p_scale(d, 1 / cd))
            atom = Apply("exp", self.rebuild((p_scale(prim[0], F1), prim[1])))
            if c > 0:
                return self.rf_mul(acc, ({((atom, c),): F1}, P_ONE()))
            return self.rf_mul(acc, (P_ONE(), {((atom, -c),): F1}))
        atom = Apply("exp", self.rebuild((rest, d)))
        return self.rf_mul(acc, self._atom_rf(atom))

    def ln_rf(self, arf):
        n, d = arf
        if not n:
            raise NormalizationError("ln of an expression that simplifies to zero")
        if n == P_ONE() and d == P_ONE():
            return ({}, P_ONE())
        if n == P_ONE() and d != P_ONE():
            inner = self.ln_rf((d, P_ONE()))
            return (p_neg(inner[0]), inner[1])
        if d == P_ONE() and len(n) == 1:
            [(m, c)] = n.items()
            if c == 1 and not isinstance(c, float) and len(m) == 1:
                b, e = m[0]
                if isinstance(b, Apply) and b.fn == "exp":
                    inner = self.normalize_rf(self.rf(b.arg))
                    return (p_scale(inner[0], e), inner[1])
        return self._atom_rf(Apply("ln", self.rebuild(arf)))

    # -- normalisation, rebuilding --

    def _tanh_rule(self, n: Poly, d: Poly):
        [(mn, cn)] = n.items()
        [(md, cd)] = d.items()
        num = dict(mn)
        den = dict(md)
        changed = False
        for b in list(num):
            if isinstance(b, Apply) and b.fn == "sinh":
                partner = Apply("cosh", b.arg)
                if partner in den:
                    t = min(num[b], den[partner])
                    if t > 0:
                        changed = True
                        tanh_atom = Apply("tanh", b.arg)
                        num[tanh_atom] = num.get(tanh_atom, F0) + t
                        num[b] -= t
                        den[partner] -= t
        if not changed:
            return n, d
        nn = self.mono_canon(num, cn)
        dd = self.mono_canon(den, cd)
        return nn, dd

    def normalize_rf(self, a):
        n, d = a
        if not d:
            raise NormalizationError("zero denominator")
        if not n:
            return ({}, P_ONE())
        g = gcd_poly(n, d)
        if not is_const_poly(g):
            nq, dq = divexact_raw(n, g), divexact_raw(d, g)
            if nq is not None and dq is not None:
                n, d = self.p_recanon(nq), self.p_recanon(dq)
        if len(n) == 1 and len(d) == 1:
            n, d = self._tanh_rule(n, d)
        if poly_is_exact(n) and poly_is_exact(d):
            lcm = 1
            for c in list(n.values()) + list(d.values()):
                lcm = lcm * c.denominator // _igcd(lcm, c.denominator)
            g_int = 0
            for c in list(n.values()) + list(d.values()):
                g_int = _igcd(g_int, abs(c.numerator * (lcm // c.denominator)))
            s = Fraction(lcm, g_int if g_int else 1)
            _, lead_d = _leading(d)
            if lead_d < 0:
                s = -s
            n, d = p_scale(n, s), p_scale(d, s)
        else:
            _, lead_d = _leading(d)
            n, d = p_scale(n, 1 / lead_d), p_scale(d, 1 / lead_d)
        return n, d

    def poly_expr(self, p: Poly) -> Expr:
        if not p:
            return Const(Fraction(0))
        terms = []
        for m in sorted(p, key=mono_sort_key):
            c = p[m]
            factors: list[Expr] = []
            for b, e in m:
                factors.append(b if e == 1 else Power(b, Const(e)))
            if not factors:
                terms.append(Const(c))
            elif c == 1 and not isinstance(c, float):
                terms.append(factors[0] if len(factors) == 1 else Product(tuple(factors)))
            else:
                terms.append(Product((Const(c),) + tuple(factors)))
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def rebuild(self, a) -> Expr:
        n, d = a
        if not n:
            return Const(Fraction(0))
        if d == P_ONE():
            return self.poly_expr(n)
        if is_const_poly(d):
            c = d[MONO_ONE]
            return self.poly_expr(p_scale(n, 1 / c))
        return Quotient(self.poly_expr(n), self.poly_expr(d))

    def expr_of(self, a) -> Expr:
        return self.rebuild(self.normalize_rf(a))


_NORM = _Normalizer()


def clear_cache() -> None:
    _NORM.cache.clear()


def ratform(e: Expr) -> tuple[Poly, Poly]:
    """Cancelled, scaled (numerator, denominator) polynomial pair."""
    return _NORM.normalize_rf(_NORM.rf(e))


def simplify(e: Expr) -> Expr:
    """Canonical form: flattened, sorted, GCD-cancelled; idempotent."""
    return _NORM.rebuild(ratform(e))


def is_zero(e: Expr) -> bool:
    return not ratform(e)[0]


def as_constant(e: Expr):
    """Value of an expression with empty monomial support, else None."""
    n, d = ratform(e)
    if not n:
        return Fraction(0)
    if is_const_poly(n) and is_const_poly(d):
        return n[MONO_ONE] / d[MONO_ONE]
    return None


def poly_to_expr(p: Poly) -> Expr:
    return _NORM.poly_expr(p)


def _base_mentions(b: Expr, name: str) -> bool:
    from .nodes import free_variables
    return b == Var(name) or name in free_variables(b)


def poly_in_var(e: Expr, name: str):
    """View ``e`` as a polynomial in variable ``name`` over expression coefficients.

    Returns ``(coeffs, den_expr)`` with ``coeffs`` a dict degree -> Expr and
    ``den_expr`` free of the variable, or None when ``e`` is not polynomial
    in the variable (appears inside functions, radicals or the denominator).
    """
    n, d = ratform(e)
    var = Var(name)
    for m in d:
        for b, _ in m:
            if _base_mentions(b, name):
                return None
    coeffs: dict[int, Poly] = {}
    for m, c in n.items():
        deg = 0
        rest = []
        for b, e_ in m:
            if b == var:
                if e_.denominator != 1 or e_ < 0:
                    return None
                deg = int(e_)
            elif _base_mentions(b, name):
                return None
            else:
                rest.append((b, e_))
        coeffs.setdefault(deg, {})[_mono_sorted(rest)] = c
    return ({k: poly_to_expr(v) for k, v in coeffs.items()},
            poly_to_expr(d))
