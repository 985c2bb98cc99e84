"""Exact and analytic arithmetic for the curves y^2 = x^3 + k over Q.

Exact group law and torsion for rational points, Tate's algorithm for local
reduction data, period lattices and Weierstrass functions on the analytic
side, and the 3-isogeny that turns rational points into cube sum witnesses.
Transcendental routines run at the precision managed by `core` and add
guard bits internally.
"""
from __future__ import annotations

import gmpy2
from gmpy2 import mpc, mpfr, mpq, mpz
import sympy

from . import core
from .core import PrecisionError, to_mpc, to_mpfr

_VINF = 10**9  # stand-in valuation for 0


class Pt:
    """A rational point on y^2 = x^3 + k, or the point at infinity."""

    __slots__ = ("x", "y")

    def __init__(self, x=None, y=None):
        if x is None:
            self.x = None
            self.y = None
        else:
            self.x = mpq(x)
            self.y = mpq(y)

    @classmethod
    def infinity(cls):
        return cls()

    @property
    def is_infinity(self):
        return self.x is None

    def __eq__(self, other):
        if not isinstance(other, Pt):
            return NotImplemented
        return self.x == other.x and self.y == other.y

    def __hash__(self):
        return hash((self.x, self.y))

    def __repr__(self):
        if self.is_infinity:
            return "Pt(inf)"
        return f"Pt({self.x}, {self.y})"


INF = Pt.infinity()


def on_curve(k, P) -> bool:
    if P.is_infinity:
        return True
    return P.y * P.y == P.x**3 + k


def neg(P) -> Pt:
    if P.is_infinity:
        return INF
    return Pt(P.x, -P.y)


def add(k, P, Q) -> Pt:
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    if P.x == Q.x:
        if P.y + Q.y == 0:
            return INF
        lam = 3 * P.x * P.x / (2 * P.y)
    else:
        lam = (Q.y - P.y) / (Q.x - P.x)
    x3 = lam * lam - P.x - Q.x
    y3 = lam * (P.x - x3) - P.y
    return Pt(x3, y3)


def mul(k, n, P) -> Pt:
    n = int(n)
    if n < 0:
        n, P = -n, neg(P)
    R = INF
    while n:
        if n & 1:
            R = add(k, R, P)
        P = add(k, P, P)
        n >>= 1
    return R


def order(k, P, cap=12):
    """Order of P in E(Q), or None if it exceeds `cap` (12 suffices over Q)."""
    R = P
    for m in range(1, cap + 1):
        if R.is_infinity:
            return m
        R = add(k, R, P)
    return None


def torsion_points(k) -> list:
    """All torsion points, by the integrality criterion plus an order check."""
    k = mpz(k)
    found = {INF}
    if core.is_perfect_cube(-k):
        found.add(Pt(core.icbrt(-k), 0))
    fac = sympy.factorint(432 * int(k) * int(k))
    ys = [mpz(1)]
    for p, e in fac.items():
        ys = [y * mpz(p) ** i for y in ys for i in range(e // 2 + 1)]
    for y in ys:
        x3 = y * y - k
        if core.is_perfect_cube(x3):
            P = Pt(core.icbrt(x3), y)
            if order(k, P) is not None:
                found.add(P)
                found.add(neg(P))
    return sorted(found, key=lambda P: (not P.is_infinity, P.x, P.y))


def ap_bruteforce(k, p) -> int:
    """Trace of Frobenius by summing quadratic characters of x^3 + k."""
    p = mpz(p)
    k = mpz(k)
    if (432 * k * k) % p == 0:
        raise ValueError("bad reduction at p")
    if p % 3 == 2:
        return 0  # x -> x^3 permutes F_p, so the character sum telescopes
    s = 0
    kp = k % p
    for x in range(p):
        s += gmpy2.legendre((x * x * x + kp) % p, p)
    return -int(s)


# ----------------------------------------------------------------------
# Tate's algorithm


def _vpz(n, p):
    if n == 0:
        return _VINF
    return int(gmpy2.remove(mpz(n), mpz(p))[1])


def _exact_div(a, b):
    q, r = divmod(a, b)
    assert r == 0, "inexact division in Tate's algorithm"
    return q


def _invariants(a1, a2, a3, a4, a6):
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    delta = -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    return b2, b4, b6, b8, delta


def _translate(ai, r=0, s=0, t=0):
    a1, a2, a3, a4, a6 = ai
    r, s, t = mpz(r), mpz(s), mpz(t)
    return (
        a1 + 2 * s,
        a2 - s * a1 + 3 * r - s * s,
        a3 + r * a1 + 2 * t,
        a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t,
        a6 + r * a4 + r * r * a2 + r**3 - t * a3 - t * t - r * t * a1,
    )


def _curve_f(ai, x, y):
    a1, a2, a3, a4, a6 = ai
    f = y * y + a1 * x * y + a3 * y - (x**3 + a2 * x * x + a4 * x + a6)
    fx = a1 * y - 3 * x * x - 2 * a2 * x - a4
    fy = 2 * y + a1 * x + a3
    return f, fx, fy


def _singular_point(ai, p):
    """The (unique, rational) singular point of the reduction mod p."""
    if p <= 3:
        for x in range(p):
            for y in range(p):
                f, fx, fy = _curve_f(ai, mpz(x), mpz(y))
                if f % p == 0 and fx % p == 0 and fy % p == 0:
                    return mpz(x), mpz(y)
        raise AssertionError("singular reduction without a singular point")
    a1, a2, a3, a4, a6 = ai
    b2, b4, b6, _, _ = _invariants(*ai)
    # (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6, singular x is a
    # multiple root of the right side
    den = (2 * (b2 * b2 - 24 * b4)) % p
    if den:
        num = (36 * b6 - 2 * b2 * b4) % p
        x0 = num * gmpy2.invert(den, p) % p
    else:
        x0 = -b2 * gmpy2.invert(12, p) % p
    y0 = -(a1 * x0 + a3) * gmpy2.invert(2, p) % p
    f, fx, fy = _curve_f(ai, x0, y0)
    assert f % p == 0 and fx % p == 0 and fy % p == 0
    return x0, y0


def _quad_has_root(a, b, c, p):
    """Whether a x^2 + b x + c has a root in F_p."""
    if p == 2:
        return c % 2 == 0 or (a + b + c) % 2 == 0
    disc = (b * b - 4 * a * c) % p
    return disc == 0 or gmpy2.legendre(disc, p) == 1


def _normalize_step6(ai, p):
    """Translate so that p | a1, a2; p^2 | a3, a4; p^3 | a6."""
    p2, p3 = p * p, p**3
    if p >= 5:
        s = (-ai[0] * gmpy2.invert(2, p)) % p
        t = (-ai[2] * gmpy2.invert(2, p3)) % p3
        out = _translate(ai, s=s, t=t)
    else:
        out = None
        for s in range(p):
            for t in range(p3):
                cand = _translate(ai, s=s, t=t)
                if (
                    cand[0] % p == 0
                    and cand[1] % p == 0
                    and cand[2] % p2 == 0
                    and cand[3] % p2 == 0
                    and cand[4] % p3 == 0
                ):
                    out = cand
                    break
            if out:
                break
        assert out is not None, "step 6 normalization failed"
    assert out[0] % p == 0 and out[1] % p == 0
    assert out[2] % p2 == 0 and out[3] % p2 == 0 and out[4] % p3 == 0
    return out


def _cubic_structure(A, B, C, p):
    """Root structure of T^3 + A T^2 + B T + C over F_p.

    Returns ("distinct", nroots_in_Fp), ("double", r, simple_root) or
    ("triple", r).
    """
    A, B, C = A % p, B % p, C % p
    if p <= 3:
        coeffs = [mpz(1), A, B, C]
        roots = {}
        for r in range(p):
            cur = list(coeffs)
            m = 0
            while True:
                rem = mpz(0)  # synthetic division by (T - r)
                quo = []
                for cf in cur:
                    rem = (rem * r + cf) % p
                    quo.append(rem)
                if rem != 0:
                    break
                m += 1
                cur = quo[:-1]
                if len(cur) == 1:
                    break
            if m:
                roots[r] = m
        total = sum(roots.values())
        if 3 in roots.values():
            return ("triple", next(r for r, m in roots.items() if m == 3))
        if 2 in roots.values():
            rd = next(r for r, m in roots.items() if m == 2)
            return ("double", rd, (-A - 2 * rd) % p)
        # over F_2/F_3 an inseparable factor would force a rational multiple
        # root, so anything else is separable
        return ("distinct", total)
    disc = (
        18 * A * B * C - 4 * A**3 * C + A * A * B * B - 4 * B**3 - 27 * C * C
    ) % p
    if disc:
        T = sympy.Symbol("T")
        poly = sympy.Poly(T**3 + int(A) * T**2 + int(B) * T + int(C), T, modulus=int(p))
        return ("distinct", len(poly.ground_roots()))
    den = (2 * (A * A - 3 * B)) % p
    if den:
        r = (9 * C - A * B) * gmpy2.invert(den, p) % p
        return ("double", r, (-A - 2 * r) % p)
    return ("triple", (-A * gmpy2.invert(3, p)) % p)


class LocalData:
    """Reduction data at one prime: Kodaira type, conductor exponent,
    Tamagawa number, minimal discriminant valuation and the scaling used."""

    __slots__ = ("p", "kodaira", "f", "c", "vdelta", "u")

    def __init__(self, p, kodaira, f, c, vdelta, u):
        self.p = mpz(p)
        self.kodaira = kodaira
        self.f = int(f)
        self.c = int(c)
        self.vdelta = int(vdelta)
        self.u = mpz(u)

    def __repr__(self):
        return (
            f"LocalData(p={self.p}, {self.kodaira}, f={self.f}, "
            f"c={self.c}, v(delta)={self.vdelta}, u={self.u})"
        )


def tate_local(k, p) -> LocalData:
    """Tate's algorithm for y^2 = x^3 + k at p, minimizing if necessary."""
    p = mpz(p)
    if not gmpy2.is_prime(p):
        raise ValueError("p must be prime")
    ai = (mpz(0), mpz(0), mpz(0), mpz(0), mpz(k))
    u = mpz(1)
    while True:
        b2, b4, b6, b8, delta = _invariants(*ai)
        assert delta != 0
        n = _vpz(delta, p)
        if n == 0:
            return LocalData(p, "I0", 0, 1, 0, u)
        r, t = _singular_point(ai, p)
        ai = _translate(ai, r=r, t=t)
        a1, a2, a3, a4, a6 = ai
        b2, b4, b6, b8, _ = _invariants(*ai)
        assert a3 % p == 0 and a4 % p == 0 and a6 % p == 0
        if b2 % p != 0:
            split = _quad_has_root(1, a1, -a2, p)
            c = n if split else (2 if n % 2 == 0 else 1)
            return LocalData(p, f"I{n}", 1, c, n, u)
        if _vpz(a6, p) < 2:
            return LocalData(p, "II", n, 1, n, u)
        if _vpz(b8, p) < 3:
            return LocalData(p, "III", n - 1, 2, n, u)
        if _vpz(b6, p) < 3:
            c = 3 if _quad_has_root(1, _exact_div(a3, p), -_exact_div(a6, p * p), p) else 1
            return LocalData(p, "IV", n - 2, c, n, u)
        ai = _normalize_step6(ai, p)
        a1, a2, a3, a4, a6 = ai
        kind = _cubic_structure(
            _exact_div(a2, p), _exact_div(a4, p * p), _exact_div(a6, p**3), p
        )
        if kind[0] == "distinct":
            return LocalData(p, "I0*", n - 4, 1 + kind[1], n, u)
        if kind[0] == "double":
            ai = _translate(ai, r=p * kind[1])
            a1, a2, a3, a4, a6 = ai
            assert (a2 // p) % p != 0 and _vpz(a4, p) >= 3 and _vpz(a6, p) >= 4
            m = 1
            mx = my = p * p
            while True:
                a2t = _exact_div(a2, p)
                a3t = _exact_div(a3, my)
                a4t = _exact_div(a4, p * mx)
                a6t = _exact_div(a6, mx * my)
                if (a3t * a3t + 4 * a6t) % p != 0:
                    c = 4 if _quad_has_root(1, a3t, -a6t, p) else 2
                    return LocalData(p, f"I{m}*", n - 4 - m, c, n, u)
                if p == 2:
                    t = my * (a6t % p)
                else:
                    t = my * ((-a3t * gmpy2.invert(2, p)) % p)
                ai = _translate(ai, t=t)
                a1, a2, a3, a4, a6 = ai
                my *= p
                m += 1
                a2t = _exact_div(a2, p)
                a4t = _exact_div(a4, p * mx)
                a6t = _exact_div(a6, mx * my)
                if (a4t * a4t - 4 * a2t * a6t) % p != 0:
                    c = 4 if _quad_has_root(a2t, a4t, a6t, p) else 2
                    return LocalData(p, f"I{m}*", n - 4 - m, c, n, u)
                if p == 2:
                    r = mx * ((a6t * a2t) % p)
                else:
                    r = mx * ((-a4t * gmpy2.invert(2 * a2t, p)) % p)
                ai = _translate(ai, r=r)
                a1, a2, a3, a4, a6 = ai
                mx *= p
                m += 1
        # triple root
        ai = _translate(ai, r=p * kind[1])
        a1, a2, a3, a4, a6 = ai
        assert _vpz(a2, p) >= 2 and _vpz(a4, p) >= 3 and _vpz(a6, p) >= 4
        a3t = _exact_div(a3, p * p)
        a6t = _exact_div(a6, p**4)
        if (a3t * a3t + 4 * a6t) % p != 0:
            c = 3 if _quad_has_root(1, a3t, -a6t, p) else 1
            return LocalData(p, "IV*", n - 6, c, n, u)
        if p == 2:
            y0 = a6t % p
        else:
            y0 = (-a3t * gmpy2.invert(2, p)) % p
        ai = _translate(ai, t=p * p * y0)
        a1, a2, a3, a4, a6 = ai
        assert _vpz(a3, p) >= 3 and _vpz(a6, p) >= 5
        if _vpz(a4, p) < 4:
            return LocalData(p, "III*", n - 7, 2, n, u)
        if _vpz(a6, p) < 6:
            return LocalData(p, "II*", n - 8, 1, n, u)
        assert _vpz(a1, p) >= 1 and _vpz(a2, p) >= 2
        ai = (
            _exact_div(a1, p),
            _exact_div(a2, p * p),
            _exact_div(a3, p**3),
            _exact_div(a4, p**4),
            _exact_div(a6, p**6),
        )
        u *= p


def conductor(k) -> mpz:
    k = mpz(k)
    primes = {mpz(2), mpz(3)}
    primes.update(mpz(p) for p in sympy.factorint(int(abs(k))))
    N = mpz(1)
    for p in sorted(primes):
        N *= p ** tate_local(k, p).f
    return N


# ----------------------------------------------------------------------
# Period lattices and Weierstrass functions

_omega1_cache = {}
_laurent_cache = {}
_quasi_cache = {}


def omega1_ref() -> mpfr:
    """Real period of y^2 = x^3 + 1 for the differential dx/2y."""
    prec = core.get_precision()
    if prec in _omega1_cache:
        return _omega1_cache[prec]
    with core.precision(prec + 32):
        # x^3 + 1 = u (u^2 - 3u + 3) with u = x + 1, so the real period is
        # a complete Carlson integral: pi / agm over the quadratic roots
        s3 = core.sqrt3()
        rp = mpc(to_mpfr(mpq(3, 2)), s3 / 2)
        rm = mpc(to_mpfr(mpq(3, 2)), -s3 / 2)
        m = core.agm(gmpy2.sqrt(-rp), gmpy2.sqrt(-rm))
        om = (core.pi() / m).real
    out = to_mpfr(om)
    _omega1_cache[prec] = out
    return out


def _eipi6():
    return mpc(core.sqrt3() / 2, to_mpfr(mpq(1, 2)))


def lattice(k):
    """Basis (u1, u2) of the period lattice of y^2 = x^3 + k, u2/u1 = e^(i pi/3)."""
    k = mpz(k)
    if k == 0:
        raise ValueError("singular curve")
    om = omega1_ref()
    s3 = core.sqrt3()
    u1 = mpc(om / 2, om / (2 * s3))
    u2 = mpc(to_mpfr(0), om / s3)
    scale = mpc(1 / gmpy2.rootn(to_mpfr(abs(k)), 6))
    if k < 0:
        scale *= _eipi6()
    return u1 * scale, u2 * scale


def real_period(k) -> mpfr:
    """Generator of the intersection of the period lattice with the real line."""
    k = mpz(k)
    om = omega1_ref()
    s = 1 / gmpy2.rootn(to_mpfr(abs(k)), 6)
    if k > 0:
        return om * s
    return om * s / core.sqrt3()


def reduce_mod_lattice(z, basis):
    """Shortest representative of z mod the lattice, with its real coordinates."""
    u1, u2 = basis
    z = to_mpc(z)
    det = u1.real * u2.imag - u2.real * u1.imag
    alpha = (z.real * u2.imag - u2.real * z.imag) / det
    beta = (u1.real * z.imag - z.real * u1.imag) / det
    na = mpz(gmpy2.floor(alpha + mpfr("0.5")))
    nb = mpz(gmpy2.floor(beta + mpfr("0.5")))
    best = None
    for da in (-1, 0, 1):
        for db in (-1, 0, 1):
            cand = z - (na + da) * u1 - (nb + db) * u2
            key = abs(cand)
            if best is None or key < best[0]:
                best = (key, cand, da, db)
    _, z0, da, db = best
    return z0, alpha - na - da, beta - nb - db


def _laurent_exact(k, M):
    """Coefficients c_n, n = 2..M, of p(z) = z^-2 + sum c_n z^(2n-2)."""
    key = int(k)
    have = _laurent_cache.get(key, [])
    if len(have) >= M - 1:
        return have[: M - 1]
    cs = {2: mpq(0), 3: mpq(-k, 7)}
    for n in range(4, M + 1):
        acc = mpq(0)
        for m in range(2, n - 1):
            acc += cs[m] * cs[n - m]
        cs[n] = acc * 3 / ((2 * n + 1) * (n - 3))
    out = [cs[n] for n in range(2, M + 1)]
    _laurent_cache[key] = out
    return out


def _eval_p_series(w, k, M):
    """Laurent values (p(w), p'(w)) near 0."""
    cs = _laurent_exact(k, M)
    w2 = w * w
    pw = 1 / w2
    dpw = -2 / (w2 * w)
    zpow = mpc(1)
    for n in range(2, M + 1):
        zpow *= w2  # now w^(2n-2)
        c = cs[n - 2]
        if c:
            term = to_mpfr(c) * zpow
            pw += term
            dpw += (2 * n - 2) * term / w
    return pw, dpw


def weierstrass_p(z, k):
    """(p(z), p'(z)) for the lattice of y^2 = x^3 + k, so p'^2 = 4p^3 + 4k."""
    k = mpz(k)
    prec = core.get_precision()
    with core.precision(prec + 48):
        z = to_mpc(z)
        basis = lattice(k)
        z0, _, _ = reduce_mod_lattice(z, basis)
        cmin = abs(basis[0])
        if abs(z0 - z) > cmin / 4:
            # the reduction moved z by whole lattice vectors, so any residue
            # smaller than the caller's own rounding noise means the input
            # was a lattice point to the precision it was computed at
            if abs(z0) < cmin * mpfr(2) ** (-prec + 8):
                raise ZeroDivisionError("z is a lattice point")
        elif abs(z0) == 0:
            raise ZeroDivisionError("z is a lattice point")
        h = 0
        w = z0
        while abs(w) > cmin / 4:
            w /= 2
            h += 1
        M = (core.get_precision() // 4) + 16
        pw, dpw = _eval_p_series(w, k, M)
        x, y = pw, dpw / 2  # on y^2 = x^3 + k
        for _ in range(h):
            lam = 3 * x * x / (2 * y)
            x2 = lam * lam - 2 * x
            y = lam * (x - x2) - y
            x = x2
        out = (mpc(x), mpc(2 * y))
    return out


def weierstrass_zeta(z, k):
    """Weierstrass zeta at z, which must lie within the central lattice cell."""
    k = mpz(k)
    prec = core.get_precision()
    with core.precision(prec + 48):
        z = to_mpc(z)
        cmin = abs(lattice(k)[0])
        assert abs(z) < cmin * mpfr("0.8"), "argument not cell-reduced"
        M = int(core.get_precision() / mpfr("1.5")) + 16
        cs = _laurent_exact(k, M)
        acc = 1 / z
        z2 = z * z
        zpow = z  # z^(2n-1)
        for n in range(2, M + 1):
            zpow *= z2
            c = cs[n - 2]
            if c:
                acc -= to_mpfr(c) * zpow / (2 * n - 1)
        out = mpc(acc)
    return out


def log_abs_sigma(z, k):
    """log |sigma(z)| for cell-reduced z."""
    k = mpz(k)
    prec = core.get_precision()
    with core.precision(prec + 48):
        z = to_mpc(z)
        cmin = abs(lattice(k)[0])
        assert abs(z) < cmin * mpfr("0.8"), "argument not cell-reduced"
        M = int(core.get_precision() / mpfr("1.5")) + 16
        cs = _laurent_exact(k, M)
        acc = mpc(0)
        z2 = z * z
        zpow = mpc(1)
        for n in range(2, M + 1):
            zpow *= z2  # now z^(2n-2)
            c = cs[n - 2]
            if c:
                acc += to_mpfr(c) * zpow * z2 / ((2 * n) * (2 * n - 1))
        out = gmpy2.log(abs(z)) - acc.real
    return to_mpfr(out)


def quasi_periods(k):
    """(eta1, eta2) with eta_i = 2 zeta(u_i / 2)."""
    k = mpz(k)
    prec = core.get_precision()
    key = (int(k), prec)
    if key in _quasi_cache:
        return _quasi_cache[key]
    u1, u2 = lattice(k)
    out = (2 * weierstrass_zeta(u1 / 2, k), 2 * weierstrass_zeta(u2 / 2, k))
    _quasi_cache[key] = out
    return out


def _carlson_rf(x, y, z):
    """Carlson's symmetric elliptic integral R_F with principal branches."""
    prec = core.get_precision()
    eps = mpfr(2) ** -(prec + 8)

    def off_cut(w):
        w = to_mpc(w)
        if w.imag == 0 and w.real < 0:
            return mpc(w.real, -w.real * eps)
        return w

    x, y, z = off_cut(x), off_cut(y), off_cut(z)
    nzero = (x == 0) + (y == 0) + (z == 0)
    if nzero > 1:
        raise ValueError("R_F needs at most one zero argument")
    tol = mpfr(2) ** -(prec // 6 + 8)
    for _ in range(8 * prec.bit_length() + 60):
        mu = (x + y + z) / 3
        dev = max(abs(x - mu), abs(y - mu), abs(z - mu)) / abs(mu)
        if dev < tol:
            break
        sx, sy, sz = gmpy2.sqrt(x), gmpy2.sqrt(y), gmpy2.sqrt(z)
        lam = sx * sy + sy * sz + sz * sx
        x, y, z = (x + lam) / 4, (y + lam) / 4, (z + lam) / 4
    else:
        raise PrecisionError("R_F duplication failed to converge")
    X = 1 - x / mu
    Y = 1 - y / mu
    Z = -(X + Y)
    E2 = X * Y - Z * Z
    E3 = X * Y * Z
    series = (
        1 - E2 / 10 + E3 / 14 + E2 * E2 / 24 - 3 * E2 * E3 / 44
    )
    return series / gmpy2.sqrt(mu)


def elliptic_log(k, x, y):
    """z with p(z) = x and p'(z) = 2y, as a principal representative mod the lattice."""
    k = mpz(k)
    prec = core.get_precision()
    with core.precision(prec + 48):
        x = to_mpc(x)
        y = to_mpc(y)
        rad = gmpy2.rootn(to_mpfr(abs(k)), 3)
        s3 = core.sqrt3()
        if k > 0:
            roots = (
                mpc(-rad),
                mpc(rad / 2, rad * s3 / 2),
                mpc(rad / 2, -rad * s3 / 2),
            )
        else:
            roots = (
                mpc(rad),
                mpc(-rad / 2, rad * s3 / 2),
                mpc(-rad / 2, -rad * s3 / 2),
            )
        z = _carlson_rf(x - roots[0], x - roots[1], x - roots[2])
        _, dp = weierstrass_p(z, k)
        if abs(dp / 2 - y) > abs(dp / 2 + y):
            z = -z
        scale = max(mpfr(1), abs(y))
        for _ in range(4):
            px, dp = weierstrass_p(z, k)
            if abs(dp) > scale * mpfr(2) ** (-prec // 2):
                z += (x - px) / dp
        px, _ = weierstrass_p(z, k)
        assert abs(px - x) <= max(mpfr(1), abs(x)) * mpfr(2) ** (-prec + 40)
        out = mpc(z)
    return out


def elliptic_log_point(k, P):
    if P.is_infinity:
        raise ValueError("the point at infinity has no elliptic log")
    return elliptic_log(k, P.x, P.y)


def canonical_height(k, P) -> mpfr:
    """Neron-Tate height with h(nP) = n^2 h(P); torsion points get 0.

    Normalized as h(P) = lim h_x(2^m P) / 4^m, the convention in which
    the rank-one Birch Swinnerton-Dyer quotient L'(1) / (Omega c) equals
    the height of a generator times Sha / torsion^2.

    Requires y^2 = x^3 + k to be a minimal model, which holds whenever
    v_p(k) < 6 for p > 3 and the curve is not a rescaling at 2 or 3.
    """
    k = mpz(k)
    if P.is_infinity or order(k, P) is not None:
        return to_mpfr(0)
    for p in (2, 3):
        if tate_local(k, p).u != 1:
            raise ValueError("model is not minimal at %d" % p)
    for p, e in sympy.factorint(int(k)).items():
        if p > 3 and e >= 6:
            raise ValueError("model is not minimal at %d" % p)
    prec = core.get_precision()
    Q = mul(k, 12, P)
    with core.precision(prec + 96):
        z = elliptic_log(k, Q.x, Q.y)
        basis = lattice(k)
        z0, al, be = reduce_mod_lattice(z, basis)
        eta1, eta2 = quasi_periods(k)
        etaz = al * eta1 + be * eta2
        lam = -2 * log_abs_sigma(z0, k) + (z0 * etaz).real
        h = lam + gmpy2.log(to_mpfr(Q.x.denominator))
        out = h / 144
    return to_mpfr(out)


# ----------------------------------------------------------------------
# The 3-isogeny and cube sum witnesses


def isogeny_image(k, P) -> Pt:
    """Image of P under the 3-isogeny y^2 = x^3 + k -> y^2 = x^3 - 27k.

    The kernel is {O, (0, y)}, which maps to the point at infinity.
    """
    if P.is_infinity or P.x == 0:
        return INF
    x, y = P.x, P.y
    x3 = x**3
    return Pt((x3 + 4 * k) / (x * x), y * (x3 - 8 * k) / x3)


def cube_free_normalize(n):
    """(m, c) with n = m c^3, m cube-free and c > 0."""
    n = mpz(n)
    if n == 0:
        raise ValueError("n must be nonzero")
    c = mpz(1)
    for p, e in sympy.factorint(int(abs(n))).items():
        c *= mpz(p) ** (e // 3)
    return n // c**3, c


def cube_sum_from_point(n, P):
    """Exact (a, b) with a^3 + b^3 = 2n from a rational point on y^2 = x^3 + n^2.

    Runs P through the 3-isogeny onto y^2 = x^3 - 432 (2n)^2 and inverts the
    standard parametrization of the Fermat cubic.  Multiples of P stand in
    when P itself meets the isogeny kernel or the line at infinity.
    """
    n = mpz(n)
    k = n * n
    if not on_curve(k, P):
        raise ValueError("point not on y^2 = x^3 + n^2")
    for m in range(1, 7):
        Q = mul(k, m, P)
        R = isogeny_image(k, Q)
        if R.is_infinity:
            continue
        X, Y = 4 * R.x, 8 * R.y  # now on y^2 = x^3 - 432 (2n)^2
        if X == 0:
            continue
        a = (72 * n + Y) / (6 * X)
        b = (72 * n - Y) / (6 * X)
        assert a**3 + b**3 == 2 * n
        return a, b
    raise ValueError("no usable multiple of P; is it torsion?")


def cube_sum_from_companion(n, R):
    """Exact (a, b) with a^3 + b^3 = 2n from a rational point on
    y^2 = x^3 - 27 n^2, the 3-isogenous companion of y^2 = x^3 + n^2.

    Same inversion of the Fermat-cubic parametrization as
    cube_sum_from_point, entered one isogeny step later.
    """
    n = mpz(n)
    k = -27 * n * n
    if not on_curve(k, R):
        raise ValueError("point not on y^2 = x^3 - 27 n^2")
    for m in range(1, 7):
        Q = mul(k, m, R)
        if Q.is_infinity or Q.x == 0:
            continue
        X, Y = 4 * Q.x, 8 * Q.y  # now on y^2 = x^3 - 432 (2n)^2
        a = (72 * n + Y) / (6 * X)
        b = (72 * n - Y) / (6 * X)
        assert a**3 + b**3 == 2 * n
        return a, b
    raise ValueError("no usable multiple of R; is it torsion?")


cube_sum_extract = cube_sum_from_point
