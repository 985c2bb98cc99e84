"""L-series of the sextic twist family y^2 = x^3 + k.

Every curve in the family has complex multiplication by Z[omega], so the
Frobenius trace at a good prime p = 1 mod 3 comes from one norm equation
in Z[omega] twisted by a sextic residue character, and every good prime
p = 2 mod 3 is supersingular with trace zero.  The value and derivative
of L(s) at s = 1 then follow from the functional equation through the
usual exponentially convergent expansions, with the sign read off
numerically from the theta relation rather than assumed.
"""

import math

import gmpy2
from gmpy2 import mpfr, mpz

from . import core, eisenstein
from .ellcurve import conductor

_OMEGA2 = eisenstein.EisInt(-1, -1)


def _unit_images(pi, p):
    """Map of F_p values of the six units, via omega -> -a/b mod p."""
    a = pi.a % p
    b = pi.b % p
    m = (-a * gmpy2.invert(b, p)) % p
    return {
        mpz(1): eisenstein.ONE,
        mpz(p - 1): -eisenstein.ONE,
        m: eisenstein.OMEGA,
        (p - m) % p: -eisenstein.OMEGA,
        (m * m) % p: _OMEGA2,
        (p - m * m) % p: -_OMEGA2,
    }


def ap(k, p):
    """Trace of Frobenius at p for y^2 = x^3 + k, zero at bad primes.

    For good p = 1 mod 3 write p = pi * conj(pi) with pi primary; then
    a_p = -Tr(chi(4k) * conj(pi)) where chi is the sextic residue
    character mod pi, decoded into a unit of Z[omega].  The unit
    convention is frozen by the calibration test against point counts.
    """
    k = mpz(k)
    p = mpz(p)
    if k == 0:
        raise ValueError("k must be nonzero")
    if p <= 3 or p % 3 == 2:
        # p = 3 always ramifies; good p = 2 mod 3 is supersingular; and a
        # model with good reduction at 2 is y^2 + y = x^3 + c, which has
        # exactly three points over F_2, so the trace vanishes there too
        return mpz(0)
    v = 0
    while k % p == 0:
        k = k // p
        v += 1
    if v % 6 != 0:
        return mpz(0)
    pi = eisenstein.split_prime(p)
    t = gmpy2.powmod(4 * k % p, (p - 1) // 6, p)
    u = _unit_images(pi, p)[t]
    w = u * pi.conj()
    return -(2 * w.a - w.b)


def _spf_table(m):
    spf = list(range(m + 1))
    i = 2
    while i * i <= m:
        if spf[i] == i:
            for j in range(i * i, m + 1, i):
                if spf[j] == j:
                    spf[j] = i
        i += 1
    return spf


def anlist(k, m):
    """Dirichlet coefficients [a_0, a_1, ..., a_m] with a_0 = 0."""
    k = mpz(k)
    nn = conductor(k)
    assert nn % 3 == 0
    a = [mpz(0)] * (m + 1)
    if m >= 1:
        a[1] = mpz(1)
    if m < 2:
        return a
    for p in core.primes_up_to(m):
        good = nn % p != 0
        tr = ap(k, p)
        prev2, prev1 = mpz(1), tr
        q = p
        while q <= m:
            a[q] = prev1
            prev2, prev1 = prev1, tr * prev1 - (p * prev2 if good else mpz(0))
            q *= p
    spf = _spf_table(m)
    for n in range(2, m + 1):
        p = spf[n]
        rest = n
        while rest % p == 0:
            rest //= p
        if rest > 1:
            a[n] = a[n // rest] * a[rest]
    return a


_E1_SERIES_CUT = 24


def e1(x):
    """Exponential integral E_1(x) = int_x^oo exp(-t)/t dt for real x > 0.

    Power series below the cutoff (with guard bits against the exp(x)
    cancellation), modified-Lentz continued fraction above it.
    """
    prec = core.get_precision()
    x = core.to_mpfr(x)
    if not x > 0:
        raise ValueError("e1 wants x > 0")
    if x <= _E1_SERIES_CUT:
        guard = 64 + int(1.5 * float(x))
        with core.precision(prec + guard):
            xx = +x
            total = -gmpy2.const_euler() - gmpy2.log(xx)
            term = mpfr(1)
            tiny = mpfr(2) ** (-(prec + guard))
            n = 1
            sign = 1
            while True:
                term = term * xx / n
                total += term / n if sign > 0 else -term / n
                if term < tiny and n > xx:
                    break
                sign = -sign
                n += 1
        return total
    with core.precision(prec + 48):
        xx = +x
        tiny = mpfr(2) ** (-2 * prec)
        b = xx + 1
        f = b
        c = f
        d = mpfr(0)
        tol = mpfr(2) ** (-(prec + 24))
        for j in range(1, 100000):
            aa = mpfr(-(j * j))
            b = b + 2
            d = b + aa * d
            if d == 0:
                d = tiny
            d = 1 / d
            c = b + aa / c
            if c == 0:
                c = tiny
            delta = c * d
            f *= delta
            if abs(delta - 1) < tol:
                break
        else:
            raise core.PrecisionError("E_1 continued fraction stalled")
        return gmpy2.exp(-xx) / f


def theta_value(k, y, an=None):
    """F(y) = sum_n a_n exp(-2 pi n y), the cusp form on the imaginary axis."""
    prec = core.get_precision()
    with core.precision(prec + 64):
        y = core.to_mpfr(y)
        m = int((prec * math.log(2) + 46) / (2 * math.pi * float(y))) + 8
        if an is None:
            an = anlist(k, m)
        m = min(m, len(an) - 1)
        t = gmpy2.exp(-2 * core.pi() * y)
        tp = mpfr(1)
        total = mpfr(0)
        for n in range(1, m + 1):
            tp *= t
            if an[n]:
                total += an[n] * tp
    return total


def root_number(k, nn=None):
    """Sign eps in F(1/(nn*y)) = eps * nn * y^2 * F(y), read off numerically.

    Both signs are tried at two sample points; the winner must fit to
    roughly half the working precision while the loser clearly fails,
    otherwise a PrecisionError is raised.
    """
    prec = core.get_precision()
    k = mpz(k)
    if nn is None:
        nn = conductor(k)
    worst = {1: mpfr(0), -1: mpfr(0)}
    with core.precision(prec + 64):
        rt = gmpy2.sqrt(core.to_mpfr(nn))
        for cnum in (117, 83):
            y = mpfr(cnum) / (100 * rt)
            f1 = theta_value(k, 1 / (nn * y))
            f2 = nn * y * y * theta_value(k, y)
            scale = abs(f1) + abs(f2)
            for eps in (1, -1):
                r = abs(f1 - eps * f2) / scale
                if r > worst[eps]:
                    worst[eps] = r
    eps = 1 if worst[1] < worst[-1] else -1
    if not (worst[eps] < mpfr(2) ** (-(prec // 2)) < worst[-eps]):
        raise core.PrecisionError(
            f"theta relation did not separate the sign: {worst}"
        )
    return eps


def _cutoff(nn, prec, factor):
    rt = math.sqrt(nn)
    return int(factor * rt * (prec * math.log(2) + 46) / (2 * math.pi)) + 8


def lvalue(k, cutoff=1):
    """L(E_k, 1) = (1 + eps) * sum_n (a_n / n) exp(-2 pi n / sqrt(N))."""
    prec = core.get_precision()
    k = mpz(k)
    nn = conductor(k)
    eps = root_number(k, nn)
    if eps == -1:
        return mpfr(0)
    with core.precision(prec + 64):
        m = _cutoff(nn, prec, cutoff)
        an = anlist(k, m)
        t = gmpy2.exp(-2 * core.pi() / gmpy2.sqrt(mpfr(nn)))
        tp = mpfr(1)
        total = mpfr(0)
        for n in range(1, m + 1):
            tp *= t
            if an[n]:
                total += an[n] * tp / n
        return 2 * total


def lderiv(k, cutoff=1):
    """L'(E_k, 1) = 2 * sum_n (a_n / n) E_1(2 pi n / sqrt(N)), for eps = -1."""
    prec = core.get_precision()
    k = mpz(k)
    nn = conductor(k)
    eps = root_number(k, nn)
    if eps != -1:
        raise ValueError("the E_1 expansion of L'(1) needs sign -1")
    with core.precision(prec + 64):
        m = _cutoff(nn, prec, cutoff)
        an = anlist(k, m)
        step = 2 * core.pi() / gmpy2.sqrt(mpfr(nn))
        total = mpfr(0)
        for n in range(1, m + 1):
            if an[n]:
                total += an[n] * e1(step * n) / n
        return 2 * total
