"""Shared multiprecision plumbing: precision context, AGM, rational recognition.

Everything numeric in this package runs on gmpy2 (MPFR/MPC) under an explicit
binary precision.  Functions that produce floating values take the precision
from the active gmpy2 context; use `precision(bits)` to scope it.
"""

from __future__ import annotations

import contextlib
from fractions import Fraction

import gmpy2
from gmpy2 import mpc, mpfr, mpq, mpz

DEFAULT_PREC = 192
GUARD_BITS = 32


class PrecisionError(ArithmeticError):
    """Raised when an iteration cannot reach the requested accuracy."""


def get_precision() -> int:
    return gmpy2.get_context().precision


def set_precision(bits: int) -> None:
    if bits < 24:
        raise ValueError("precision below 24 bits is not supported")
    gmpy2.get_context().precision = bits


@contextlib.contextmanager
def precision(bits: int):
    """Temporarily set the working precision (plus nothing: caller adds guards)."""
    ctx = gmpy2.get_context()
    old = ctx.precision
    set_precision(bits)
    try:
        yield
    finally:
        ctx.precision = old


def to_mpfr(x) -> mpfr:
    if isinstance(x, Fraction):
        x = mpq(x.numerator, x.denominator)
    return mpfr(x)


def to_mpc(x) -> mpc:
    if isinstance(x, Fraction):
        x = mpq(x.numerator, x.denominator)
    return mpc(x)


def sqrt3() -> mpfr:
    return gmpy2.sqrt(mpfr(3))


def omega() -> mpc:
    """Primitive cube root of unity e^(2*pi*i/3) at the current precision."""
    return mpc(mpfr(-1) / 2, sqrt3() / 2)


def pi() -> mpfr:
    return gmpy2.const_pi()


def _sqrt_right(z: mpc) -> mpc:
    # Branch with Re >= 0, ties broken by Im >= 0.  MPC's principal square
    # root already satisfies this (cut along the negative real axis).
    s = gmpy2.sqrt(mpc(z))
    if s.real < 0 or (s.real == 0 and s.imag < 0):
        s = -s
    return s


def agm(a, b) -> mpc:
    """Arithmetic-geometric mean with the right-choice square-root branch.

    Quadratically convergent for the conjugate-pair and positive-real inputs
    used by the period computation; raises PrecisionError if the iteration
    stalls (e.g. a + b ~ 0, where no consistent branch exists).
    """
    a = to_mpc(a)
    b = to_mpc(b)
    if a == 0 or b == 0:
        return mpc(0)
    prec = get_precision()
    eps = mpfr(2) ** (-(prec - 4))
    for _ in range(prec.bit_length() * 8 + 40):
        if abs(a - b) <= eps * abs(a):
            return (a + b) / 2
        a, b = (a + b) / 2, _sqrt_right(a * b)
    raise PrecisionError("agm did not converge")


def continued_fraction(x, max_terms: int = 200) -> list[mpz]:
    """Partial quotients of a real value, stopping when the remainder is noise."""
    x = to_mpfr(x)
    prec = x.precision if x.precision else get_precision()
    noise = mpfr(2) ** (-(prec - 8))
    terms: list[mpz] = []
    for _ in range(max_terms):
        a = mpz(gmpy2.floor(x))
        terms.append(a)
        frac = x - a
        if frac <= noise * max(abs(x), 1):
            break
        x = 1 / frac
    return terms


def recognize_rational(x, height_bound) -> mpq | None:
    """Recognize x as p/q with max(|p|, q) <= height_bound, or return None.

    Uses continued-fraction convergents.  A convergent within 2^(-prec/2) of x
    is accepted only when every other rational of admissible height is farther
    than the tolerance away (|p/q - p'/q'| >= 1/(q*q') forces uniqueness when
    1/(2*q*H) > tol), so ambiguous inputs return None instead of a guess.
    """
    x = to_mpfr(x)
    if not gmpy2.is_finite(x):
        return None
    height_bound = mpz(height_bound)
    if height_bound < 1:
        return None
    prec = x.precision if x.precision else get_precision()
    tol = mpfr(2) ** (-(prec // 2))

    p_prev, q_prev = mpz(1), mpz(0)
    p_cur, q_cur = mpz(gmpy2.floor(x)), mpz(1)
    rem = x - p_cur
    while True:
        if max(abs(p_cur), q_cur) > height_bound:
            return None
        cand = mpq(p_cur, q_cur)
        if abs(x - to_mpfr(cand)) < tol:
            if 2 * q_cur * height_bound * tol >= 1:
                return None  # another admissible rational could fit the window
            return cand
        if rem == 0:
            return None
        a = mpz(gmpy2.floor(1 / rem))
        rem = 1 / rem - a
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev


def mpq_to_fraction(q: mpq) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def is_perfect_cube(n) -> bool:
    n = mpz(n)
    r, exact = gmpy2.iroot(abs(n), 3)
    return bool(exact)


def icbrt(n) -> mpz:
    """Exact integer cube root; raises if n is not a perfect cube."""
    n = mpz(n)
    r, exact = gmpy2.iroot(abs(n), 3)
    if not exact:
        raise ValueError(f"{n} is not a perfect cube")
    return r if n >= 0 else -r


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, gmpy2.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    return [i for i, f in enumerate(sieve) if f]
