"""Exact arithmetic in Z[omega] (omega^2 + omega + 1 = 0) and cubic symbols.

Elements are a + b*omega with integer a, b.  The ring is Euclidean for the
norm a^2 - a*b + b^2, which is what every routine here leans on: division
with remainder, gcds, factorization into primes, the primary normalization
(the unique associate congruent to 2 mod 3), and the cubic residue symbol
evaluated through the Euler criterion alpha^((N(pi)-1)/3) mod pi.
"""

from __future__ import annotations

import gmpy2
import sympy
from gmpy2 import mpq, mpz


class EisInt:
    """a + b*omega with exact integer coordinates."""

    __slots__ = ("a", "b")

    def __init__(self, a, b=0):
        object.__setattr__(self, "a", mpz(a))
        object.__setattr__(self, "b", mpz(b))

    def __setattr__(self, *_):
        raise AttributeError("EisInt is immutable")

    def __repr__(self):
        return f"EisInt({self.a}, {self.b})"

    def __eq__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __hash__(self):
        return hash((int(self.a), int(self.b)))

    def __add__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return EisInt(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __neg__(self):
        return EisInt(-self.a, -self.b)

    def __sub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return EisInt(self.a - other.a, self.b - other.b)

    def __rsub__(self, other):
        return -self + other

    def __mul__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        # (a + b w)(c + d w) = ac - bd + (ad + bc - bd) w
        a, b, c, d = self.a, self.b, other.a, other.b
        return EisInt(a * c - b * d, a * d + b * c - b * d)

    __rmul__ = __mul__

    def __pow__(self, e):
        if e < 0:
            raise ValueError("negative powers leave Z[omega]")
        result = ONE
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def norm(self) -> mpz:
        return self.a * self.a - self.a * self.b + self.b * self.b

    def conj(self) -> "EisInt":
        # conj(omega) = omega^2 = -1 - omega
        return EisInt(self.a - self.b, -self.b)

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_unit(self) -> bool:
        return self.norm() == 1


def _coerce(x):
    if isinstance(x, EisInt):
        return x
    if isinstance(x, (int, mpz)):
        return EisInt(x, 0)
    return None


ZERO = EisInt(0, 0)
ONE = EisInt(1, 0)
OMEGA = EisInt(0, 1)
SQRT_M3 = EisInt(1, 2)  # 1 + 2*omega, squares to -3
LAMBDA = EisInt(1, -1)  # 1 - omega, the ramified prime over 3

UNITS = (
    EisInt(1, 0),
    EisInt(0, 1),
    EisInt(-1, -1),  # omega^2
    EisInt(-1, 0),
    EisInt(0, -1),
    EisInt(1, 1),  # -omega^2
)


def _round_nearest(q: mpq) -> mpz:
    num, den = q.numerator, q.denominator
    f, r = divmod(num, den)
    return mpz(f + (1 if 2 * r >= den else 0))


def divrem(x: EisInt, y: EisInt) -> tuple[EisInt, EisInt]:
    """Euclidean division: x = q*y + r with N(r) <= (3/4) N(y)."""
    if y.is_zero():
        raise ZeroDivisionError("division by zero in Z[omega]")
    n = y.norm()
    t = x * y.conj()
    q = EisInt(_round_nearest(mpq(t.a, n)), _round_nearest(mpq(t.b, n)))
    r = x - q * y
    return q, r


def divides(y: EisInt, x: EisInt) -> bool:
    return divrem(x, y)[1].is_zero()


def exact_div(x: EisInt, y: EisInt) -> EisInt:
    q, r = divrem(x, y)
    if not r.is_zero():
        raise ValueError(f"{y!r} does not divide {x!r}")
    return q


def gcd(x: EisInt, y: EisInt) -> EisInt:
    while not y.is_zero():
        x, y = y, divrem(x, y)[1]
    return x


def associates(x: EisInt):
    return tuple(u * x for u in UNITS)


def primary(x: EisInt) -> EisInt:
    """The unique associate congruent to 2 mod 3 (requires gcd(N(x), 3) = 1)."""
    if x.norm() % 3 == 0:
        raise ValueError("no primary associate when 3 divides the norm")
    for y in associates(x):
        if y.a % 3 == 2 and y.b % 3 == 0:
            return y
    raise AssertionError("unit residues mod 3 failed to cover (Z[omega]/3)^*")


def split_prime(p) -> EisInt:
    """A primary prime above a rational prime p = 1 mod 3 (norm p)."""
    p = mpz(p)
    if p % 3 != 1 or not sympy.isprime(int(p)):
        raise ValueError("split_prime wants a rational prime congruent to 1 mod 3")
    # solve a^2 - a b + b^2 = p: for fixed b, a = (b + sqrt(4p - 3b^2))/2,
    # and the parities of b and the root always agree when the root is exact
    b = mpz(1)
    while 3 * b * b <= 4 * p:
        root, exact = gmpy2.iroot(4 * p - 3 * b * b, 2)
        if exact:
            return primary(EisInt((b + root) // 2, b))
        b += 1
    raise AssertionError(f"no norm representation found for {p}")


def factor(x: EisInt) -> tuple[EisInt, dict[EisInt, int]]:
    """Factor x as unit * prod(primes^e).

    Primes are primary for norms coprime to 3; the ramified prime over 3 is
    reported as LAMBDA = 1 - omega.  Inert rational primes (p = 2 mod 3)
    appear as EisInt(p, 0).
    """
    if x.is_zero():
        raise ValueError("cannot factor zero")
    fac: dict[EisInt, int] = {}
    rest = x
    for p, e in sorted(sympy.factorint(int(x.norm())).items()):
        p = mpz(p)
        if p == 3:
            fac[LAMBDA] = e
            for _ in range(e):
                rest = exact_div(rest, LAMBDA)
        elif p % 3 == 2:
            assert e % 2 == 0, "inert prime must divide the norm evenly"
            prime = EisInt(p, 0)
            fac[prime] = e // 2
            for _ in range(e // 2):
                rest = exact_div(rest, prime)
        else:
            pi = split_prime(p)
            k = 0
            while divides(pi, rest):
                rest = exact_div(rest, pi)
                k += 1
            if k:
                fac[pi] = k
            if e - k:
                fac[primary(pi.conj())] = e - k
                for _ in range(e - k):
                    rest = exact_div(rest, primary(pi.conj()))
    assert rest.is_unit(), "factorization left a non-unit cofactor"
    return rest, fac


def _pow_mod(base: EisInt, e: mpz, modulus: EisInt) -> EisInt:
    result = ONE
    base = divrem(base, modulus)[1]
    e = mpz(e)
    while e:
        if e & 1:
            result = divrem(result * base, modulus)[1]
        base = divrem(base * base, modulus)[1]
        e >>= 1
    return result


def _symbol_prime(alpha: EisInt, pi: EisInt) -> int:
    """Exponent e with alpha^((N(pi)-1)/3) = omega^e mod pi."""
    n = pi.norm()
    assert n % 3 == 1, "cubic symbol needs a prime of norm = 1 mod 3"
    r = _pow_mod(alpha, (n - 1) // 3, pi)
    for e in range(3):
        if divides(pi, r - OMEGA**e):
            return e
    raise ArithmeticError(f"Euler criterion failed for {alpha!r} mod {pi!r}")


def cubic_symbol(alpha: EisInt, modulus: EisInt) -> int:
    """Exponent e in {0,1,2} with (alpha/modulus)_3 = omega^e (Jacobi-style).

    The modulus must have norm coprime to 3 and to N(alpha); otherwise the
    symbol is not a root of unity and we raise.
    """
    alpha = _coerce(alpha)
    modulus = _coerce(modulus)
    if alpha is None or modulus is None:
        raise TypeError("cubic_symbol wants EisInt or integer arguments")
    if modulus.norm() % 3 == 0:
        raise ValueError("modulus norm divisible by 3")
    if not gcd(alpha, modulus).is_unit():
        raise ValueError("cubic symbol needs coprime arguments")
    _, fac = factor(modulus)
    # inert primes have norm p^2 = 1 mod 3, so the Euler criterion applies
    # uniformly to every prime factor
    return sum(e * _symbol_prime(alpha, pi) for pi, e in fac.items()) % 3


def chi_eval(d, alpha) -> int:
    """Exponent e in {0,1,2} with chi_d(sigma_alpha) = omega^e.

    chi_d is the Kummer character of the cube root of d, evaluated on the
    Artin symbol of the ideal (alpha) through the cubic residue symbol; a
    prime in the denominator of d enters with exponent -1.  d must be a
    signed monomial p1^e1 ... pk^ek with ei in {-1, 0, 1}; the sign is
    ignored because -1 is a rational cube.  alpha (or the ideal class rep
    it generates) has to be coprime to 3 and to every prime of d.
    """
    d = mpq(d)
    if d == 0:
        raise ValueError("d must be nonzero")
    alpha = _coerce(alpha)
    if alpha is None:
        raise TypeError("chi_eval wants an EisInt (or integer) second argument")
    e = 0
    for part, sign in ((abs(d.numerator), 1), (d.denominator, -1)):
        for p, m in sympy.factorint(int(part)).items():
            if m != 1:
                raise ValueError("d must have exponents -1, 0, 1 in each prime")
            e += sign * cubic_symbol(EisInt(p, 0), alpha)
    return e % 3


def lattice_generator(v1: EisInt, v2: EisInt) -> EisInt:
    """Shortest nonzero vector of the lattice Z v1 + Z v2, by Gauss reduction.

    For an ideal of Z[omega] the shortest vector is a generator (all six of
    its unit multiples share the minimal norm).
    """
    if v1.is_zero() and v2.is_zero():
        raise ValueError("zero lattice")

    def inner(u, v):  # polarization of the norm form
        return ((u + v).norm() - u.norm() - v.norm()) // 2

    if v1.norm() < v2.norm():
        v1, v2 = v2, v1
    # Lagrange-Gauss: keep N(v1) >= N(v2), replace v1 by its reduction
    # against v2; when the reduction stops shrinking, v2 is the minimum
    while not v2.is_zero():
        q = _round_nearest(mpq(inner(v1, v2), v2.norm()))
        r = v1 - q * v2
        if r.norm() >= v2.norm():
            return v2
        v1, v2 = v2, r
    return v1
