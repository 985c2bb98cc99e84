"""Positive-definite binary quadratic forms and class groups.

Forms (a, b, c) here always have negative discriminant and a > 0.  The class
groups we care about sit at discriminant -108 N^2 (the order of conductor 6N
in Q(omega)), but everything below works for any negative discriminant.

Composition is Dirichlet's: replace the second form by an equivalent one
whose leading coefficient is coprime to the first, line the middle
coefficients up by CRT, multiply.  Ideals come out of forms through the
lattice Z a + Z (-b + t sqrt(-3))/2, whose shortest vector generates the
extension to the maximal order (class number one).
"""

from __future__ import annotations

import gmpy2
import sympy
from gmpy2 import mpz

from .eisenstein import EisInt, lattice_generator


class QuadForm:
    __slots__ = ("a", "b", "c")

    def __init__(self, a, b, c):
        object.__setattr__(self, "a", mpz(a))
        object.__setattr__(self, "b", mpz(b))
        object.__setattr__(self, "c", mpz(c))
        if self.a <= 0:
            raise ValueError("only positive-definite forms (a > 0) are supported")

    def __setattr__(self, *_):
        raise AttributeError("QuadForm is immutable")

    def __repr__(self):
        return f"QuadForm({self.a}, {self.b}, {self.c})"

    def __eq__(self, other):
        return (
            isinstance(other, QuadForm)
            and self.a == other.a
            and self.b == other.b
            and self.c == other.c
        )

    def __hash__(self):
        return hash((int(self.a), int(self.b), int(self.c)))

    @property
    def disc(self) -> mpz:
        return self.b * self.b - 4 * self.a * self.c

    def value(self, x, y) -> mpz:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def is_primitive(self) -> bool:
        return gmpy2.gcd(gmpy2.gcd(self.a, self.b), self.c) == 1


def transform(f: QuadForm, m11, m12, m21, m22) -> QuadForm:
    """f composed with (x, y) -> (m11 x + m12 y, m21 x + m22 y), det = 1."""
    if m11 * m22 - m12 * m21 != 1:
        raise ValueError("transform matrix must have determinant 1")
    a = f.value(m11, m21)
    c = f.value(m12, m22)
    b = 2 * (f.a * m11 * m12 + f.c * m21 * m22) + f.b * (m11 * m22 + m12 * m21)
    return QuadForm(a, b, c)


def is_reduced(f: QuadForm) -> bool:
    if abs(f.b) > f.a or f.a > f.c:
        return False
    if (abs(f.b) == f.a or f.a == f.c) and f.b < 0:
        return False
    return True


def reduce_form(f: QuadForm) -> QuadForm:
    a, b, c = f.a, f.b, f.c
    while True:
        if a > c:
            a, b, c = c, -b, a
            continue
        if abs(b) > a:
            # translate: b -> b + 2 a t with |b| minimal
            t = (-b + a) // (2 * a)  # floor; lands b in (-a, a]
            b2 = b + 2 * a * t
            c = c + t * (b + a * t)
            b = b2
            continue
        if (abs(b) == a or a == c) and b < 0:
            b = -b
            continue
        return QuadForm(a, b, c)


def enumerate_classes(D) -> list[QuadForm]:
    """All primitive reduced forms of discriminant D < 0, sorted."""
    D = mpz(D)
    if D >= 0 or D % 4 not in (0, 1):
        raise ValueError("discriminant must be negative and 0 or 1 mod 4")
    out = []
    a = mpz(1)
    while 3 * a * a <= -D:
        for b in range(int(-a) + 1, int(a) + 1):
            b = mpz(b)
            if (b * b - D) % (4 * a) != 0:
                continue
            c = (b * b - D) // (4 * a)
            if c < a:
                continue
            if (abs(b) == a or a == c) and b < 0:
                continue
            f = QuadForm(a, b, c)
            if f.is_primitive():
                out.append(f)
        a += 1
    out.sort(key=lambda f: (int(f.a), int(f.b), int(f.c)))
    return out


def principal_form(D) -> QuadForm:
    D = mpz(D)
    if D % 4 == 0:
        return QuadForm(1, 0, -D // 4)
    return QuadForm(1, 1, (1 - D) // 4)


def coprime_rep(f: QuadForm, m) -> QuadForm:
    """An equivalent form whose leading coefficient is coprime to m."""
    m = mpz(m)
    if m == 0:
        raise ValueError("m must be nonzero")
    if gmpy2.gcd(f.a, m) == 1:
        return f
    radius = 1
    while radius <= 64:
        for x in range(-radius, radius + 1):
            for y in range(-radius, radius + 1):
                if gmpy2.gcd(mpz(x), mpz(y)) != 1:
                    continue
                if gmpy2.gcd(f.value(x, y), m) != 1:
                    continue
                # complete (x, y) to a determinant-1 matrix via Bezout
                g, u, v = gmpy2.gcdext(mpz(x), mpz(y))
                assert g == 1
                return transform(f, mpz(x), -v, mpz(y), u)
        radius *= 2
    raise ArithmeticError(f"no value of {f!r} coprime to {m} found near the origin")


def compose(f: QuadForm, g: QuadForm) -> QuadForm:
    """Dirichlet composition (reduced output)."""
    if f.disc != g.disc:
        raise ValueError("forms must share a discriminant")
    D = f.disc
    g = coprime_rep(g, f.a)
    a1, b1 = f.a, f.b
    a2, b2 = g.a, g.b
    # B = b1 mod 2 a1, B = b2 mod 2 a2; middle coefficients share parity with D
    assert (b2 - b1) % 2 == 0
    t = ((b2 - b1) // 2 * gmpy2.invert(a1 % a2, a2)) % a2 if a2 > 1 else mpz(0)
    B = b1 + 2 * a1 * t
    A = a1 * a2
    assert (B * B - D) % (4 * A) == 0
    return reduce_form(QuadForm(A, B, (B * B - D) // (4 * A)))


def inverse_form(f: QuadForm) -> QuadForm:
    return reduce_form(QuadForm(f.a, -f.b, f.c))


class PicGroup:
    """The form class group of a negative discriminant, with dict lookups."""

    def __init__(self, D):
        self.D = mpz(D)
        self.forms = enumerate_classes(D)
        self.index = {f: i for i, f in enumerate(self.forms)}
        self.identity = reduce_form(principal_form(D))
        assert self.identity in self.index

    def __len__(self):
        return len(self.forms)

    def __iter__(self):
        return iter(self.forms)

    def mul(self, f: QuadForm, g: QuadForm) -> QuadForm:
        return compose(f, g)

    def inv(self, f: QuadForm) -> QuadForm:
        return inverse_form(f)

    def pow(self, f: QuadForm, e: int) -> QuadForm:
        if e < 0:
            return self.pow(self.inv(f), -e)
        result = self.identity
        base = f
        while e:
            if e & 1:
                result = compose(result, base)
            base = compose(base, base)
            e >>= 1
        return result

    def order(self, f: QuadForm) -> int:
        n = 1
        g = reduce_form(f)
        while g != self.identity:
            g = compose(g, f)
            n += 1
            if n > len(self.forms):
                raise ArithmeticError("order exceeded class number; composition is broken")
        return n

    def subgroup(self, gens) -> set[QuadForm]:
        seen = {self.identity}
        frontier = [self.identity]
        while frontier:
            cur = frontier.pop()
            for g in gens:
                nxt = compose(cur, g)
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return seen


def class_number_conductor(c) -> int:
    """h of the order of conductor c in Q(omega) (c > 1), by the usual formula."""
    c = mpz(c)
    if c <= 1:
        return 1
    h = gmpy2.mpq(c, 3)
    for p in sympy.factorint(int(c)):
        p = mpz(p)
        chi = 0 if p == 3 else (1 if p % 3 == 1 else -1)
        h *= gmpy2.mpq(p - chi, p)
    assert h.denominator == 1
    return int(h)


def form_to_ideal(f: QuadForm, t) -> EisInt:
    """Generator of (Z a + Z (-b + t sqrt(-3))/2) O_K for disc(f) = -3 t^2.

    Requires gcd(a, t) = 1 so the ideal is invertible over the conductor-t
    order and its extension has norm a; asserts exactly that.
    """
    t = mpz(t)
    if f.disc != -3 * t * t:
        raise ValueError("form discriminant must equal -3 t^2")
    if gmpy2.gcd(f.a, t) != 1:
        raise ValueError("leading coefficient must be coprime to the conductor")
    # beta = (-b + t sqrt(-3))/2 = (-b + t)/2 + t omega   (sqrt(-3) = 1 + 2 omega)
    assert (f.b - t) % 2 == 0
    beta = EisInt((t - f.b) // 2, t)
    gens = [EisInt(f.a, 0), EisInt(0, f.a), beta, beta * EisInt(0, 1)]
    v1, v2 = _lattice_basis(gens)
    alpha = lattice_generator(v1, v2)
    assert alpha.norm() == f.a, "ideal norm disagrees with the form's leading coefficient"
    return alpha


def _lattice_basis(gens: list[EisInt]) -> tuple[EisInt, EisInt]:
    """Two-element Z-basis of the lattice spanned by gens (HNF on (1, omega))."""
    rows = [[mpz(g.a), mpz(g.b)] for g in gens if not g.is_zero()]
    if not rows:
        raise ValueError("zero lattice")
    # gcd-eliminate the omega-coordinate: acc keeps (x*, gcd of all y seen),
    # every eliminated row leaves a pure-integer x in `others`
    acc = rows[0]
    others: list[mpz] = []
    for r in rows[1:]:
        g, u, v = gmpy2.gcdext(acc[1], r[1])
        if g == 0:
            others.append(r[0])
            continue
        new = [u * acc[0] + v * r[0], g]
        others.append((r[1] // g) * acc[0] - (acc[1] // g) * r[0])
        acc = new
    if acc[1] == 0:
        raise ValueError("lattice has rank < 2 in (1, omega) coordinates")
    g0 = mpz(0)
    for x in others:
        g0 = gmpy2.gcd(g0, x)
    if g0 == 0:
        raise ValueError("lattice has rank < 2 in (1, omega) coordinates")
    return EisInt(g0, 0), EisInt(acc[0] % g0, acc[1])
