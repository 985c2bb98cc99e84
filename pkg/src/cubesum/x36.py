"""Exact structure of the genus-one modular curve of level 36.

Everything here is integer/rational arithmetic: cusp classification for
Gamma_0(36), Schreier generators from the coset action on P^1(Z/36), the
twelve-row translation table matching normalizer matrices to torsion points
and cusps, and membership tests for the index-two level subgroup U (c = 0
mod 36, a = d mod 3) at a finite place.

The table encodes three compatible labelings of the same twelve objects:
residues alpha of Z[omega] mod 2 sqrt(-3), torsion points [alpha](2,3) on
y^2 = x^3 + 1, and cusps.  verify_normalizer_table() recomputes every claim
that makes the table a group isomorphism.
"""

from __future__ import annotations

import gmpy2
import sympy
from gmpy2 import mpq, mpz

from .eisenstein import SQRT_M3, EisInt, divrem

LEVEL = 36

# ---------------------------------------------------------------------------
# exact 2x2 matrices as 4-tuples (a, b, c, d) of mpq


def mat(a, b, c, d):
    return (mpq(a), mpq(b), mpq(c), mpq(d))


def mat_mul(m, n):
    return (
        m[0] * n[0] + m[1] * n[2],
        m[0] * n[1] + m[1] * n[3],
        m[2] * n[0] + m[3] * n[2],
        m[2] * n[1] + m[3] * n[3],
    )


def mat_det(m):
    return m[0] * m[3] - m[1] * m[2]


def mat_inv(m):
    d = mat_det(m)
    if d == 0:
        raise ZeroDivisionError("singular matrix")
    return (m[3] / d, -m[1] / d, -m[2] / d, m[0] / d)


def _primitive_integer(m):
    """Scale a nonzero rational matrix by Q^x to a primitive integer matrix."""
    den = mpz(1)
    for e in m:
        den = gmpy2.lcm(den, e.denominator)
    ints = [mpz(e * den) for e in m]
    g = mpz(0)
    for e in ints:
        g = gmpy2.gcd(g, e)
    if g == 0:
        raise ValueError("zero matrix")
    return tuple(e // g for e in ints)


def in_qx_gamma0(m, level: int = LEVEL) -> bool:
    """Is m in Q^x * Gamma_0(level)?  (Gamma_0 taken inside SL_2(Z), with -I.)"""
    x = _primitive_integer(m)
    if mat_det(x) != 1:
        return False
    return x[2] % level == 0


# ---------------------------------------------------------------------------
# cusps


class Cusp:
    """A point of P^1(Q): p/q with gcd(p, q) = 1, q >= 0, infinity = (1, 0)."""

    __slots__ = ("p", "q")

    def __init__(self, p, q=1):
        if isinstance(p, str) and p in ("inf", "oo"):
            p, q = 1, 0
        if isinstance(p, mpq) or isinstance(p, float):
            r = mpq(p)
            p, q = r.numerator, r.denominator
        p, q = mpz(p), mpz(q)
        if q == 0:
            if p == 0:
                raise ValueError("0/0 is not a cusp")
            p = mpz(1)
        else:
            g = gmpy2.gcd(p, q)
            p, q = p // g, q // g
            if q < 0:
                p, q = -p, -q
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def __setattr__(self, *_):
        raise AttributeError("Cusp is immutable")

    def is_infinity(self) -> bool:
        return self.q == 0

    def __repr__(self):
        return "Cusp(inf)" if self.q == 0 else f"Cusp({self.p}/{self.q})"

    def __eq__(self, other):
        return isinstance(other, Cusp) and self.p == other.p and self.q == other.q

    def __hash__(self):
        return hash((int(self.p), int(self.q)))

    def _completion_s(self) -> mpz:
        """s with p*s = 1 mod q (bottom-right of an SL_2 completion)."""
        if self.q == 0:
            return self.p  # p = +-1
        if self.q == 1:
            return mpz(0)
        return gmpy2.invert(self.p % self.q, self.q)

    def apply(self, m) -> "Cusp":
        """Image under a rational matrix acting as a fractional linear map."""
        p2 = m[0] * self.p + m[1] * self.q
        q2 = m[2] * self.p + m[3] * self.q
        if p2 == 0 and q2 == 0:
            raise ValueError("matrix kills the cusp")
        den = gmpy2.lcm(mpq(p2).denominator, mpq(q2).denominator)
        return Cusp(mpz(p2 * den), mpz(q2 * den))


def cusps_equivalent(c1: Cusp, c2: Cusp, level: int = LEVEL) -> bool:
    """Gamma_0(level)-equivalence: s1 q2 = s2 q1 mod gcd(q1 q2, level)."""
    g = gmpy2.gcd(c1.q * c2.q, level)
    return (c1._completion_s() * c2.q - c2._completion_s() * c1.q) % g == 0


# the twelve cusp classes, in the order of the translation table below
CUSPS = (
    Cusp("inf"),
    Cusp(0),
    Cusp(mpq(-1, 2)),
    Cusp(mpq(-1, 18)),
    Cusp(mpq(1, 3)),
    Cusp(mpq(-1, 3)),
    Cusp(mpq(-1, 16)),
    Cusp(mpq(-4, 9)),
    Cusp(mpq(-1, 6)),
    Cusp(mpq(1, 6)),
    Cusp(mpq(13, 48)),
    Cusp(mpq(29, 48)),
)


def cusp_classify(c) -> Cusp:
    """Canonical representative (a member of CUSPS) of the cusp class of c."""
    if not isinstance(c, Cusp):
        c = Cusp(c)
    for rep in CUSPS:
        if cusps_equivalent(c, rep):
            return rep
    raise AssertionError(f"{c!r} matched no cusp class; the list is complete, so this is a bug")


def cusp_count(level: int) -> int:
    """Number of cusps of Gamma_0(level), sum over d | level of phi(gcd(d, level/d))."""
    total = 0
    for d in sympy.divisors(level):
        total += sympy.totient(gmpy2.gcd(d, level // d))
    return int(total)


# ---------------------------------------------------------------------------
# Gamma_0(36) via its coset action on P^1(Z/36)


def _p1_canon(c, d, n=LEVEL):
    """Canonical representative of (c : d) in P^1(Z/n)."""
    best = None
    for u in range(1, n):
        if gmpy2.gcd(u, n) != 1:
            continue
        t = (u * c % n, u * d % n)
        if best is None or t < best:
            best = t
    return best


def _p1_points(n=LEVEL):
    pts = set()
    for c in range(n):
        for d in range(n):
            if gmpy2.gcd(gmpy2.gcd(c, d), n) == 1:
                pts.add(_p1_canon(c, d, n))
    return pts


_S = (mpq(0), mpq(-1), mpq(1), mpq(0))
_T = (mpq(1), mpq(1), mpq(0), mpq(1))
_TI = (mpq(1), mpq(-1), mpq(0), mpq(1))

_schreier_cache: list | None = None


def gamma0_generators() -> list:
    """Schreier generators of Gamma_0(36) from the P^1(Z/36) coset graph.

    SL_2(Z) is generated by S and T; the stabilizer of (0 : 1) in the action
    gamma -> bottom row is Gamma_0(36), so rep(x) g rep(x.g)^(-1) over the
    BFS tree gives a (redundant) generating set.  Cached after first call.
    """
    global _schreier_cache
    if _schreier_cache is not None:
        return _schreier_cache
    n = LEVEL

    def act(pt, g):
        c, d = pt
        return _p1_canon(c * int(g[0]) + d * int(g[2]), c * int(g[1]) + d * int(g[3]), n)

    start = _p1_canon(0, 1, n)
    reps = {start: mat(1, 0, 0, 1)}
    order = [start]
    frontier = [start]
    gens_used = (_S, _T, _TI)
    while frontier:
        new_frontier = []
        for pt in frontier:
            for g in gens_used:
                img = act(pt, g)
                if img not in reps:
                    reps[img] = mat_mul(reps[pt], g)
                    order.append(img)
                    new_frontier.append(img)
        frontier = new_frontier
    assert len(reps) == len(_p1_points(n)) == 72

    gens = []
    seen = set()
    for pt in order:
        for g in gens_used:
            img = act(pt, g)
            sigma = mat_mul(mat_mul(reps[pt], g), mat_inv(reps[img]))
            key = tuple(sigma)
            if key in seen:
                continue
            seen.add(key)
            assert mat_det(sigma) == 1 and sigma[2] % n == 0
            if sigma != mat(1, 0, 0, 1):
                gens.append(sigma)
    _schreier_cache = gens
    return gens


def normalizes_gamma0(m) -> bool:
    """Does m (rational, invertible) normalize Gamma_0(36)?  Checked both ways."""
    mi = mat_inv(m)
    for g in gamma0_generators():
        if not in_qx_gamma0(mat_mul(mat_mul(m, g), mi)):
            return False
        if not in_qx_gamma0(mat_mul(mat_mul(mi, g), m)):
            return False
    return True


# ---------------------------------------------------------------------------
# the translation table: alpha in Z[omega]/(2 sqrt(-3))  <->  normalizer class

A_MAT = mat(1, mpq(1, 6), 0, 1)
B_MAT = mat(0, 1, -36, 0)

# rows: (alpha, matrix with T(matrix) = translation by tau(alpha), point label, cusp)
TABLE = (
    (EisInt(0), mat(1, 0, 0, 1), "O", Cusp("inf")),
    (EisInt(1), mat(0, 1, -36, -18), "(2,3)", Cusp(0)),
    (EisInt(-1), mat(-18, -1, 36, 0), "(2,-3)", Cusp(mpq(-1, 2))),
    (EisInt(2), mat(-2, -1, 36, 16), "(0,1)", Cusp(mpq(-1, 18))),
    (EisInt(4), mat(16, 1, -36, -2), "(0,-1)", Cusp(mpq(-4, 9))),
    (EisInt(3), mat(9, 4, -144, -63), "(-1,0)", Cusp(mpq(-1, 16))),
    (EisInt(0, 1), mat(12, 1, 36, 6), "(2w,3)", Cusp(mpq(1, 3))),
    (EisInt(-1, -1), mat(12, 11, -36, -30), "(2w2,3)", Cusp(mpq(-1, 3))),
    (EisInt(0, -1), mat(-6, 1, 36, -12), "(2w,-3)", Cusp(mpq(-1, 6))),
    (EisInt(1, 1), mat(6, 1, 36, 12), "(2w2,-3)", Cusp(mpq(1, 6))),
    (EisInt(0, 3), mat(39, 4, 144, 15), "(-w,0)", Cusp(mpq(13, 48))),
    (EisInt(-3, -3), mat(87, -20, 144, -33), "(-w2,0)", Cusp(mpq(29, 48))),
)

MODULUS = SQRT_M3 + SQRT_M3  # 2 sqrt(-3), norm 12


def alpha_reduce(alpha: EisInt) -> EisInt:
    """The table representative congruent to alpha mod 2 sqrt(-3)."""
    for row in TABLE:
        if divrem(alpha - row[0], MODULUS)[1].is_zero():
            return row[0]
    raise AssertionError("TABLE is not a complete residue system; bug")


def table_row(alpha: EisInt):
    alpha = alpha_reduce(alpha)
    for row in TABLE:
        if row[0] == alpha:
            return row
    raise AssertionError("unreachable")


def tau_map(alpha: EisInt) -> Cusp:
    """The cusp tau(alpha) for alpha in Z[omega]/(2 sqrt(-3))."""
    return table_row(alpha)[3]


def verify_normalizer_table() -> dict:
    """Recompute every structural claim the table makes; returns check -> bool.

    - each matrix normalizes Gamma_0(36) (conjugation in both directions on
      the Schreier generators);
    - each matrix sends [infinity] to the advertised cusp;
    - the twelve alphas are pairwise distinct mod 2 sqrt(-3);
    - matrix products realize alpha + beta (translations compose additively
      modulo Q^x Gamma_0(36));
    - conjugation by A twists translations by the unit -omega^2;
    - A^6 is trivial modulo Q^x Gamma_0(36) and B A^3 is the translation
      matrix at alpha = 1.
    """
    report: dict[str, bool] = {}

    report["normalizes"] = all(normalizes_gamma0(row[1]) for row in TABLE)
    report["normalizes_A_B"] = normalizes_gamma0(A_MAT) and normalizes_gamma0(B_MAT)

    report["cusp_images"] = all(
        cusp_classify(Cusp("inf").apply(row[1])) == cusp_classify(row[3]) for row in TABLE
    )

    residues_distinct = True
    for i, r1 in enumerate(TABLE):
        for r2 in TABLE[i + 1 :]:
            if divrem(r1[0] - r2[0], MODULUS)[1].is_zero():
                residues_distinct = False
    report["residues_distinct"] = residues_distinct

    addition = True
    for a, ma, _, _ in TABLE:
        for b, mb, _, _ in TABLE:
            target = table_row(a + b)[1]
            x = mat_mul(mat_inv(target), mat_mul(ma, mb))
            if not in_qx_gamma0(x):
                addition = False
    report["translation_addition"] = addition

    # T(A) = [-omega^2]: conjugating t_alpha by it lands on t_{(-omega^2) alpha}
    minus_w2 = EisInt(1, 1)
    twist = True
    a_inv = mat_inv(A_MAT)
    for a, ma, _, _ in TABLE:
        target = table_row(minus_w2 * a)[1]
        x = mat_mul(mat_inv(target), mat_mul(mat_mul(A_MAT, ma), a_inv))
        if not in_qx_gamma0(x):
            twist = False
    report["unit_twist"] = twist

    a6 = mat(1, 0, 0, 1)
    for _ in range(6):
        a6 = mat_mul(a6, A_MAT)
    report["A_order_six"] = in_qx_gamma0(a6)

    ba3 = mat_mul(B_MAT, mat_mul(A_MAT, mat_mul(A_MAT, A_MAT)))
    report["BA3_is_translation_by_order_six_point"] = in_qx_gamma0(
        mat_mul(mat_inv(table_row(EisInt(1))[1]), ba3)
    )

    return report


# ---------------------------------------------------------------------------
# the embedding rho and membership in U at a finite place


def rho_omega(N) -> tuple:
    """Image of omega under the conductor-6N optimal embedding into M_2(Q)."""
    N = mpz(N)
    return mat(4, mpq(-7 * N, 6), mpq(18, N), -5)


def fixed_point_check(N, prec_bits: int = 96) -> bool:
    """Does rho_omega(N) fix (1 + sqrt(-3)/9) N/4 as a Moebius map?"""
    from .core import precision, sqrt3

    with precision(prec_bits):
        h0 = gmpy2.mpc(mpq(N, 4)) + gmpy2.mpc(0, 1) * sqrt3() * mpq(N, 36)
        m = rho_omega(N)
        img = (gmpy2.mpc(m[0]) * h0 + gmpy2.mpc(m[1])) / (gmpy2.mpc(m[2]) * h0 + gmpy2.mpc(m[3]))
        return abs(img - h0) < gmpy2.mpfr(2) ** (-(prec_bits - 16))


def vp(x: mpq, p) -> int:
    """p-adic valuation of a nonzero rational."""
    x = mpq(x)
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def u_membership(m, place) -> bool:
    """Is the exact rational matrix m in U at the given finite place?

    U is the index-two subgroup of the level-36 compact open: entries
    integral, unit determinant, lower-left divisible by 36, and a = d mod 3
    (the last two conditions bite only at 2 and 3).
    """
    p = mpz(place)
    entries = [mpq(e) for e in m]
    for e in entries:
        if e != 0 and vp(e, p) < 0:
            return False
    det = mat_det(entries)
    if det == 0 or vp(det, p) != 0:
        return False
    c = entries[2]
    need = vp(mpq(LEVEL), p)
    if need and c != 0 and vp(c, p) < need:
        return False
    if p == 3:
        diff = entries[0] - entries[3]
        if diff != 0 and vp(diff, p) < 1:
            return False
    return True


def membership_witnesses(N) -> dict:
    """The three witness products that pin the Galois action constants.

    Each witness is a rational matrix L acting at every finite place, so the
    certificate is two-sided: L itself must lie in U away from the place of
    interest, and L * rho(omega) must land in U at that place.  Returns
    booleans w2 (place 2, any odd N), w3 (place 3, needs N = 2 mod 3), and
    global (L * w * epsilon = [[1,N],[0,1]], checked at both places of 36).
    """
    N = mpz(N)
    r = rho_omega(N)
    w2_left = mat(1, mpq(1, 2), 18, 10)
    w3_left = mat(1, mpq(1, 3), 36, 13)
    out = {
        "w2": u_membership(w2_left, 3) and u_membership(mat_mul(w2_left, r), 2),
        "w3": u_membership(w3_left, 2) and u_membership(mat_mul(w3_left, r), 3),
    }
    w_eps = mat(1, mpq(N, 2), 0, 1)  # w * epsilon, both of determinant -1
    prod = mat_mul(mat(1, mpq(N, 2), 0, 1), w_eps)
    out["global"] = u_membership(prod, 2) and u_membership(prod, 3)
    return out
