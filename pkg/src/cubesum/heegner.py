"""Heegner points on y^2 = x^3 + 1 as the modular curve of level 36.

For N an odd squarefree product of primes congruent to 2 or 5 mod 9, the
root of [108, -54N, 7N^2] in the upper half plane has CM by the order of
conductor 6N in Q(omega).  This module walks its Galois orbit (one point
per class of the form class group of discriminant -108 N^2, acting through
composition), evaluates the degree-one modular parametrization

    z(tau) = sum_{n >= 1} (a_n / n) e^(2 pi i n tau)    in  C / Lambda,

and builds the character-twisted sums z_d = sum_t omega^(-e_d(t)) z(tau_t)
over the orbit, where the exponents e_d come from the cubic residue
character of the cube-free monomial d evaluated on ideal representatives
of the classes.  A nonvanishing z_d is transported to the sextic twist
y^2 = x^3 + n^2 attached to d and recognized as an exact rational point.
"""

from __future__ import annotations

import concurrent.futures
import math

import gmpy2
import sympy
from gmpy2 import mpc, mpfr, mpq, mpz

from . import core, eisenstein, ellcurve, lseries, quadforms
from .core import to_mpc, to_mpfr

# Composing the base form with the inverse class t^(-1) (rather than t
# itself) realizes the conjugate that the character machinery labels t.
# Flipping the choice swaps every divisor z_d with z_{1/d}, so it is
# observable and binary; it is frozen by the vanishing-pattern calibration
# test (at N=5 the divisors z_1 and z_5 vanish while z_{1/5} does not).
ORBIT_INVERT = True

# Values farther than the status tolerance from every lattice/torsion point
# but closer than this floor are treated as undecidable at the current
# precision and trigger re-evaluation at doubled precision.
AMBIGUITY_FLOOR = "1e-8"

_orbit_cache: dict = {}
_ideal_cache: dict = {}
_exp_cache: dict = {}
_shift_cache: dict = {}
_kernel_cache: dict = {}
_torsion_cache: dict = {}


def heegner_level(N):
    """Sorted prime factors of N, after checking the level is admissible:
    N odd and squarefree with every prime factor 2 or 5 mod 9."""
    N = mpz(N)
    if N < 1:
        raise ValueError("N must be a positive integer")
    if N % 2 == 0:
        raise ValueError("N must be odd")
    primes = []
    for p, e in sympy.factorint(int(N)).items():
        if e != 1:
            raise ValueError("N must be squarefree")
        if p % 9 not in (2, 5):
            raise ValueError(f"prime {p} is not 2 or 5 mod 9")
        primes.append(mpz(p))
    return sorted(primes)


def p_star(p):
    """The cube-free label p or 1/p, normalized so the result is 2 mod 9
    multiplicatively (p itself when p = 2 mod 9, its inverse when p = 5)."""
    p = mpz(p)
    if p % 9 == 2:
        return mpq(p)
    if p % 9 == 5:
        return mpq(1, p)
    raise ValueError(f"prime {p} is not 2 or 5 mod 9")


def twist_label(d):
    """The positive cube-free integer n with y^2 = x^3 + d^2 isomorphic to
    y^2 = x^3 + n^2 (numerator times denominator squared, cubes stripped)."""
    d = mpq(d)
    if d == 0:
        raise ValueError("d must be nonzero")
    n = abs(d.numerator) * d.denominator ** 2
    return ellcurve.cube_free_normalize(n)[0]


class CMPoint:
    """One Galois conjugate of the base CM point: the class label in the
    form class group, and the quadratic form whose root is the point."""

    __slots__ = ("N", "label", "form")

    def __init__(self, N, label, form):
        object.__setattr__(self, "N", mpz(N))
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "form", form)
        if form.disc != -108 * self.N**2:
            raise ValueError("form discriminant must be -108 N^2")

    def __setattr__(self, *_):
        raise AttributeError("CMPoint is immutable")

    def __repr__(self):
        return f"CMPoint(N={self.N}, form={self.form!r})"

    def tau(self) -> mpc:
        """Root (-b + 6N sqrt(-3)) / (2a) at the current precision."""
        a, b = self.form.a, self.form.b
        re = to_mpfr(mpq(-b, 2 * a))
        im = 3 * self.N * core.sqrt3() / a
        return mpc(re, im)


def base_form(N) -> quadforms.QuadForm:
    N = mpz(N)
    return quadforms.QuadForm(108, -54 * N, 7 * N * N)


def base_cm_point(N) -> CMPoint:
    """The CM point of conductor 6N: root of [108, -54N, 7N^2], which is
    N/4 + N sqrt(3)/36 i, labeled by the identity class."""
    heegner_level(N)
    N = mpz(N)
    ident = quadforms.reduce_form(quadforms.principal_form(-108 * N * N))
    return CMPoint(N, ident, base_form(N))


def _compose_heegner(base: quadforms.QuadForm, t: quadforms.QuadForm) -> quadforms.QuadForm:
    """Dirichlet composite of the base form with (a rep of) t, without the
    final reduction, so the level structure 36 | a, b = base.b mod 72
    survives into the product."""
    if base.disc != t.disc:
        raise ValueError("forms must share a discriminant")
    g = quadforms.coprime_rep(t, base.a)
    a1, b1 = base.a, base.b
    a2, b2 = g.a, g.b
    assert (b2 - b1) % 2 == 0
    s = ((b2 - b1) // 2 * gmpy2.invert(a1 % a2, a2)) % a2 if a2 > 1 else mpz(0)
    B = b1 + 2 * a1 * s
    A = a1 * a2
    assert (B * B - base.disc) % (4 * A) == 0
    return quadforms.QuadForm(A, B, (B * B - base.disc) // (4 * A))


def galois_orbit(P: CMPoint, G: quadforms.PicGroup) -> list[CMPoint]:
    """One CM point per class of G: the conjugate labeled t lies on the
    composite of the base form with t (or t^(-1) under ORBIT_INVERT)."""
    if G.D != P.form.disc:
        raise ValueError("class group discriminant does not match the point")
    out = []
    for t in G.forms:
        s = quadforms.inverse_form(t) if ORBIT_INVERT else t
        comp = _compose_heegner(P.form, s)
        out.append(CMPoint(P.N, t, comp))
    return out


def _series_cutoff(y, prec) -> int:
    """Terms needed for a q-series tail below 2^-prec at height y."""
    return int((prec * math.log(2) + 46) / (2 * math.pi * float(y))) + 8


def evaluate_modular(tau, an=None) -> mpc:
    """z(tau) = sum a_n/n q^n for the weight-2 newform of level 36, as a
    representative of C mod the period lattice of y^2 = x^3 + 1.

    The raw series: tau below the height floor is rejected, because the
    term count scales like 1/Im tau.  CM points of any height go through
    modular_value, which first moves 6 tau into the fundamental domain.
    """
    prec = core.get_precision()
    with core.precision(prec + 64):
        tau = to_mpc(tau)
        y = tau.imag
        if y < mpfr("0.005"):
            raise ValueError("Im tau too small for the q-series; reduce the point first")
        work = core.get_precision()
        m = _series_cutoff(y, work)
        if an is None or len(an) <= m:
            an = lseries.anlist(1, m)
        q = gmpy2.exp(mpc(0, 2 * core.pi()) * tau)
        qn = mpc(1)
        z = mpc(0)
        for n in range(1, m + 1):
            qn = qn * q
            a = an[n]
            if a:
                z += mpq(a, n) * qn
        out = mpc(z)
    return out


_fricke_cache: dict = {}


def _fricke_data():
    """(mu, c) with z(-1/(36 tau)) = mu z(tau) + c.

    The involution sends u = 6 tau to -1/u.  Its eigenvalue mu is +-1 and c
    is the value at the fixed cusp orbit; both are measured from the series
    at three heights around the fixed point u = i, then cross-checked at an
    independent height.  Cached per precision.
    """
    prec = core.get_precision()
    if prec in _fricke_cache:
        return _fricke_cache[prec]
    with core.precision(prec + 64):
        t = mpfr(3) / 2
        z1 = evaluate_modular(mpc(0, mpfr(1) / 6))
        zt = evaluate_modular(mpc(0, t / 6))
        zs = evaluate_modular(mpc(0, 1 / (6 * t)))
        ratio = (zs - z1) / (zt - z1)
        tol = mpfr(2) ** (-(prec // 2))
        if abs(ratio - 1) < tol:
            mu = 1
        elif abs(ratio + 1) < tol:
            mu = -1
        else:
            raise ArithmeticError(f"Fricke eigenvalue ratio {complex(ratio)} is not +-1")
        c = (1 - mu) * z1
        t2 = mpfr(9) / 5
        lhs = evaluate_modular(mpc(0, 1 / (6 * t2)))
        rhs = mu * evaluate_modular(mpc(0, t2 / 6)) + c
        assert abs(lhs - rhs) < tol
        out = (mu, mpc(c))
    _fricke_cache[prec] = out
    return out


def reduce_cm_tau(tau):
    """(tau_red, mu, c) with 6 tau_red in the classical fundamental domain
    and z(tau) = (z(tau_red) - c) / mu.

    In the coordinate u = 6 tau the translation u -> u + 1 multiplies z by
    e^(i pi/3) exactly (the q-series is supported on n = 1 mod 6), and
    u -> -1/u acts through the affine Fricke relation; the standard
    fundamental-domain walk composes those two actions.  The result has
    Im tau_red >= sqrt(3)/12, where the q-series needs only a few hundred
    terms.
    """
    prec = core.get_precision()
    with core.precision(prec + 64):
        u = 6 * to_mpc(tau)
        if u.imag <= 0:
            raise ValueError("tau must be in the upper half plane")
        mu_s, c_s = _fricke_data()
        zeta = mpc(mpfr(1) / 2, core.sqrt3() / 2)
        zpow = [mpc(1)]
        for _ in range(5):
            zpow.append(zpow[-1] * zeta)
        M = mpc(1)
        C = mpc(0)
        eps = mpfr(2) ** (-(prec // 2))
        for _ in range(100000):
            k = int(gmpy2.floor(u.real + mpfr("0.5")))
            if k:
                u = u - k
                ph = zpow[(-k) % 6]
                M = ph * M
                C = ph * C
            if u.real * u.real + u.imag * u.imag >= 1 - eps:
                break
            u = -1 / u
            M = mu_s * M
            C = mu_s * C + c_s
        else:
            raise core.PrecisionError("fundamental domain walk did not terminate")
        assert u.imag >= core.sqrt3() / 2 * (1 - mpfr("1e-9"))
        out = (mpc(u / 6), mpc(M), mpc(C))
    return out


def modular_value(tau, an=None) -> mpc:
    """z(tau) for any tau in the upper half plane: move 6 tau into the
    fundamental domain, evaluate the series high up, then undo the tracked
    affine relation."""
    prec = core.get_precision()
    with core.precision(prec + 64):
        tau_red, M, C = reduce_cm_tau(tau)
        zred = evaluate_modular(tau_red, an=an)
        out = mpc((zred - C) / M)
    return out


def _class_value(job):
    pt, an, prec = job
    with core.precision(prec + 64):
        tau = pt.tau()
    with core.precision(prec):
        return modular_value(tau, an=an)


def orbit_values(N, G=None, threads=1):
    """(G, points, values) for the full orbit at the current precision.

    values[i] is the parametrization value at points[i]; the list order is
    the deterministic class order of G.forms.  Results are cached per
    (N, precision).
    """
    N = mpz(N)
    prec = core.get_precision()
    key = (int(N), prec)
    if key in _orbit_cache:
        return _orbit_cache[key]
    if G is None:
        G = quadforms.PicGroup(-108 * N * N)
    base = base_cm_point(N)
    pts = galois_orbit(base, G)
    # every class is evaluated at Im tau >= sqrt(3)/12 after reduction
    m = _series_cutoff(math.sqrt(3) / 12, prec + 192)
    an = lseries.anlist(1, m)
    jobs = [(pt, an, prec) for pt in pts]
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(_class_value, jobs))
    else:
        vals = [_class_value(job) for job in jobs]
    _orbit_cache[key] = (G, pts, vals)
    return _orbit_cache[key]


def class_ideal(t: quadforms.QuadForm, N) -> eisenstein.EisInt:
    """Generator of a Z[omega]-ideal in the class of t, coprime to 6N."""
    N = mpz(N)
    key = (int(N), t)
    if key not in _ideal_cache:
        rep = quadforms.coprime_rep(t, 6 * N)
        _ideal_cache[key] = quadforms.form_to_ideal(rep, 6 * N)
    return _ideal_cache[key]


def _support_check(d, primes):
    d = mpq(d)
    for part in (abs(d.numerator), d.denominator):
        for p in sympy.factorint(int(part)):
            if mpz(p) not in primes:
                raise ValueError(f"prime {p} of d does not divide the level")
    return d


def chi_exponents(d, N, G) -> tuple:
    """e_d(t) for every class t of G, in G.forms order: the exponent of the
    cubic character of d on an ideal representative of t."""
    N = mpz(N)
    d = _support_check(d, heegner_level(N))
    key = (int(N), d)
    if key not in _exp_cache:
        _exp_cache[key] = tuple(
            eisenstein.chi_eval(d, class_ideal(t, N)) for t in G.forms
        )
    return _exp_cache[key]


def _divisor_value(d, N, G=None, threads=1) -> mpc:
    """sum_t omega^(-e_d(t)) z_t over the orbit, in fixed class order."""
    G, _, vals = orbit_values(N, G=G, threads=threads)
    exps = chi_exponents(d, N, G)
    prec = core.get_precision()
    with core.precision(prec + 64):
        om = core.omega()
        coeff = (mpc(1), om.conjugate(), om)  # omega^(-e) for e = 0, 1, 2
        total = mpc(0)
        for e, z in zip(exps, vals):
            total += coeff[e] * z
        out = mpc(total)
    return out


def t_point_log() -> mpc:
    """Elliptic log of the 3-division point T = (-cbrt(4), sqrt(-3)) of
    y^2 = x^3 + 1, located among the nine 3-division values by matching
    p and p' (p' = 2y).  Cached per precision."""
    prec = core.get_precision()
    key = ("T", prec)
    if key in _torsion_cache:
        return _torsion_cache[key]
    with core.precision(prec + 32):
        w1, w2 = ellcurve.lattice(1)
        cbrt4 = gmpy2.rootn(mpfr(4), 3)
        target_dp = mpc(0, 2 * core.sqrt3())
        tol = mpfr(2) ** (-prec // 2)
        found = None
        for m in range(3):
            for n in range(3):
                if m == 0 and n == 0:
                    continue
                z = (m * w1 + n * w2) / 3
                px, dp = ellcurve.weierstrass_p(z, 1)
                if abs(px + cbrt4) < tol and abs(dp - target_dp) < tol:
                    found = mpc(z)
        if found is None:
            raise ArithmeticError("3-division point (-cbrt4, sqrt(-3)) not located")
    _torsion_cache[key] = found
    return found


def torsion_logs() -> list:
    """The twelve elliptic logs of the torsion of y^2 = x^3 + 1 over Q(omega):
    Z[omega]-multiples (a + b omega) of the log of the generator (2, 3),
    a in 0..5 and b in 0..1, each reduced mod the lattice."""
    prec = core.get_precision()
    if prec in _torsion_cache:
        return _torsion_cache[prec]
    with core.precision(prec + 32):
        z6 = ellcurve.elliptic_log(1, 2, 3)
        om = core.omega()
        basis = ellcurve.lattice(1)
        vals = []
        for a in range(6):
            for b in range(2):
                z0, _, _ = ellcurve.reduce_mod_lattice((a + b * om) * z6, basis)
                vals.append(((a, b), mpc(z0)))
        for i in range(12):
            for j in range(i + 1, 12):
                assert abs(vals[i][1] - vals[j][1]) > mpfr("0.05")
    _torsion_cache[prec] = vals
    return vals


def classify_value(z, tol):
    """(status, torsion_label, margin) for a complex value mod the lattice.

    status is "zero" within tol of a lattice point, "torsion" within tol of
    a nonzero torsion log, else "point"; margin is the distance to the
    nearest of those anchors (what a reclassification would have to beat).
    """
    prec = core.get_precision()
    with core.precision(prec + 32):
        basis = ellcurve.lattice(1)
        z0, _, _ = ellcurve.reduce_mod_lattice(z, basis)
        if abs(z0) < tol:
            return "zero", None, abs(z0)
        nearest = None
        for label, zt in torsion_logs():
            if label == (0, 0):
                continue
            diff, _, _ = ellcurve.reduce_mod_lattice(z0 - zt, basis)
            dist = abs(diff)
            if dist < tol:
                return "torsion", label, dist
            if nearest is None or dist < nearest:
                nearest = dist
        margin = min(abs(z0), nearest)
    return "point", None, margin


class HeegnerDivisor:
    """A character-twisted orbit sum z_d and its recognized status."""

    __slots__ = ("d", "N", "value", "status", "torsion_label", "precision", "tol")

    def __init__(self, d, N, value, status, torsion_label, precision, tol):
        self.d = mpq(d)
        self.N = mpz(N)
        self.value = value
        self.status = status
        self.torsion_label = torsion_label
        self.precision = precision
        self.tol = tol

    def __repr__(self):
        return (
            f"HeegnerDivisor(d={self.d}, N={self.N}, status={self.status!r}, "
            f"value={complex(self.value)!r})"
        )


def heegner_divisor(d, N, G=None, tol=None, threads=1, max_rounds=5) -> HeegnerDivisor:
    """z_d with its status, escalating precision when the value is ambiguous.

    d is a monomial in the primes of N with exponents -1, 0, 1.  "zero"
    means within tol (default 1e-20) of the lattice, "torsion" within tol
    of a torsion log, "point" at least AMBIGUITY_FLOOR away from both.
    In-between values trigger recomputation at doubled precision, up to
    max_rounds attempts, then a PrecisionError with the residual.
    """
    N = mpz(N)
    d = _support_check(d, heegner_level(N))
    prec0 = core.get_precision()
    floor = mpfr(AMBIGUITY_FLOOR)
    report = None
    for round_ in range(max_rounds):
        prec = prec0 << round_
        with core.precision(prec):
            use_tol = mpfr("1e-20") if tol is None else mpfr(tol)
            value = _divisor_value(d, N, G=G, threads=threads)
            status, label, margin = classify_value(value, use_tol)
            ambiguous = (status == "point") and margin < floor
            if not ambiguous:
                return HeegnerDivisor(d, N, value, status, label, prec, use_tol)
            report = (prec, margin)
    raise core.PrecisionError(
        f"z_d for d={d}, N={N} sits {report[1]} from the nearest torsion point "
        f"at {report[0]} bits; cannot classify"
    )


def divisor_monomials(N) -> list:
    """All 3^k monomials prod p^e, e in {-1, 0, 1}, over the primes of N,
    in a fixed deterministic order."""
    out = [mpq(1)]
    for p in heegner_level(N):
        out = [d * mpq(p) ** e for d in out for e in (-1, 0, 1)]
    return out


def chi2_shifts(N, G) -> tuple:
    """Exponent e(t) in {0,1,2} of the cubic character of 2 on each class,
    in G.forms order.

    The base CM point is only rational over the big ring class field after
    subtracting the 3-division point T = (-cbrt4, sqrt(-3)); the Galois
    conjugate of the difference over the class t has elliptic log
    z_t - omega^{e(t)} z_T, so these exponents are the torsion shifts the
    trace machinery has to undo.
    """
    N = mpz(N)
    key = int(N)
    if key not in _shift_cache:
        _shift_cache[key] = tuple(
            eisenstein.chi_eval(mpq(2), class_ideal(t, N)) for t in G.forms
        )
    return _shift_cache[key]


def _kernel_cosets(indices, N, G):
    """Partition the class indices (a union of suborder-kernel cosets) into
    the cosets of the suborder kernel."""
    kern = suborder_kernel(N, G)
    cosets = []
    seen = set()
    for i in indices:
        if i in seen:
            continue
        coset = sorted(G.index[G.mul(G.forms[i], kf)] for kf in kern)
        if any(j not in indices for j in coset):
            raise ValueError("indices are not a union of suborder-kernel cosets")
        seen.update(coset)
        cosets.append(coset)
    return cosets


def _shifted_trace(indices, N, G, vals) -> mpc:
    """Trace of the T-shifted base point over the given classes, one summand
    per suborder-kernel coset.

    The summand z_t - omega^{e(t)} z_T is a class function on those cosets;
    each coset is averaged after checking its members agree mod the lattice
    to within 2^(-prec/2), which guards the shift convention end to end.
    """
    prec = core.get_precision()
    basis = ellcurve.lattice(1)
    zT = t_point_log()
    e2 = chi2_shifts(N, G)
    om = core.omega()
    tol = mpfr(2) ** (-(prec // 2))
    total = mpc(0)
    for coset in _kernel_cosets(indices, N, G):
        base = vals[coset[0]] - om ** e2[coset[0]] * zT
        adj = [base]
        for i in coset[1:]:
            diff, _, _ = ellcurve.reduce_mod_lattice(
                vals[i] - om ** e2[i] * zT - base, basis
            )
            adj.append(base + diff)
        mean = sum(adj) / len(adj)
        dev = max(abs(v - mean) for v in adj)
        if dev > tol:
            raise core.PrecisionError(
                f"kernel-coset values disagree by {float(dev)} at {prec} bits; "
                "the torsion-shift convention failed"
            )
        total += mean
    return mpc(total)


def eigen_trace(d, N, G=None, threads=1) -> mpc:
    """Elliptic log w_d of the T-shifted trace over the classes where the
    cubic character of d is trivial.

    The character-twisted divisor sum collapses onto this trace through
    z_d = 9 w_d; unlike z_d, the point behind w_d has small height, so this
    is the value rational reconstruction works from.
    """
    N = mpz(N)
    d = _support_check(d, heegner_level(N))
    G, pts, vals = orbit_values(N, G=G, threads=threads)
    exps = chi_exponents(d, N, G)
    indices = [i for i in range(len(G.forms)) if exps[i] == 0]
    return _shifted_trace(indices, N, G, vals)


class GenusPoint:
    """Trace data of the orbit over the classes where every prime character
    is trivial: the full trace z0, the kernel-coset trace y0 with z0 = 3 y0,
    and the reconstruction data when it was requested."""

    __slots__ = ("N", "z0", "y0", "classes", "twist", "point", "height")

    def __init__(self, N, z0, y0, classes, twist=None, point=None, height=None):
        self.N = mpz(N)
        self.z0 = z0
        self.y0 = y0
        self.classes = classes
        self.twist = twist
        self.point = point
        self.height = height

    def __repr__(self):
        return f"GenusPoint(N={self.N}, z0={complex(self.z0)!r}, height={self.height})"


def genus_point(N, G=None, with_height=False, threads=1) -> GenusPoint:
    """z_0 = sum of z_t over the subgroup where all prime characters vanish,
    together with the shifted trace y_0 satisfying z_0 = 3 y_0 mod the
    lattice (checked; PrecisionError when it fails).

    The subgroup has index 3^k (k the number of primes of N), so z_0 ties
    the 3^k divisor sums together through sum_d z_d = 3^k z_0.  For prime N
    with_height also reconstructs the point behind the nonvanishing divisor
    and reports its canonical height on the twist.
    """
    N = mpz(N)
    primes = heegner_level(N)
    G, pts, vals = orbit_values(N, G=G, threads=threads)
    tables = [chi_exponents(mpq(p), N, G) for p in primes]
    sub = [
        i
        for i in range(len(G.forms))
        if all(table[i] == 0 for table in tables)
    ]
    assert len(sub) * 3 ** len(primes) == len(G.forms)
    prec = core.get_precision()
    with core.precision(prec + 64):
        z0 = mpc(0)
        for i in sub:
            z0 += vals[i]
        z0 = mpc(z0)
        y0 = _shifted_trace(sub, N, G, vals)
        basis = ellcurve.lattice(1)
        resid, _, _ = ellcurve.reduce_mod_lattice(3 * y0 - z0, basis)
        if abs(resid) > mpfr(2) ** (-(prec // 2)):
            raise core.PrecisionError(
                f"3 y0 differs from z0 by {float(abs(resid))} mod the lattice "
                f"at {prec} bits"
            )
    classes = [G.forms[i] for i in sub]
    if not with_height or len(primes) != 1:
        return GenusPoint(N, z0, y0, classes)
    d = p_star(primes[0])
    zd = heegner_divisor(d, N, G=G, threads=threads)
    point = reconstruct(zd, G=G)
    return GenusPoint(
        N, z0, y0, classes, twist=point.n, point=point, height=point.height()
    )


class TwistPoint:
    """An exact point on y^2 = x^3 + n^2 recovered from an eigen log.

    x and y are rational; the point is (x, y) itself when `imaginary` is
    False, and (x, y sqrt(-3)) when it is True.  The imaginary case has the
    rational companion model y^2 = x^3 - 27 n^2 through (x, y) -> (-3x, 9y),
    an isomorphism over Q(sqrt(-3)), so heights agree between the models.
    """

    __slots__ = ("n", "x", "y", "imaginary")

    def __init__(self, n, x, y, imaginary=False):
        self.n = mpz(n)
        self.x = mpq(x)
        self.y = mpq(y)
        self.imaginary = bool(imaginary)
        lhs = -3 * self.y**2 if self.imaginary else self.y**2
        if lhs != self.x**3 + self.n * self.n:
            raise ValueError("coordinates do not satisfy the curve equation")

    @property
    def is_infinity(self):
        return False

    def companion(self):
        """(k, P) with P an exact rational point on y^2 = x^3 + k: the twist
        curve itself when y is rational, else the companion model."""
        if self.imaginary:
            return -27 * self.n**2, ellcurve.Pt(-3 * self.x, 9 * self.y)
        return self.n**2, ellcurve.Pt(self.x, self.y)

    def height(self):
        """Canonical height over Q, computed on the rational model."""
        k, P = self.companion()
        return ellcurve.canonical_height(k, P)

    def cube_sum(self):
        """Exact (a, b) with a^3 + b^3 = 2n."""
        if self.imaginary:
            return ellcurve.cube_sum_from_companion(self.n, self.companion()[1])
        return ellcurve.cube_sum_from_point(self.n, ellcurve.Pt(self.x, self.y))

    def __repr__(self):
        tag = ", imaginary" if self.imaginary else ""
        return f"TwistPoint(n={self.n}, x={self.x}, y={self.y}{tag})"


def reconstruct(zd: HeegnerDivisor, n=None, G=None, rounds=4) -> TwistPoint:
    """Exact point on y^2 = x^3 + n^2 from a non-torsion divisor.

    The divisor value z_d itself sits at 81 times the height of a generator
    and its coordinates are hopeless to recognize; instead the eigen trace
    w_d with z_d = 9 w_d is computed (and that identity checked mod the
    lattice).  For prime level the eigen log is sqrt(-3) w_d, for composite
    level w_d itself.  The sextic twist scales the lattice by n^(-1/3) up
    to a sixth root of unity, so the candidate x-coordinates are
    n^(2/3) omega^j p(z); the real one is recognized as a rational number
    and y is solved exactly, as a rational y (real branch) or a rational
    multiple of sqrt(-3) (imaginary branch).  Failure doubles the working
    precision, up to `rounds` attempts, recomputing the orbit.
    """
    if zd.status != "point":
        raise ValueError(f"divisor has status {zd.status!r}; nothing to reconstruct")
    if n is None:
        n = twist_label(zd.d)
    n = mpz(n)
    if n != twist_label(zd.d):
        raise ValueError(f"divisor d={zd.d} lives on the twist by {twist_label(zd.d)}")
    k = len(heegner_level(zd.N))
    prec0 = max(core.get_precision(), zd.precision)
    witness = None
    for round_ in range(rounds):
        prec = prec0 << round_
        with core.precision(prec):
            w = eigen_trace(zd.d, zd.N, G=G)
            zval = zd.value if prec == zd.precision else _divisor_value(zd.d, zd.N, G=G)
            basis = ellcurve.lattice(1)
            resid, _, _ = ellcurve.reduce_mod_lattice(9 * w - zval, basis)
            if abs(resid) > mpfr(2) ** (-(prec // 3)):
                raise core.PrecisionError(
                    f"9 w_d differs from z_d by {float(abs(resid))} mod the "
                    f"lattice at {prec} bits"
                )
            z = mpc(0, core.sqrt3()) * w if k == 1 else w
            px, _ = ellcurve.weierstrass_p(z, 1)
            rad = gmpy2.rootn(to_mpfr(n * n), 3)
            om = core.omega()
            cands = []
            for j in range(3):
                xc = rad * om**j * px
                scale = max(mpfr(1), abs(xc))
                if abs(xc.imag) > scale * mpfr(2) ** (-prec // 3):
                    continue
                xq = core.recognize_rational(xc.real, mpz(2) ** (prec // 5))
                if xq is None:
                    continue
                y2 = xq**3 + n * n
                yq = _sqrt_exact(y2)
                if yq is not None:
                    cands.append(TwistPoint(n, xq, yq, imaginary=False))
                    continue
                yq = _sqrt_exact(-y2 / 3)
                if yq is not None:
                    cands.append(TwistPoint(n, xq, yq, imaginary=True))
            witness = (prec, complex(px), [complex(rad * om**j * px) for j in range(3)])
            if len(cands) == 1:
                return cands[0]
    raise core.PrecisionError(
        f"no unique exact point among the transported candidates for d={zd.d}, "
        f"N={zd.N} at {witness[0]} bits; p(z)={witness[1]}, candidates={witness[2]}"
    )


def _sqrt_exact(q):
    """Rational square root of a rational number, or None."""
    q = mpq(q)
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    if gmpy2.is_square(num) and gmpy2.is_square(den):
        return mpq(gmpy2.isqrt(num), gmpy2.isqrt(den))
    return None


def _ideal_class_in(alpha: eisenstein.EisInt, c) -> quadforms.QuadForm:
    """Reduced form of the order-c ideal (alpha) intersect O_c, for
    gcd(N(alpha), c) = 1.  The orientation of the form is not normalized,
    so the result identifies the class only up to inversion; principality
    tests are unaffected."""
    c = mpz(c)
    a, b = alpha.a, alpha.b
    if gmpy2.gcd(alpha.norm(), c) != 1:
        raise ValueError("ideal must be coprime to the conductor")
    # lattice of the ideal in (1, omega) coordinates: alpha, alpha*omega
    v1 = (a, b)
    v2 = (-b, a - b)
    # basis of the solution lattice of s b + t (a - b) = 0 mod c:
    # (c', 0) and (s0, t0) with c' = c/gcd(b,c), t0 the least positive t
    # admitting a solution in s
    g1 = gmpy2.gcd(b, c)
    bp, cp = b // g1, c // g1
    g2 = gmpy2.gcd(a - b, g1)
    t0 = g1 // g2
    if cp == 1:
        s0 = mpz(0)
    else:
        s0 = (-((a - b) // g2) * gmpy2.invert(bp % cp, cp)) % cp
    gens = []
    for s, t in ((cp, mpz(0)), (mpz(0), c), (s0, t0)):
        gens.append(
            eisenstein.EisInt(s * v1[0] + t * v2[0], s * v1[1] + t * v2[1])
        )
    w1, w2 = quadforms._lattice_basis(gens)
    qa, qc = w1.norm(), w2.norm()
    qb = (w1 + w2).norm() - qa - qc
    g = gmpy2.gcd(gmpy2.gcd(qa, qb), qc)
    form = quadforms.QuadForm(qa // g, qb // g, qc // g)
    if form.disc != -3 * c * c:
        raise ArithmeticError("intersection lattice has the wrong discriminant")
    return quadforms.reduce_form(form)


def suborder_kernel(N, G=None) -> list:
    """Classes of the conductor-6N group whose ideals become principal in
    the conductor-3N order: the kernel of the natural surjection between
    the two class groups, of size h(6N) / h(3N)."""
    N = mpz(N)
    heegner_level(N)
    if int(N) in _kernel_cache:
        return _kernel_cache[int(N)]
    if G is None:
        G = quadforms.PicGroup(-108 * N * N)
    ident3 = quadforms.reduce_form(quadforms.principal_form(-27 * N * N))
    out = []
    for t in G.forms:
        alpha = class_ideal(t, N)
        if _ideal_class_in(alpha, 3 * N) == ident3:
            out.append(t)
    expect = quadforms.class_number_conductor(6 * N) // quadforms.class_number_conductor(3 * N)
    assert len(out) == expect
    _kernel_cache[int(N)] = out
    return out
