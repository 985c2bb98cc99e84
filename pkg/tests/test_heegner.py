import gmpy2
from gmpy2 import mpc, mpfr, mpq, mpz
import pytest

from cubesum import core
from cubesum import ellcurve as ec
from cubesum import heegner as hg
from cubesum import quadforms as qf

PREC = 192


def red(z):
    """Representative of z mod the period lattice of y^2 = x^3 + 1."""
    return ec.reduce_mod_lattice(z, ec.lattice(1))[0]


def lattice_dist(z):
    return abs(red(z))


class TestLevel:
    def test_prime_factors(self):
        assert hg.heegner_level(5) == [5]
        assert hg.heegner_level(11) == [11]
        assert hg.heegner_level(55) == [5, 11]
        assert hg.heegner_level(5 * 11 * 23) == [5, 11, 23]

    def test_rejects_bad_levels(self):
        for bad in (0, -5, 10, 25, 9, 7, 35, 17):
            with pytest.raises(ValueError):
                hg.heegner_level(bad)


class TestTwistLabels:
    def test_p_star(self):
        assert hg.p_star(11) == 11
        assert hg.p_star(29) == 29
        assert hg.p_star(5) == mpq(1, 5)
        assert hg.p_star(23) == mpq(1, 23)
        with pytest.raises(ValueError):
            hg.p_star(7)

    def test_twist_label(self):
        assert hg.twist_label(11) == 11
        assert hg.twist_label(mpq(1, 5)) == 25
        assert hg.twist_label(mpq(1, 11)) == 121
        assert hg.twist_label(mpq(5)) == 5
        assert hg.twist_label(-11) == 11
        assert hg.twist_label(8) == 1
        with pytest.raises(ValueError):
            hg.twist_label(0)


class TestOrbit:
    def test_orbit_size_equals_class_number(self):
        for N, h in ((5, 18), (11, 36)):
            G = qf.PicGroup(-108 * N * N)
            assert len(G.forms) == h == qf.class_number_conductor(6 * N)
            base = hg.base_cm_point(N)
            orbit = hg.galois_orbit(base, G)
            assert len(orbit) == h
            labels = {pt.label for pt in orbit}
            assert labels == set(G.forms)

    def test_base_form(self):
        N = 5
        base = hg.base_cm_point(N)
        f = base.form
        assert f.disc == -108 * N * N
        assert f.a % 36 == 0
        # root of the base form is h0 = N/4 + (N/36) sqrt(-3)
        with core.precision(PREC):
            tau = base.tau()
            s3 = core.sqrt3()
            h0 = mpc(mpfr(N) / 4, mpfr(N) * s3 / 36)
            assert abs(tau - h0) < mpfr(2) ** (-100)

    def test_conjugate_forms_have_level_structure(self):
        N = 5
        G = qf.PicGroup(-108 * N * N)
        base = hg.base_cm_point(N)
        for pt in hg.galois_orbit(base, G):
            assert pt.form.a % 36 == 0
            assert (pt.form.b - base.form.b) % 72 == 0


class TestModularValue:
    def test_translation_phase(self):
        # the series is supported on n = 1 mod 6, so tau -> tau + 1/6
        # multiplies the value by exp(i pi / 3) exactly
        with core.precision(PREC):
            tau = mpc(mpfr("0.07"), mpfr("0.31"))
            z1 = hg.evaluate_modular(tau)
            z2 = hg.evaluate_modular(tau + mpq(1, 6))
            phase = gmpy2.exp(mpc(0, core.pi() / 3))
            assert abs(z2 - phase * z1) < mpfr(2) ** (-PREC + 30)

    def test_gamma0_36_invariance(self):
        with core.precision(PREC):
            for a, b, c, d in ((1, 0, 36, 1), (7, 2, 108, 31), (5, 2, 72, 29)):
                assert a * d - b * c == 1 and c % 36 == 0
                tau = mpc(mpfr("0.23"), mpfr("0.41"))
                img = (a * tau + b) / (c * tau + d)
                z1 = hg.modular_value(tau)
                z2 = hg.modular_value(img)
                assert lattice_dist(z2 - z1) < mpfr(2) ** (-PREC + 40)

    def test_fricke_relation_and_cusp_anchor(self):
        # z(-1/(36 tau)) = -z(tau) + c mod the lattice, with the same c at
        # independent points; the cusp value c sits over x = 2 on the curve
        with core.precision(PREC):
            sums = []
            for tau in (mpc(0, mpfr("0.25")), mpc(mpfr("0.05"), mpfr("0.2"))):
                za = hg.modular_value(tau)
                zb = hg.modular_value(-1 / (36 * tau))
                sums.append(za + zb)
            assert lattice_dist(sums[0] - sums[1]) < mpfr(2) ** (-PREC + 40)
            px, _ = ec.weierstrass_p(sums[0], 1)
            assert abs(px - 2) < mpfr(2) ** (-PREC + 40)

    def test_low_height_rejected_by_series(self):
        with core.precision(PREC):
            with pytest.raises(ValueError):
                hg.evaluate_modular(mpc(0, mpfr("0.001")))
            # but the reduced evaluator handles it
            z = hg.modular_value(mpc(mpfr("0.2501"), mpfr("0.0004")))
            assert gmpy2.is_finite(z.real) and gmpy2.is_finite(z.imag)

    def test_conjugation_antisymmetry(self):
        # the value at the inverse class is minus the conjugate value mod
        # the lattice (complex conjugation on CM points)
        with core.precision(PREC):
            G, pts, vals = hg.orbit_values(5)
            for i, t in enumerate(G.forms):
                j = G.index[qf.reduce_form(qf.inverse_form(t))]
                assert lattice_dist(vals[j] + mpc(vals[i]).conjugate()) < mpfr(
                    2
                ) ** (-PREC + 50)


class TestCharacterTables:
    def test_chi2_shift_exponents_balanced(self):
        # chi_2 factors through both class groups (conductor 6 divides 6N)
        # and is nontrivial, so each exponent shows up equally often
        for N, h in ((5, 18), (11, 36)):
            G = qf.PicGroup(-108 * N * N)
            e2 = hg.chi2_shifts(N, G)
            ident = G.index[G.identity]
            assert e2[ident] == 0
            assert [e2.count(e) for e in (0, 1, 2)] == [h // 3] * 3

    def test_chi_exponents_balanced(self):
        for N in (5, 11):
            G = qf.PicGroup(-108 * N * N)
            exps = hg.chi_exponents(hg.p_star(N), N, G)
            h = len(G.forms)
            assert [exps.count(e) for e in (0, 1, 2)] == [h // 3] * 3

    def test_support_check(self):
        G = qf.PicGroup(-108 * 25)
        with pytest.raises(ValueError):
            hg.chi_exponents(mpq(3), 5, G)
        with pytest.raises(ValueError):
            hg.heegner_divisor(mpq(11), 5)


class TestSuborderKernel:
    def test_size_and_group_structure(self):
        for N in (5, 11):
            G = qf.PicGroup(-108 * N * N)
            kern = hg.suborder_kernel(N, G)
            assert len(kern) == 3
            assert G.identity in kern
            for s in kern:
                for t in kern:
                    assert qf.reduce_form(G.mul(s, t)) in kern

    def test_characters_on_kernel(self):
        # the cube-root character of the level prime factors through the
        # smaller ring class field, so it dies on the kernel; the character
        # of 2 does not (its field has even conductor) and must sweep all
        # three exponents there - that is what the torsion shift repairs
        for N in (5, 11):
            G = qf.PicGroup(-108 * N * N)
            kern = hg.suborder_kernel(N, G)
            exps = hg.chi_exponents(hg.p_star(N), N, G)
            e2 = hg.chi2_shifts(N, G)
            star = [exps[G.index[t]] for t in kern]
            shifts = [e2[G.index[t]] for t in kern]
            assert star == [0, 0, 0]
            assert sorted(shifts) == [0, 1, 2]

    def test_kernel_cosets_partition(self):
        N = 5
        G = qf.PicGroup(-108 * N * N)
        exps = hg.chi_exponents(hg.p_star(N), N, G)
        sub = [i for i in range(len(G.forms)) if exps[i] == 0]
        cosets = hg._kernel_cosets(sub, N, G)
        assert sorted(i for c in cosets for i in c) == sorted(sub)
        assert all(len(c) == 3 for c in cosets)
        with pytest.raises(ValueError):
            hg._kernel_cosets(sub[:-1], N, G)


class TestTorsionAnchors:
    def test_t_point_log(self):
        with core.precision(PREC):
            zT = hg.t_point_log()
            px, dp = ec.weierstrass_p(zT, 1)
            cbrt4 = gmpy2.rootn(mpfr(4), 3)
            assert abs(px + cbrt4) < mpfr(2) ** (-PREC + 30)
            assert abs(dp - mpc(0, 2 * core.sqrt3())) < mpfr(2) ** (-PREC + 30)
            assert lattice_dist(3 * zT) < mpfr(2) ** (-PREC + 30)

    def test_classify_value(self):
        with core.precision(PREC):
            tol = mpfr("1e-20")
            status, label, _ = hg.classify_value(mpc(0), tol)
            assert status == "zero"
            z6 = ec.elliptic_log(1, mpq(2), mpq(3))
            status, label, _ = hg.classify_value(z6, tol)
            assert status == "torsion"
            assert label is not None


class TestDivisors:
    def test_monomials(self):
        assert hg.divisor_monomials(5) == [mpq(1, 5), mpq(1), mpq(5)]
        assert len(hg.divisor_monomials(55)) == 9

    def test_vanishing_dichotomy_prime_levels(self):
        # z_d vanishes except at d = p*, where it equals 3 z_0: the
        # character-sum shadow of the epsilon-factor dichotomy
        with core.precision(PREC):
            for N in (5, 11):
                star = hg.p_star(N)
                gp = hg.genus_point(N)
                seen = {}
                total = mpc(0)
                for d in hg.divisor_monomials(N):
                    zd = hg.heegner_divisor(d, N)
                    seen[d] = zd
                    total += zd.value
                    if d == star:
                        assert zd.status == "point"
                        assert lattice_dist(zd.value - 3 * gp.z0) < mpfr(
                            2
                        ) ** (-PREC + 60)
                    else:
                        assert zd.status == "zero"
                assert lattice_dist(total - 3 * gp.z0) < mpfr(2) ** (-PREC + 60)

    def test_divisor_trace_identities(self):
        # z_0 = 3 y_0 and z_{p*} = 9 y_0 mod the lattice
        with core.precision(PREC):
            for N in (5, 11):
                gp = hg.genus_point(N)
                zd = hg.heegner_divisor(hg.p_star(N), N)
                assert lattice_dist(3 * gp.y0 - gp.z0) < mpfr(2) ** (-PREC + 60)
                assert lattice_dist(9 * gp.y0 - zd.value) < mpfr(2) ** (-PREC + 60)

    def test_eigen_trace_matches_y0(self):
        with core.precision(PREC):
            N = 5
            gp = hg.genus_point(N)
            w = hg.eigen_trace(hg.p_star(N), N)
            assert abs(w - gp.y0) < mpfr(2) ** (-PREC + 60)


class TestReconstruct:
    def test_prime_5(self):
        with core.precision(PREC):
            zd = hg.heegner_divisor(hg.p_star(5), 5)
            P = hg.reconstruct(zd)
            assert (P.n, P.x, P.y, P.imaginary) == (25, 6, 29, False)
            a, b = P.cube_sum()
            assert (a, b) == (mpq(-11267, 6111), mpq(23417, 6111))
            assert a**3 + b**3 == 50

    def test_prime_11(self):
        with core.precision(PREC):
            zd = hg.heegner_divisor(hg.p_star(11), 11)
            P = hg.reconstruct(zd)
            assert (P.n, P.x, P.y) == (11, mpq(2280, 1849), mpq(881327, 79507))
            assert not P.imaginary
            a, b = P.cube_sum()
            assert a == mpq(-661146496267328783, 112919729369578740)
            assert b == mpq(684469533791312783, 112919729369578740)
            assert a**3 + b**3 == 22

    def test_nontorsion_height_and_multiples(self):
        # the reconstructed point is far from torsion, and the height obeys
        # the 9x law for the tripled point, tying z_d = 9 y_0 to heights
        with core.precision(PREC):
            zd = hg.heegner_divisor(hg.p_star(11), 11)
            P = hg.reconstruct(zd)
            h = P.height()
            assert h > mpfr("1e-3")
            k, Q = P.companion()
            h3 = ec.canonical_height(k, ec.mul(k, 3, Q))
            assert abs(h3 - 9 * h) < mpfr("1e-12") * max(1, abs(h3))

    def test_genus_point_with_height(self):
        with core.precision(PREC):
            gp = hg.genus_point(5, with_height=True)
            assert gp.twist == 25
            assert (gp.point.x, gp.point.y) == (6, 29)
            assert gp.height > mpfr("1e-3")

    def test_rejects_vanishing_divisor(self):
        with core.precision(PREC):
            zd = hg.heegner_divisor(mpq(1), 5)
            assert zd.status == "zero"
            with pytest.raises(ValueError):
                hg.reconstruct(zd)

    def test_rejects_wrong_twist(self):
        with core.precision(PREC):
            zd = hg.heegner_divisor(hg.p_star(5), 5)
            with pytest.raises(ValueError):
                hg.reconstruct(zd, n=5)


class TestTwistPoint:
    def test_constructor_checks_curve(self):
        hg.TwistPoint(25, 6, 29)
        with pytest.raises(ValueError):
            hg.TwistPoint(25, 6, 28)
        hg.TwistPoint(1, -1, 0, imaginary=True)
        with pytest.raises(ValueError):
            hg.TwistPoint(1, -1, 1, imaginary=True)

    def test_companion_models(self):
        P = hg.TwistPoint(25, 6, 29)
        k, Q = P.companion()
        assert k == 625 and Q == ec.Pt(6, 29)
        T = hg.TwistPoint(1, -1, 0, imaginary=True)
        k, Q = T.companion()
        assert k == -27 and Q == ec.Pt(3, 0)
        assert ec.on_curve(k, Q)

    def test_companion_cube_sum_matches(self):
        P = ec.Pt(mpq(6), mpq(29))
        R = ec.isogeny_image(625, P)
        assert ec.on_curve(-27 * 625, R)
        assert ec.cube_sum_from_companion(25, R) == ec.cube_sum_from_point(25, P)
