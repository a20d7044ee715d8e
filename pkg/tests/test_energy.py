import math

import numpy as np
import pytest
from scipy import optimize

from nestedfractal import (
    DegenerateRhombus,
    HarmonicFunction,
    InvalidConductance,
    NotAnEigenform,
    eigenform,
    energy_dimension,
    energy_limit,
    energy_residue,
    form_from_conductances,
    harmonic_extension,
    length_weighted_form,
    level_energy,
    trace_map,
    unit_form,
    vicsek_H_from_angle,
    vicsek_conductances_from_lengths,
    vicsek_family_coordinates,
    vicsek_form,
)
from nestedfractal.functions import CoordinateFunction
from nestedfractal.presets import gasket, gasket3, rhombic_vicsek, vicsek


@pytest.fixture(scope="module")
def g():
    return gasket()


@pytest.fixture(scope="module")
def v():
    return vicsek()


@pytest.fixture(scope="module")
def gasket_eigenform(g):
    return eigenform(g)


class TestFormEval:
    def test_gasket_unit(self, g):
        assert unit_form(g).energy([1.0, 0.0, 0.0]) == 2.0

    def test_constant_vanishes(self, g):
        assert unit_form(g).energy([3.7, 3.7, 3.7]) == 0.0

    def test_vicsek_alternating_corners(self, v):
        # cyclic corner values (1,0,1,0): all four sides jump, diagonals do not
        fm = vicsek_form(v, 2.0)
        assert fm.energy([1.0, 0.0, 1.0, 0.0]) == 4.0

    def test_positive_conductances_required(self, v):
        with pytest.raises(InvalidConductance):
            form_from_conductances(v, [1, 1, 1, 1, 0.0, 1])


class TestLevelSums:
    def test_level0_equals_form(self, g):
        f = np.array([1.0, -0.5, 2.0])
        assert level_energy(g, unit_form(g), f, 0) == unit_form(g).energy(f)

    def test_gasket_harmonic_level1(self, g, gasket_eigenform):
        h = harmonic_extension(g, gasket_eigenform, [1.0, 0.0, 0.0], 1)
        assert level_energy(g, unit_form(g), h, 1) == pytest.approx(6 / 5, abs=1e-12)

    def test_constant(self, g):
        for n in range(3):
            vals = np.full(g.graph(n).n_vertices, 2.0)
            assert level_energy(g, unit_form(g), vals, n) == 0.0


class TestTraceMap:
    def test_gasket_unit_scales_by_three_fifths(self, g):
        t = trace_map(g, unit_form(g))
        assert np.abs(t.conductances - 0.6).max() <= 1e-12

    def test_homogeneity(self, g):
        u = unit_form(g)
        t1 = trace_map(g, u.scaled(3.25))
        t2 = trace_map(g, u).scaled(3.25)
        assert np.abs(t1.conductances - t2.conductances).max() <= 1e-12

    @pytest.mark.parametrize("h", [0.5, 1.0, 2.0])
    def test_vicsek_family_fixed_up_to_third(self, v, h):
        fm = vicsek_form(v, h)
        t = trace_map(v, fm)
        assert np.abs(t.conductances - fm.conductances / 3).max() <= 1e-12

    def test_variational_identity(self, g):
        # oracle: dense minimization over interior values
        rng = np.random.default_rng(3)
        u = unit_form(g)
        t = trace_map(g, u)
        g1 = g.graph(1)
        bids = g1.find_vertices(g.v0)
        iids = np.setdiff1d(np.arange(g1.n_vertices), bids)
        for _ in range(3):
            f = rng.normal(size=3)

            def s1(interior):
                vals = np.empty(g1.n_vertices)
                vals[bids] = f
                vals[iids] = interior
                return level_energy(g, u, vals, 1)

            best = optimize.minimize(
                s1, rng.normal(size=len(iids)), method="BFGS", tol=1e-14
            )
            assert t.energy(f) == pytest.approx(best.fun, abs=1e-9)

    def test_harmonic_beats_random_extensions(self, g, gasket_eigenform):
        rng = np.random.default_rng(11)
        u = gasket_eigenform.form
        g1 = g.graph(1)
        bids = g1.find_vertices(g.v0)
        iids = np.setdiff1d(np.arange(g1.n_vertices), bids)
        f = rng.normal(size=3)
        h = harmonic_extension(g, gasket_eigenform, f, 1)
        s_min = level_energy(g, u, h, 1)
        for _ in range(100):
            vals = h.copy()
            vals[iids] = rng.normal(size=len(iids))
            assert level_energy(g, u, vals, 1) >= s_min - 1e-12


class TestEigenform:
    def test_gasket_one_step(self, gasket_eigenform):
        r = gasket_eigenform
        assert r.rho == pytest.approx(0.6, abs=1e-12)
        assert r.iterations == 1
        assert np.abs(r.form.conductances - 1.0).max() <= 1e-12
        assert r.residual <= 1e-12

    def test_vicsek_family_member_is_fixed(self, v):
        init = vicsek_form(v, 2.0)
        r = eigenform(v, init=init)
        assert r.rho == pytest.approx(1 / 3, abs=1e-12)
        # limit is the same member, rescaled to max conductance 1
        expect = init.conductances / init.conductances.max()
        assert np.abs(r.form.conductances - expect).max() <= 1e-10

    def test_vicsek_outside_family_converges_into_it(self, v):
        c = np.empty(6)
        for (i, j), val in zip([(0, 1), (1, 2), (2, 3), (0, 3)], [1, 2, 1, 2]):
            c[v.edge_index(i, j)] = val
        c[v.edge_index(0, 2)] = 1.0
        c[v.edge_index(1, 3)] = 1.0
        r = eigenform(v, init=form_from_conductances(v, c))
        assert r.rho == pytest.approx(1 / 3, abs=1e-9)
        _, _, deviation = vicsek_family_coordinates(v, r.form)
        assert deviation <= 1e-9

    def test_universal_rho(self, g):
        rng = np.random.default_rng(5)
        rhos = [
            eigenform(g, init=form_from_conductances(g, rng.uniform(0.2, 3, 3))).rho
            for _ in range(5)
        ]
        assert max(rhos) - min(rhos) <= 1e-9
        assert rhos[0] == pytest.approx(0.6, abs=1e-9)

    def test_gasket3_value(self):
        # independent family: the six-map triangle has rho = 7/15
        r = eigenform(gasket3())
        assert r.rho == pytest.approx(7 / 15, abs=1e-12)


class TestHarmonicExtension:
    def test_gasket_midpoint_pattern(self, g, gasket_eigenform):
        h = harmonic_extension(g, gasket_eigenform, [1.0, 0.0, 0.0], 1)
        g1 = g.graph(1)
        mid_01 = g1.find_vertex((g.v0[0] + g.v0[1]) / 2)
        mid_02 = g1.find_vertex((g.v0[0] + g.v0[2]) / 2)
        mid_12 = g1.find_vertex((g.v0[1] + g.v0[2]) / 2)
        assert h[mid_01] == pytest.approx(0.4, abs=1e-12)
        assert h[mid_02] == pytest.approx(0.4, abs=1e-12)
        assert h[mid_12] == pytest.approx(0.2, abs=1e-12)

    def test_constant_extends_constant(self, g, gasket_eigenform):
        h = harmonic_extension(g, gasket_eigenform, [2.0, 2.0, 2.0], 3)
        assert np.abs(h - 2.0).max() <= 1e-12

    def test_renormalized_invariance(self, g, gasket_eigenform):
        r = gasket_eigenform
        for n in range(6):
            h = harmonic_extension(g, r, [1.0, 0.0, 0.0], n)
            val = r.rho ** (-n) * level_energy(g, r.form, h, n)
            assert val == pytest.approx(2.0, rel=1e-9)

    def test_maximum_principle(self, g, gasket_eigenform):
        rng = np.random.default_rng(9)
        b = rng.normal(size=3)
        h = harmonic_extension(g, gasket_eigenform, b, 4)
        assert h.min() >= b.min() - 1e-12
        assert h.max() <= b.max() + 1e-12

    def test_rejects_non_eigenform(self, v):
        c = np.array([1.0, 1.0, 2.0, 2.0, 1.0, 1.0])
        with pytest.raises(NotAnEigenform):
            harmonic_extension(v, form_from_conductances(v, c), [1, 0, 0, 0], 2)


class TestEnergyLimit:
    def test_harmonic_gives_constant_sequence(self, g, gasket_eigenform):
        r = gasket_eigenform
        hf = HarmonicFunction(g, r, [1.0, 0.0, 0.0])
        lim = energy_limit(g, r.form, hf, r.rho, 5)
        assert np.abs(lim.values - 2.0).max() <= 1e-9

    def test_homogeneity(self, g, gasket_eigenform):
        r = gasket_eigenform
        hf = HarmonicFunction(g, r, [1.0, 0.0, 0.0])
        lim = energy_limit(g, r.form.scaled(2.0), hf, r.rho, 4)
        assert np.abs(lim.values - 4.0).max() <= 1e-9

    def test_coordinate_diverges_exactly_geometrically(self, g, gasket_eigenform):
        # restrictions of smooth coordinates are not finite-energy here:
        # each subdivision scales the raw sums by 3/4 while rho = 3/5,
        # so the renormalized sums are exactly 1.5 * (5/4)^n
        r = gasket_eigenform
        lim = energy_limit(g, r.form, CoordinateFunction(0), r.rho, 8)
        expect = 1.5 * 1.25 ** np.arange(9)
        assert np.abs(lim.values / expect - 1.0).max() <= 1e-12
        assert (np.diff(lim.values) >= 0).all()

    def test_piecewise_harmonic_converges(self, g, gasket_eigenform):
        # a harmonic spline on V_1 is finite-energy: the sequence rises
        # once and is constant from level 1 on
        from nestedfractal.energy import PiecewiseHarmonicFunction

        r = gasket_eigenform
        g1 = g.graph(1)
        rng = np.random.default_rng(17)
        vals = rng.normal(size=g1.n_vertices)
        spline = PiecewiseHarmonicFunction(g, r, 1, vals)
        lim = energy_limit(g, r.form, spline, r.rho, 5)
        assert lim.values[0] <= lim.values[1] + 1e-12
        assert np.abs(lim.values[1:] - lim.values[1]).max() <= 1e-9 * lim.values[1]
        assert lim.estimate == pytest.approx(
            r.rho ** -1 * level_energy(g, r.form, spline, 1), rel=1e-12
        )


class TestEnergyDimension:
    def test_gasket(self, g):
        assert energy_dimension(g, 0.6) == pytest.approx(
            2 - math.log(0.6) / math.log(0.5), abs=1e-15
        )
        assert energy_dimension(g, 0.6) == pytest.approx(1.263034406, abs=1e-9)

    def test_vicsek(self, v):
        assert energy_dimension(v, 1 / 3) == pytest.approx(1.0, abs=1e-12)

    def test_boundary_case_flagged(self, g):
        with pytest.warns(UserWarning):
            delta = energy_dimension(g, 0.25)  # rho = ratio^2
        assert delta == pytest.approx(0.0, abs=1e-12)


class TestEnergyResidue:
    def test_gasket_harmonic(self, g, gasket_eigenform):
        r = gasket_eigenform
        delta = energy_dimension(g, r.rho)
        base = length_weighted_form(g, delta - 2.0)
        hf = HarmonicFunction(g, r, [1.0, 0.0, 0.0])
        res = energy_residue(g, base, hf, r.rho, [0.1, 0.03, 0.01], 6)
        assert res.converged
        expect = 2.0 / math.log(2)
        assert res.extrapolated == pytest.approx(expect, rel=0.01)

    def test_unit_lengths_geometric_identity(self, g, gasket_eigenform):
        # all l(e) = 1 makes a(n, eps) = 2 exactly, so each F(eps) must
        # equal 2 * eps / (1 - ratio^eps)
        r = gasket_eigenform
        hf = HarmonicFunction(g, r, [1.0, 0.0, 0.0])
        base = length_weighted_form(g, 0.0)
        res = energy_residue(g, base, hf, r.rho, [0.1, 0.03, 0.01], 6)
        for eps, val in zip(res.eps, res.f_values):
            assert val == pytest.approx(2 * eps / (1 - 0.5**eps), rel=1e-11)

    def test_constant_gives_zero(self, g, gasket_eigenform):
        base = length_weighted_form(g, 0.0)
        res = energy_residue(
            g,
            base,
            lambda pts: np.full(len(pts), 4.2),
            gasket_eigenform.rho,
            [0.1, 0.03, 0.01],
            5,
        )
        assert (res.f_values == 0.0).all()
        assert res.extrapolated == 0.0

    def test_divergent_input_reported(self, g, gasket_eigenform):
        base = length_weighted_form(g, 0.0)
        noisy = lambda pts: np.sin(57.0 * pts[:, 0]) * np.cos(71.0 * pts[:, 1])
        res = energy_residue(
            g, base, noisy, gasket_eigenform.rho, [0.1, 0.03], 6
        )
        assert not res.converged
        assert res.extrapolated is None


class TestVicsekFamilyFormulas:
    def test_symmetric_case(self):
        a, f = 1.0, 1.0 / math.sqrt(2)
        big_a, big_f, big_g, h = vicsek_conductances_from_lengths(a, f, f)
        expect = (1 + 1 / math.sqrt(2)) ** 2 / (2 + math.sqrt(2))
        assert big_a == pytest.approx(expect, rel=1e-14)
        assert big_f == pytest.approx(expect, rel=1e-14)
        assert big_g == pytest.approx(expect, rel=1e-14)
        assert h == pytest.approx(1.0, abs=1e-14)

    def test_worked_triple(self):
        big_a, big_f, big_g, h = vicsek_conductances_from_lengths(1.0, 0.5, 2.0)
        assert (big_a, big_f, big_g, h) == pytest.approx((1.0, 0.5, 2.0, 2.0))

    def test_product_identity_random(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            a, f, g_ = rng.uniform(0.1, 5.0, 3)
            big_a, big_f, big_g, _ = vicsek_conductances_from_lengths(a, f, g_)
            assert big_f * big_g == pytest.approx(big_a**2, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(InvalidConductance):
            vicsek_conductances_from_lengths(1.0, 0.0, 1.0)

    def test_angle_square_case(self):
        assert vicsek_H_from_angle(math.pi / 4) == pytest.approx(1.0, abs=1e-15)

    def test_angle_reciprocal_symmetry(self):
        rng = np.random.default_rng(2)
        for theta in rng.uniform(0.05, math.pi / 2 - 0.05, 25):
            prod = vicsek_H_from_angle(theta) * vicsek_H_from_angle(
                math.pi / 2 - theta
            )
            assert prod == pytest.approx(1.0, rel=1e-12)

    def test_angle_matches_length_reduction(self):
        for theta in (0.3, math.pi / 4, 1.1):
            f = 1.0 / (2 * math.cos(theta))
            g_ = 1.0 / (2 * math.sin(theta))
            _, _, _, h = vicsek_conductances_from_lengths(1.0, f, g_)
            assert vicsek_H_from_angle(theta) == pytest.approx(h, rel=1e-13)

    def test_degenerate_angles(self):
        for theta in (0.0, math.pi / 2):
            with pytest.raises(DegenerateRhombus):
                vicsek_H_from_angle(theta)

    def test_iteration_lands_on_reduced_form(self, v):
        # the boundary functional with weights (a,a,a,a,f,g) renormalizes
        # onto the family member given by the closed-form reduction
        a, f, g_ = 1.0, 0.7, 1.9
        big_a, big_f, big_g, _ = vicsek_conductances_from_lengths(a, f, g_)
        c = np.empty(6)
        for i, j in [(0, 1), (1, 2), (2, 3), (0, 3)]:
            c[v.edge_index(i, j)] = a
        c[v.edge_index(0, 2)] = f
        c[v.edge_index(1, 3)] = g_
        r = eigenform(v, init=form_from_conductances(v, c))
        got = r.form.conductances
        scale = big_a / got[v.edge_index(0, 1)]
        expect = np.empty(6)
        for i, j in [(0, 1), (1, 2), (2, 3), (0, 3)]:
            expect[v.edge_index(i, j)] = big_a
        expect[v.edge_index(0, 2)] = big_f
        expect[v.edge_index(1, 3)] = big_g
        assert np.abs(got * scale - expect).max() <= 1e-10

    def test_functional_energy_equals_reduced_eigenform_energy(self, v):
        a, f, g_ = 1.0, 0.5, 2.0
        big_a, big_f, big_g, _ = vicsek_conductances_from_lengths(a, f, g_)
        c = np.empty(6)
        for i, j in [(0, 1), (1, 2), (2, 3), (0, 3)]:
            c[v.edge_index(i, j)] = a
        c[v.edge_index(0, 2)] = f
        c[v.edge_index(1, 3)] = g_
        functional = form_from_conductances(v, c)
        expect = np.empty(6)
        for i, j in [(0, 1), (1, 2), (2, 3), (0, 3)]:
            expect[v.edge_index(i, j)] = big_a
        expect[v.edge_index(0, 2)] = big_f
        expect[v.edge_index(1, 3)] = big_g
        reduced = form_from_conductances(v, expect)
        b = np.array([1.0, 0.3, -0.5, 0.0])
        hf = HarmonicFunction(v, reduced, b)
        lim = energy_limit(v, functional, hf, 1 / 3, 5)
        assert np.abs(lim.values - reduced.energy(b)).max() <= 1e-9


class TestRhombicVicsek:
    def test_square_case_up_to_rotation(self):
        r = rhombic_vicsek(math.pi / 4)
        assert sorted(np.round(r.e0_lengths, 12)) == pytest.approx(
            [1.0, 1.0, 1.0, 1.0, math.sqrt(2), math.sqrt(2)]
        )

    def test_pi_third_diagonals(self):
        r = rhombic_vicsek(math.pi / 3)
        diags = sorted(r.e0_lengths)[-2:]
        assert sorted(np.round(r.e0_lengths, 12))[:4] == pytest.approx([1.0] * 4)
        assert sorted(np.round(diags, 12)) == pytest.approx([1.0, math.sqrt(3)])

    def test_center_not_essential(self):
        r = rhombic_vicsek(1.0)
        assert len(r.v0) == 4
        assert all(np.linalg.norm(p) > 0.1 for p in r.v0)

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateRhombus):
            rhombic_vicsek(math.pi / 2)
