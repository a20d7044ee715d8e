import math

import numpy as np
import pytest

from nestedfractal import (
    CellIndicator,
    DivergentSeries,
    IncompleteFunction,
    NestedFractal,
    PoleProximity,
    Similitude,
    cell_measure,
    dimension_spectrum,
    metric_dimension,
    nc_integral,
    nc_integral_cell,
    volume_constant,
    zeta,
    zeta_truncated,
)
from nestedfractal.presets import gasket, vicsek


@pytest.fixture(scope="module")
def g():
    return gasket()


@pytest.fixture(scope="module")
def v():
    return vicsek()


class TestDimension:
    def test_gasket(self, g):
        assert metric_dimension(g) == pytest.approx(math.log(3) / math.log(2), abs=1e-15)

    def test_vicsek(self, v):
        assert metric_dimension(v) == pytest.approx(math.log(5) / math.log(3), abs=1e-15)

    def test_interval(self):
        f = NestedFractal(
            [Similitude(0.5, [[1.0]], [0.0]), Similitude(0.5, [[1.0]], [0.5])]
        )
        assert metric_dimension(f) == pytest.approx(1.0, abs=1e-15)


class TestZeta:
    def test_gasket_closed_form_at_two(self, g):
        assert zeta(g, 2.0) == pytest.approx(24.0, abs=1e-12)

    def test_closed_form_vs_series(self, g):
        # for real s the geometric tail bound is the exact remainder, so
        # the bracket needs a roundoff allowance only
        val, tail = zeta_truncated(g, 2.0, 60)
        assert abs(val - zeta(g, 2.0)) <= tail + 1e-12
        assert tail <= 1e-6
        val2, tail2 = zeta_truncated(g, 2.0, 120)
        assert abs(val2 - zeta(g, 2.0)) <= tail2 + 1e-12
        assert tail2 <= 1e-12

    def test_pole_raises(self, g):
        with pytest.raises(PoleProximity):
            zeta(g, metric_dimension(g))

    def test_value_at_zero(self, g):
        # l^0 = 1 on 6 oriented edges, denominator 1 - k
        assert zeta(g, 0.0) == pytest.approx(6 / (1 - 3), abs=1e-13)

    def test_below_abscissa_raises(self, g):
        with pytest.raises(DivergentSeries):
            zeta_truncated(g, 1.2, 40)

    def test_vicsek_truncation_brackets(self, v):
        val, tail = zeta_truncated(v, 3.0, 40)
        assert abs(val - zeta(v, 3.0)) <= tail + 1e-13

    def test_random_s_bracket(self, g, v):
        rng = np.random.default_rng(7)
        for f in (g, v):
            d = metric_dimension(f)
            for _ in range(10):
                s = complex(rng.uniform(d + 0.1, d + 3), rng.uniform(-3, 3))
                val, tail = zeta_truncated(f, s, 60)
                exact = zeta(f, s)
                assert abs(val - exact) <= tail + 1e-12 * (1 + abs(exact))


class TestSpectrum:
    def test_gasket_poles(self, g):
        spec = dimension_spectrum(g, range(-1, 2))
        d = metric_dimension(g)
        assert np.allclose(spec.poles.real, d, atol=1e-13)
        step = d * 2 * math.pi / math.log(3)
        assert spec.poles.imag.tolist() == pytest.approx([-step, 0.0, step])

    def test_residue_at_dimension(self, g):
        spec = dimension_spectrum(g, [0])
        assert spec.residues[0].real == pytest.approx(6 / math.log(2), rel=1e-12)
        assert abs(spec.residues[0].imag) < 1e-12

    def test_residue_matches_limit(self, g):
        # independent route: (s - d) * zeta(s) for s slightly right of d
        d = metric_dimension(g)
        spec = dimension_spectrum(g, [0])
        approx = 1e-7 * zeta(g, d + 1e-7)
        assert approx == pytest.approx(spec.residues[0].real, rel=1e-5)


class TestCellIntegral:
    def test_cell_measures(self, g, v):
        assert cell_measure(g, ()) == 1.0
        assert cell_measure(g, (1, 2)) == pytest.approx(1 / 9, abs=1e-16)
        assert cell_measure(v, (5, 1, 3)) == pytest.approx(1 / 125, abs=1e-16)

    def test_whole_space_value(self, g):
        assert nc_integral_cell(g, ()) == pytest.approx(6 / math.log(3), rel=1e-13)

    def test_scaling_by_measure(self, g):
        assert nc_integral_cell(g, (1, 1)) == pytest.approx(
            nc_integral_cell(g, ()) / 9, rel=1e-13
        )

    def test_residue_over_d_identity(self, g):
        spec = dimension_spectrum(g, [0])
        d = metric_dimension(g)
        assert nc_integral_cell(g, ()) == pytest.approx(
            spec.residues[0].real / d, abs=1e-10
        )

    @pytest.mark.parametrize("fractal", ["g", "v"])
    def test_additivity(self, fractal, g, v):
        f = {"g": g, "v": v}[fractal]
        for word in [(), (1,), (2, 1)]:
            parent = nc_integral_cell(f, word)
            children = sum(
                nc_integral_cell(f, word + (i,)) for i in range(1, f.k + 1)
            )
            assert abs(children - parent) <= 1e-14


class TestIntegral:
    def test_constant_is_exact(self, g):
        val, bound = nc_integral(g, lambda p: np.ones(len(p)), 3)
        assert val == pytest.approx(nc_integral_cell(g, ()), rel=1e-13)
        assert bound == 0.0

    def test_coordinate_barycenter(self, g):
        # symmetry puts the measure's barycenter at x = 1/2; frozen
        # finer-level quadrature (n = 12) gives 2.730051000759447
        val, bound = nc_integral(g, lambda p: p[:, 0], 8)
        target = volume_constant(g) / 2
        assert abs(val - target) <= bound
        assert abs(val - 2.730051000759447) <= bound

    def test_cell_indicator(self, g):
        word = (1, 2)
        val, bound = nc_integral(g, CellIndicator(word), 6)
        assert abs(val - nc_integral_cell(g, word)) <= bound

    def test_error_bound_decreases(self, g):
        bounds = [nc_integral(g, lambda p: p[:, 0], n)[1] for n in range(2, 7)]
        assert all(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:]))

    def test_incomplete_function(self, g):
        with pytest.raises(IncompleteFunction):
            nc_integral(g, np.ones(4), 2)
