"""Certificate evaluation, maximizer search, validation, and refinement."""

import numpy as np
import pytest

from dualspike.certificate import (Certificate, CertificateGrid,
                                   global_maximizers, refine_location,
                                   supremum, validate_certificate)
from dualspike.errors import NoConvergenceError
from dualspike.kernel import Kernel
from dualspike.model import SampleGrid, SourceModel, synthesize
from dualspike.solver import PenaltyProblem, solve


@pytest.fixture(scope="module")
def single_bump():
    grid = SampleGrid([0.5])
    return Certificate([1.0], grid, Kernel(0.1))


@pytest.fixture(scope="module")
def small_converged():
    """A converged certificate on a separated two-spike problem."""
    src = SourceModel([0.3, 0.7], [1.0, 0.8])
    grid = SampleGrid.equispaced(9)
    kernel = Kernel(0.12)
    ms = synthesize(src, grid, kernel)
    state = solve(PenaltyProblem(ms, kernel, 2.0 * 1.8, 1e3), max_iters=300)
    return src, Certificate(state.iterate, grid, kernel)


class TestEvaluation:
    def test_zero_weights(self):
        cert = Certificate(np.zeros(5), SampleGrid.equispaced(5), Kernel(0.1))
        for order in (0, 1, 2):
            assert cert.value(0.37, order) == 0.0

    def test_single_sample(self, single_bump):
        assert single_bump.value(0.5) == 1.0

    def test_invalid_order(self, single_bump):
        with pytest.raises(ValueError):
            single_bump.value(0.5, order=3)

    def test_linearity(self):
        grid = SampleGrid.equispaced(7)
        kernel = Kernel(0.09)
        rng = np.random.default_rng(2)
        for _ in range(50):
            lam, mu = rng.normal(size=7), rng.normal(size=7)
            a, b = rng.normal(), rng.normal()
            t = rng.uniform(0, 1)
            combined = Certificate(a * lam + b * mu, grid, kernel)
            parts = (a * Certificate(lam, grid, kernel).value(t)
                     + b * Certificate(mu, grid, kernel).value(t))
            assert combined.value(t) == pytest.approx(parts, rel=1e-12, abs=1e-14)


class TestSupremum:
    def test_zero_weights_tie_rule(self):
        cert = Certificate(np.zeros(5), SampleGrid.equispaced(5), Kernel(0.1))
        t, v = supremum(cert)
        assert t == 0.0 and v == 0.0

    def test_negative_bump_boundary(self):
        cert = Certificate([-1.0], SampleGrid([0.5]), Kernel(0.1))
        t, v = supremum(cert)
        assert t == 0.0
        assert v == pytest.approx(-np.exp(-25.0), rel=1e-12)

    def test_against_brute_force(self):
        grid = SampleGrid.equispaced(5)
        kernel = Kernel(0.1)
        scan = np.linspace(0.0, 1.0, 1_000_001)
        table = kernel.value(scan[:, None] - grid.samples[None, :])
        rng = np.random.default_rng(14)
        for _ in range(10):
            lam = rng.normal(size=5)
            cert = Certificate(lam, grid, kernel)
            _, v = supremum(cert)
            brute = float((table @ lam).max())
            assert v == pytest.approx(brute, abs=1e-7)
            assert v >= brute - 1e-9

    def test_dominates_random_points(self, small_converged):
        _, cert = small_converged
        _, v = supremum(cert)
        rng = np.random.default_rng(5)
        ts = rng.uniform(0, 1, 1000)
        assert np.all(v >= cert.value(ts) - 1e-9)


class TestGlobalMaximizers:
    def test_zero_weights_empty(self):
        cert = Certificate(np.zeros(5), SampleGrid.equispaced(5), Kernel(0.1))
        assert global_maximizers(cert).n_maximizers == 0

    def test_single_bump(self, single_bump):
        maxima = global_maximizers(single_bump)
        assert maxima.n_maximizers == 1
        assert maxima.locations[0] == pytest.approx(0.5, abs=1e-12)
        assert maxima.values[0] == pytest.approx(1.0, rel=1e-12)
        assert maxima.curvatures[0] == pytest.approx(-2.0 / 0.1**2, rel=1e-10)

    def test_stationarity_of_returned_maxima(self, small_converged):
        _, cert = small_converged
        maxima = global_maximizers(cert)
        assert maxima.n_maximizers == 2
        for t in maxima.locations:
            assert abs(cert.value(t, 1)) <= 1e-9
            assert cert.value(t, 2) <= 1e-9

    def test_grid_resolution_stability(self, small_converged):
        _, cert = small_converged
        coarse = global_maximizers(cert, grid_points=4001)
        fine = global_maximizers(cert, grid_points=8001)
        assert coarse.n_maximizers == fine.n_maximizers
        np.testing.assert_allclose(coarse.locations, fine.locations, atol=1e-4)

    def test_merge_tol_required_positive(self, single_bump):
        with pytest.raises(ValueError):
            global_maximizers(single_bump, merge_tol=0.0)


class TestValidate:
    def test_zero_certificate_fails(self):
        src = SourceModel([0.3, 0.7], [1.0, 1.0])
        cert = Certificate(np.zeros(9), SampleGrid.equispaced(9), Kernel(0.1))
        report = validate_certificate(cert, src, tol=1e-4)
        assert not report.passed
        np.testing.assert_allclose(report.source_errors, [1.0, 1.0], rtol=1e-15)

    def test_converged_certificate_passes(self, small_converged):
        src, cert = small_converged
        report = validate_certificate(cert, src, tol=1e-4)
        assert report.passed
        assert report.off_support_sup <= 1.0 + 1e-4

    def test_shifted_support_fails(self, small_converged):
        src, cert = small_converged
        shifted = SourceModel(src.locations + 0.05, src.amplitudes)
        assert not validate_certificate(cert, shifted, tol=1e-4).passed

    def test_tol_validation(self, small_converged):
        src, cert = small_converged
        with pytest.raises(ValueError):
            validate_certificate(cert, src, tol=0.0)


class TestRefineLocation:
    def test_fixed_point(self, single_bump):
        assert refine_location(single_bump, 0.5) == 0.5

    def test_converges_from_offset(self, single_bump):
        t = refine_location(single_bump, 0.45)
        assert abs(t - 0.5) < 1e-12
        assert abs(single_bump.value(t, 1)) < 1e-12

    def test_non_concave_raises(self):
        cert = Certificate([-1.0], SampleGrid([0.5]), Kernel(0.1))
        with pytest.raises(NoConvergenceError) as excinfo:
            refine_location(cert, 0.5)
        assert excinfo.value.last_iterate is not None

    def test_no_bracket_in_tail(self, single_bump):
        with pytest.raises(NoConvergenceError):
            refine_location(single_bump, 0.05)


class TestCertificateGrid:
    def test_needs_enough_points(self):
        with pytest.raises(ValueError):
            CertificateGrid(SampleGrid.equispaced(5), Kernel(0.1), n_points=51)

    def test_table_shape(self):
        cg = CertificateGrid(SampleGrid.equispaced(5), Kernel(0.1), n_points=101)
        assert cg.table.shape == (101, 5)
