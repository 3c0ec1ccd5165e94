import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.integrate import trapezoid

from src.modeling.errors import ConfigurationError
from src.modeling.generators import heavy_tail_inverse
from src.modeling.timeseries import TimeSeries, moments
from src.modeling.transport import (
    MonotoneTriangularMap,
    PolynomialExpansion,
    afit_map,
    basis_features,
    fit_component,
    fit_map,
    forward,
    inverse,
    inverse_samples,
    log_density_samples,
    map_from_dict,
    map_to_dict,
    monomial_coefficients,
    objective_terms,
    pullback_log_density,
    total_degree_multi_indices,
    transport_samples,
)

CUBIC = (-0.570, 0.279, -0.010, 0.001)


def _coupled_record(rng, m=8000):
    z = rng.standard_normal((m, 2))
    y1 = heavy_tail_inverse(z[:, 0])
    y2 = 0.5 * y1 + heavy_tail_inverse(z[:, 1])
    return TimeSeries(np.column_stack([y1, y2]), 0.1, ("a", "b"))


def _random_map(seed: int, n: int = 3, degree: int = 2) -> MonotoneTriangularMap:
    gen = np.random.default_rng(seed)
    comps = []
    for i in range(n):
        multi = total_degree_multi_indices(i + 1, degree)
        comps.append(PolynomialExpansion(i + 1, multi, gen.normal(size=len(multi))))
    return MonotoneTriangularMap(
        components=tuple(comps),
        degree=degree,
        means=np.zeros(n),
        stds=np.ones(n),
        ordering=tuple(range(n)),
        monotone_domain=tuple((-math.inf, math.inf) for _ in range(n)),
        medians=np.zeros(n),
    )


def test_multi_indices_total_degree():
    idx = total_degree_multi_indices(2, 2)
    assert len(idx) == 6
    assert idx[0] == (0, 0)
    assert all(sum(a) <= 2 for a in idx)
    assert len(total_degree_multi_indices(3, 3)) == math.comb(6, 3)


class TestObjective:
    @pytest.fixture
    def problem(self, rng):
        x = rng.standard_normal((500, 2))
        multi = total_degree_multi_indices(2, 2)
        phi, dphi = basis_features(x, multi)
        coeffs = np.zeros(len(multi))
        coeffs[multi.index((0, 1))] = 1.0
        coeffs += 0.01 * rng.standard_normal(len(multi))
        mask = np.array([0.0 if sum(a) == 0 else 1.0 for a in multi])
        return coeffs, phi, dphi, mask

    def test_gradient_matches_finite_differences(self, problem):
        coeffs, phi, dphi, mask = problem
        _, grad, _ = objective_terms(coeffs, phi, dphi, 1e-3, mask)
        eps = 1e-6
        fd = np.empty_like(coeffs)
        for k in range(coeffs.size):
            e = np.zeros_like(coeffs)
            e[k] = eps
            hi, _, _ = objective_terms(coeffs + e, phi, dphi, 1e-3, mask, order=0)
            lo, _, _ = objective_terms(coeffs - e, phi, dphi, 1e-3, mask, order=0)
            fd[k] = (hi - lo) / (2 * eps)
        np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-7)

    def test_hessian_matches_gradient_differences(self, problem):
        coeffs, phi, dphi, mask = problem
        _, _, hess = objective_terms(coeffs, phi, dphi, 1e-3, mask)
        eps = 1e-6
        for k in range(coeffs.size):
            e = np.zeros_like(coeffs)
            e[k] = eps
            _, g_hi, _ = objective_terms(coeffs + e, phi, dphi, 1e-3, mask, order=1)
            _, g_lo, _ = objective_terms(coeffs - e, phi, dphi, 1e-3, mask, order=1)
            np.testing.assert_allclose(hess[:, k], (g_hi - g_lo) / (2 * eps), rtol=1e-4, atol=1e-6)

    def test_hessian_is_positive_definite(self, problem):
        coeffs, phi, dphi, mask = problem
        _, _, hess = objective_terms(coeffs, phi, dphi, 1e-3, mask)
        assert np.linalg.eigvalsh(hess).min() > 0

    def test_infeasible_point_is_infinite(self, problem):
        coeffs, phi, dphi, mask = problem
        value, grad, hess = objective_terms(-coeffs, phi, dphi, 1e-3, mask)
        assert value == math.inf
        assert grad is None and hess is None


class TestFitComponent:
    def test_gaussian_data_gives_identity(self, rng):
        x = rng.standard_normal(20_000)
        comp = fit_component(x, degree=3)
        assert comp.diagnostics["converged"]
        grid = np.linspace(-2, 2, 9)[:, None]
        np.testing.assert_allclose(comp.evaluate(grid), grid[:, 0], atol=0.05)

    def test_too_few_samples(self, rng):
        with pytest.raises(ConfigurationError):
            fit_component(rng.standard_normal(30), degree=3)

    def test_standard_errors_reported(self, rng):
        comp = fit_component(rng.standard_normal(5000), degree=2)
        se = np.asarray(comp.diagnostics["standard_errors"])
        assert se.shape == comp.coefficients.shape
        assert np.all(se > 0)


def test_cubic_map_forward_and_inverse():
    tmap = MonotoneTriangularMap.from_monomials_1d(CUBIC)
    q = forward(tmap, [2.3])
    assert q[0] == pytest.approx(0.030967, abs=1e-6)
    np.testing.assert_allclose(inverse(tmap, q), [2.3], atol=1e-6)
    assert tmap.monotone_domain == ((-50.0, 50.0),)


def test_cubic_map_monomials_round_trip():
    tmap = MonotoneTriangularMap.from_monomials_1d(CUBIC)
    np.testing.assert_allclose(monomial_coefficients(tmap), CUBIC, atol=1e-12)


def test_cubic_pullback_density_is_normalized():
    tmap = MonotoneTriangularMap.from_monomials_1d(CUBIC)
    y = np.linspace(-50, 50, 40_001)
    density = np.exp(log_density_samples(tmap, y[:, None]))
    assert trapezoid(density, y) == pytest.approx(1.0, abs=1e-4)


def test_identity_pullback_is_normal_density():
    tmap = MonotoneTriangularMap.identity(1, means=np.array([2.0]), stds=np.array([3.0]))
    for y in (-4.0, 2.0, 7.5):
        assert pullback_log_density(tmap, [y]) == pytest.approx(stats.norm.logpdf(y, 2.0, 3.0))


def test_fold_is_clamped_to_monotone_branch():
    # y - y^3/3 increases only on (-1, 1)
    tmap = MonotoneTriangularMap.from_monomials_1d((0.0, 1.0, 0.0, -1.0 / 3.0), domain=(-3.0, 3.0))
    lo, hi = tmap.monotone_domain[0]
    assert lo == pytest.approx(-1.0, abs=2e-3)
    assert hi == pytest.approx(1.0, abs=2e-3)

    y, clamped = inverse_samples(tmap, np.array([[0.3], [5.0]]))
    assert not clamped[0]
    assert y[0, 0] - y[0, 0] ** 3 / 3 == pytest.approx(0.3, abs=1e-9)
    assert clamped[1]
    assert y[1, 0] == pytest.approx(hi)


def test_fit_recovers_cubic_gaussianizer(rng):
    z = rng.standard_normal(20_000)
    ts = TimeSeries(heavy_tail_inverse(z)[:, None], 1.0)
    tmap = fit_map(ts, degree=3)
    np.testing.assert_allclose(monomial_coefficients(tmap), [0.0, 1.0, 0.0, 0.1], atol=0.05)
    q = transport_samples(tmap, ts.values)[:, 0]
    m = moments(q)
    assert abs(m.skewness) < 0.05
    assert abs(m.excess_kurtosis) < 0.1
    assert m.variance == pytest.approx(1.0, abs=0.05)


def test_fit_map_inverse_round_trip(rng):
    ts = _coupled_record(rng)
    tmap = fit_map(ts, degree=2)
    y = ts.values[:200]
    back, clamped = inverse_samples(tmap, transport_samples(tmap, y))
    assert np.mean(clamped) < 0.05
    np.testing.assert_allclose(back[~clamped], y[~clamped], atol=1e-6)


def test_fit_map_rejects_bad_ordering(rng):
    with pytest.raises(ConfigurationError):
        fit_map(_coupled_record(rng, 2000), degree=2, ordering=[0, 0])


async def test_afit_map_honours_ordering(rng):
    ts = _coupled_record(rng, 4000)
    tmap = await afit_map(ts, degree=2, ordering=[1, 0])
    assert tmap.ordering == (1, 0)
    assert tmap.map_names == ("b", "a")
    assert [c.dim for c in tmap.components] == [1, 2]
    # output columns are in map order
    q = transport_samples(tmap, ts.values)
    assert abs(np.corrcoef(q[:, 0], ts.values[:, 1])[0, 1]) > 0.9


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=30, deadline=None)
def test_map_is_lower_triangular(seed, shift1, shift2):
    tmap = _random_map(seed)
    y = np.random.default_rng(seed).standard_normal(3)
    base = forward(tmap, y)
    moved = forward(tmap, y + np.array([0.0, shift1, shift2]))
    assert moved[0] == base[0]
    moved_last = forward(tmap, y + np.array([0.0, 0.0, shift2]))
    np.testing.assert_array_equal(moved_last[:2], base[:2])


def test_map_validation():
    comp = PolynomialExpansion(2, ((0, 1),), np.ones(1))
    with pytest.raises(ConfigurationError):
        MonotoneTriangularMap(
            components=(comp,),
            degree=1,
            means=np.zeros(1),
            stds=np.ones(1),
            ordering=(0,),
            monotone_domain=((-1.0, 1.0),),
            medians=np.zeros(1),
        )
    with pytest.raises(ConfigurationError):
        PolynomialExpansion(1, ((0,), (0,)), np.ones(2))


def test_map_dict_survives_json(rng):
    tmap = fit_map(_coupled_record(rng, 3000), degree=2)
    back = map_from_dict(json.loads(json.dumps(map_to_dict(tmap))))
    y = rng.standard_normal((20, 2))
    np.testing.assert_array_equal(transport_samples(back, y), transport_samples(tmap, y))
    assert back.names == tmap.names
    assert back.monotone_domain == tmap.monotone_domain


def test_hessian_is_positive_semidefinite_on_feasible_points(rng):
    x = rng.standard_normal((1000, 2))
    multi = total_degree_multi_indices(2, 3)
    phi, dphi = basis_features(x, multi)
    mask = np.array([0.0 if sum(a) == 0 else 1.0 for a in multi])
    identity = np.zeros(len(multi))
    identity[multi.index((0, 1))] = 1.0
    for _ in range(100):
        # shrink a random direction toward the identity until the point is feasible
        direction, scale = rng.standard_normal(len(multi)), 1.0
        value, _, hess = objective_terms(identity + direction, phi, dphi, 0.0, mask)
        while not math.isfinite(value):
            scale *= 0.5
            value, _, hess = objective_terms(identity + scale * direction, phi, dphi, 0.0, mask)
        assert np.linalg.eigvalsh(hess).min() >= -1e-8 * np.trace(hess)


def test_planted_quadratic_dependence_is_significant(rng):
    y1 = rng.standard_normal(10_000)
    y2 = y1**2 + rng.standard_normal(10_000)
    x = np.column_stack([y1, (y2 - y2.mean()) / y2.std()])
    comp = fit_component(x, degree=2)
    k = comp.multi_indices.index((2, 0))
    se = comp.diagnostics["standard_errors"][k]
    assert abs(comp.coefficients[k]) > 5 * se
    # exact Gaussianizer is sqrt(3) x2 - He2(x1)
    assert comp.coefficients[k] == pytest.approx(-1.0, abs=0.15)
