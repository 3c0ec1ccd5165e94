"""End-to-end checks on full-size records. Deselect with -m "not slow"."""

import math
import time

import numpy as np
import pytest

from src.cli.app import EXIT_OK, main
from src.cli.modeling_commands import pipeline_lorenz_demo
from src.modeling.configuration import Configuration
from src.modeling.errors import ConfigurationError
from src.modeling.generators import Lorenz96Config, synth_heavy_tail
from src.modeling.oscillator import OscillatorParams, analytic_psd, fit_oscillator, simulate
from src.modeling.spectral import relative_l1, welch_psd
from src.modeling.surrogate import fit_surrogate, generate, load_model
from src.modeling.timeseries import TimeSeries, band_coverage, estimate_pdf, load_csv, moments
from src.modeling.transport import fit_map, inverse_samples, monomial_coefficients, transport_samples

LORENZ_K, LORENZ_BETA, LORENZ_NOISE = 26.26, 4.73, 15.76
LORENZ_CUBIC = (-0.570, 0.279, -0.010, 0.001)


def test_lorenz_triple_is_consistent():
    p = OscillatorParams(k=LORENZ_K, beta=LORENZ_BETA, D=LORENZ_K * LORENZ_BETA)
    assert p.D == pytest.approx(124.21, abs=5e-3)
    assert p.noise_amplitude == pytest.approx(LORENZ_NOISE, abs=5e-3)
    with pytest.raises(ConfigurationError):
        OscillatorParams(k=LORENZ_K, beta=LORENZ_BETA, D=LORENZ_K * LORENZ_BETA * (1 + 1e-6))


@pytest.mark.slow
class TestLorenzReproduction:
    @pytest.fixture(scope="class")
    def demo(self):
        lorenz = Lorenz96Config(K=40, F=8.0, dt=0.01, sample_dt=0.1, T=1000.0, seed=0)
        return pipeline_lorenz_demo(lorenz, surrogate_T=10000.0, rpm_m=500, grid=100, seed=0)

    def test_fitted_oscillator_near_published_values(self, demo):
        fitted = demo.report["fitted"]
        assert fitted["k"] == pytest.approx(LORENZ_K, rel=0.25)
        assert fitted["beta"] == pytest.approx(LORENZ_BETA, rel=0.25)
        assert fitted["noise_amplitude"] == pytest.approx(LORENZ_NOISE, rel=0.25)
        osc = demo.model.oscillators[0]
        assert osc.D == pytest.approx(osc.k * osc.beta, rel=1e-12)

    def test_map_matches_published_cubic(self, demo):
        coeffs = monomial_coefficients(demo.model.map)
        assert coeffs.size == 4
        for got, want in zip(coeffs, LORENZ_CUBIC):
            assert np.sign(got) == np.sign(want)
            assert got == pytest.approx(want, rel=0.5)

    def test_swarm_is_close_to_grid_optimum(self, demo):
        fitted = demo.report["fitted"]
        assert fitted["delta"] <= 1.1 * fitted["grid_delta"]

    def test_surrogate_matches_skewness(self, demo):
        gap = demo.report["skewness_gap"]
        assert gap["model"] < 0.15
        assert demo.surrogate.n_samples == 100_000

    def test_random_phase_model_is_gaussian(self, demo):
        m = demo.report["moments"]["rpm"]
        assert abs(m["skewness"]) < 0.1
        assert abs(m["excess_kurtosis"]) < 0.3
        assert demo.report["rpm_misses_skewness"] is True

    def test_report_records_seed_streams(self, demo):
        seeds = demo.report["seeds"]
        assert seeds["master"] == 0
        assert {"lorenz_stream", "pso_stream", "oscillator_stream", "rpm_stream"} <= set(seeds)


@pytest.mark.slow
class TestOscillatorExactness:
    @pytest.fixture(scope="class")
    def lorenz_oscillator(self):
        p = OscillatorParams.from_k_beta(LORENZ_K, LORENZ_BETA)
        return p, simulate(p, 10_000.0, 0.01, rng_seed=11)

    def test_unit_variance(self, lorenz_oscillator):
        _, z = lorenz_oscillator
        assert np.var(z.values) == pytest.approx(1.0, rel=0.03)

    def test_spectrum_matches_closed_form(self, lorenz_oscillator):
        p, z = lorenz_oscillator
        s = welch_psd(z.values[:, 0], 0.01, nperseg=1024)
        assert relative_l1(s, analytic_psd(p, s.omega, s.omega_s)) < 0.1


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
def test_spectral_fit_recovers_parameters(seed):
    z = simulate(OscillatorParams.from_k_beta(10.0, 1.0), 10_000.0, 0.1, rng_seed=100 + seed)
    p = fit_oscillator(welch_psd(z.values[:, 0], 0.1), rng_seed=seed)
    assert p.k == pytest.approx(10.0, rel=0.1)
    assert p.beta == pytest.approx(1.0, rel=0.1)


@pytest.mark.slow
class TestFiveChannelTransport:
    @pytest.fixture(scope="class")
    def fitted(self):
        # y_i depends quadratically on y_1, so a degree-2 map recovers z exactly
        rng = np.random.default_rng(2024)
        z = rng.standard_normal((25_000, 5))
        y = np.empty_like(z)
        y[:, 0] = z[:, 0]
        for i in range(1, 5):
            y[:, i] = z[:, i] + 0.4 * y[:, i - 1] + 0.2 * y[:, 0] ** 2
        ts = TimeSeries(y, 0.1)
        return ts, fit_map(ts, degree=2)

    def test_transported_samples_are_standard_normal(self, fitted):
        ts, tmap = fitted
        q = transport_samples(tmap, ts.values)
        for j in range(5):
            m = moments(q[:, j])
            assert abs(m.mean) < 0.02
            assert abs(m.variance - 1.0) < 0.05
            assert abs(m.skewness) < 0.1

    def test_inverse_undoes_forward(self, fitted):
        ts, tmap = fitted
        y = ts.values[:10_000]
        back, clamped = inverse_samples(tmap, transport_samples(tmap, y))
        assert not clamped.any()
        np.testing.assert_allclose(back, y, atol=1e-8)


@pytest.mark.slow
class TestTailExtrapolation:
    """A surrogate trained on 10^4 samples predicts tail densities the training record never reached."""

    @pytest.fixture(scope="class")
    def densities(self):
        train = synth_heavy_tail(5000.0, 0.5, seed=1)
        cfg = Configuration(swarm=20, pso_iters=60, max_concurrency=1)
        model = fit_surrogate(train, degree=3, seed=0, config=cfg)
        surrogate = generate(model, 100 * train.duration, rng_seed=2)
        # the oscillator update is exact at any step, so a coarse step gives nearly independent truth samples
        truth = synth_heavy_tail(500_000.0, 5.0, seed=3).values[:, 0]
        grid = (float(truth.min()), float(truth.max()))
        return (
            train.values[:, 0],
            surrogate,
            estimate_pdf(surrogate.values[:, 0], bins=100, value_range=grid),
            estimate_pdf(truth, bins=100, value_range=grid),
        )

    def test_surrogate_is_hundred_times_longer(self, densities):
        train, surrogate, _, _ = densities
        assert surrogate.n_samples == pytest.approx(100 * train.size, rel=1e-3)

    def test_log_density_inside_truth_band(self, densities):
        train, _, model, truth = densities
        with np.errstate(divide="ignore"):
            log_lo, log_hi = np.log(truth.ci_lo), np.log(truth.ci_hi)
        log_model = model.log_density()
        inside = (log_model >= log_lo) & (log_model <= log_hi)
        beyond = (truth.centers < train.min()) | (truth.centers > train.max())
        assert beyond.sum() >= 4
        assert np.isfinite(log_model[beyond]).any()
        assert inside.mean() >= 0.8
        assert inside[beyond].mean() >= 0.8
        assert band_coverage(model, truth) == pytest.approx(inside.mean())


@pytest.mark.slow
@pytest.mark.integration
def test_ten_channel_fit_throughput():
    rng = np.random.default_rng(10)
    z = np.column_stack(
        [simulate(OscillatorParams.from_k_beta(float(k), 1.0), 2500.0, 0.1, rng).values[:, 0] for k in rng.uniform(2.0, 20.0, 10)]
    )
    y = z.copy()
    for i in range(1, 10):
        y[:, i] += 0.3 * y[:, i - 1] + 0.05 * y[:, 0] ** 2
    ts = TimeSeries(y, 0.1)
    assert ts.n_samples == 25_000
    start = time.perf_counter()
    model = fit_surrogate(ts, degree=2, seed=0)
    elapsed = time.perf_counter() - start
    assert len(model.oscillators) == 10
    assert elapsed < 300.0


@pytest.mark.integration
def test_cli_rerun_is_independent_of_concurrency(tmp_path, write_series):
    rng = np.random.default_rng(5)
    z1 = simulate(OscillatorParams.from_k_beta(10.0, 1.0), 200.0, 0.1, rng).values[:, 0]
    z2 = simulate(OscillatorParams.from_k_beta(3.0, 2.0), 200.0, 0.1, rng).values[:, 0]
    record = write_series(TimeSeries(np.column_stack([z1, z1 + z2 + 0.1 * z2**3]), 0.1, ("a", "b")), "rec.csv")

    outputs = []
    for workers in ("1", "3"):
        model_path = tmp_path / f"model_{workers}.json"
        argv = ["fit", "--input", str(record), "--degree", "2", "--swarm", "12", "--pso-iters", "20",
                "--max-concurrency", workers, "--seed", "8", "--out", str(model_path)]
        assert main(argv) == EXIT_OK
        out = tmp_path / f"sim_{workers}.csv"
        assert main(["simulate", "--model", str(model_path), "--T", "30", "--seed", "2", "--out", str(out)]) == EXIT_OK
        outputs.append((load_model(model_path), load_csv(out)))

    (m1, s1), (m3, s3) = outputs
    assert m1.oscillators == m3.oscillators
    for c1, c3 in zip(m1.map.components, m3.map.components):
        np.testing.assert_array_equal(c1.coefficients, c3.coefficients)
    np.testing.assert_array_equal(s1.values, s3.values)
    assert math.isclose(s1.dt, s3.dt)
