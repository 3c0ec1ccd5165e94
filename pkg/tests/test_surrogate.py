import asyncio
import json

import numpy as np
import pytest
from langgraph.types import Send

from src.modeling.configuration import Configuration
from src.modeling.errors import ConfigurationError, DegenerateChannelError, ModelFileError
from src.modeling.fit_graph import _channel_semaphore, dispatch_oscillator_fits
from src.modeling.generators import heavy_tail_inverse
from src.modeling.oscillator import OscillatorParams, simulate
from src.modeling.seeding import STREAM_OSCILLATOR, STREAM_SYNTH, channel_rng
from src.modeling.surrogate import (
    SurrogateModel,
    afit_surrogate,
    agenerate,
    covariate_models,
    fit_surrogate,
    generate,
    generate_report,
    load_model,
    model_to_dict,
    modeling_record,
    rank_covariates,
    save_model,
    transformed_channels,
)
from src.modeling.spectral import relative_l1, welch_psd
from src.modeling.timeseries import TimeSeries, moments
from src.modeling.transport import MonotoneTriangularMap


@pytest.fixture
def identity_model(unit_params):
    return SurrogateModel(map=MonotoneTriangularMap.identity(1), oscillators=(unit_params,), dt=0.1)


@pytest.fixture(scope="module")
def cubic_model():
    """Oscillator seen through the inverse of z + 0.1 z^3, so a cubic map Gaussianizes it exactly."""
    z = simulate(OscillatorParams.from_k_beta(10.0, 1.0), 1000.0, 0.1, channel_rng(0, STREAM_SYNTH))
    ts = TimeSeries(heavy_tail_inverse(z.values[:, 0])[:, None], 0.1, ("y",))
    cfg = Configuration(swarm=20, pso_iters=60, max_concurrency=2)
    return ts, fit_surrogate(ts, degree=3, seed=0, config=cfg)


class TestConfiguration:
    def test_configurable_beats_environment(self, monkeypatch):
        monkeypatch.setenv("SURROGATE_DEGREE", "5")
        cfg = Configuration.from_runnable_config({"configurable": {"degree": 2, "swarm": 12}})
        assert cfg.degree == 2
        assert cfg.swarm == 12

    def test_environment_fills_unset_fields(self, monkeypatch):
        monkeypatch.setenv("SURROGATE_DEGREE", "5")
        cfg = Configuration.from_runnable_config({"configurable": {"degree": None, "swarm": 12}})
        assert cfg.degree == 5
        assert Configuration.from_runnable_config().degree == 5

    def test_variance_window_from_environment(self, monkeypatch):
        monkeypatch.setenv("SURROGATE_VARIANCE_WINDOW", "0.25,4")
        assert Configuration.from_overrides().variance_window == (0.25, 4.0)

    def test_overrides_skip_none(self):
        cfg = Configuration.from_overrides(degree=None, ridge=0.5)
        assert cfg.degree == 3
        assert cfg.ridge == 0.5

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            Configuration.from_overrides(degree=0)


class TestGenerate:
    def test_identity_map_reproduces_oscillator(self, identity_model, unit_params):
        y = generate(identity_model, T=50.0, rng_seed=5)
        q = simulate(unit_params, 50.0, 0.1, channel_rng(5, STREAM_OSCILLATOR, 0))
        np.testing.assert_allclose(y.values, q.values, atol=1e-9)
        assert y.names == ("y1",)

    def test_seeded(self, identity_model):
        a = generate(identity_model, 20.0, rng_seed=1)
        b = generate(identity_model, 20.0, rng_seed=1)
        c = generate(identity_model, 20.0, rng_seed=2)
        np.testing.assert_array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_report_seeds(self, identity_model):
        gen = generate_report(identity_model, 20.0, rng_seed=7)
        assert gen.seeds["master"] == 7
        assert gen.seeds["oscillator_seeds"]["0"][-2:] == [STREAM_OSCILLATOR, 0]
        assert gen.clamp_fraction == 0.0
        assert gen.warnings == []

    def test_clamping_is_reported(self, unit_params):
        fold = MonotoneTriangularMap.from_monomials_1d((0.0, 1.0, 0.0, -1.0 / 3.0), domain=(-3.0, 3.0))
        model = SurrogateModel(map=fold, oscillators=(unit_params,), dt=0.1)
        gen = generate_report(model, 100.0, rng_seed=0)
        assert gen.clamp_fraction > 0.1
        assert gen.warnings
        assert np.all(np.abs(gen.series.values) <= 1.0 + 1e-9)

    def test_duration_shorter_than_step(self, identity_model):
        with pytest.raises(ConfigurationError):
            generate(identity_model, 0.01)

    def test_oscillator_count_must_match(self, unit_params):
        with pytest.raises(ConfigurationError):
            SurrogateModel(map=MonotoneTriangularMap.identity(2), oscillators=(unit_params,), dt=0.1)


class TestFit:
    def test_record_is_gaussianized(self, cubic_model):
        ts, model = cubic_model
        q = transformed_channels(model, ts)
        m = moments(q)
        assert abs(m.excess_kurtosis) < 0.2
        assert abs(m.skewness) < 0.1
        assert m.variance == pytest.approx(1.0, abs=0.1)
        assert q.names == ("y",)

    def test_oscillator_matches_underlying_process(self, cubic_model):
        _, model = cubic_model
        p = model.oscillators[0]
        assert p.k == pytest.approx(10.0, rel=0.15)
        assert p.beta == pytest.approx(1.0, rel=0.35)
        assert p.D == pytest.approx(p.k * p.beta)

    def test_provenance(self, cubic_model):
        ts, model = cubic_model
        prov = model.provenance
        assert prov["training_samples"] == ts.n_samples
        assert prov["degree"] == 3
        assert prov["match"] == "psd"
        assert len(prov["diagnostics"]["channels"]) == 1
        assert prov["diagnostics"]["channels"][0]["method"] == "psd"

    def test_surrogate_keeps_marginal_shape(self, cubic_model):
        ts, model = cubic_model
        y = generate(model, 1000.0, rng_seed=3)
        assert moments(ts).excess_kurtosis < -0.2
        assert moments(y).excess_kurtosis == pytest.approx(moments(ts).excess_kurtosis, abs=0.3)
        assert np.var(y.values) == pytest.approx(np.var(ts.values), rel=0.2)

    async def test_two_channel_fit_with_ordering(self, rng):
        z1 = simulate(OscillatorParams.from_k_beta(10.0, 1.0), 300.0, 0.1, rng).values[:, 0]
        z2 = simulate(OscillatorParams.from_k_beta(4.0, 2.0), 300.0, 0.1, rng).values[:, 0]
        ts = TimeSeries(np.column_stack([z1, 0.6 * z1 + z2 + 0.1 * z2**3]), 0.1, ("u", "v"))
        cfg = Configuration(swarm=12, pso_iters=30, max_concurrency=2)
        model = await afit_surrogate(ts, degree=2, ordering=[1, 0], seed=4, config=cfg)
        assert model.ordering == (1, 0)
        assert model.map.map_names == ("v", "u")
        assert len(model.oscillators) == 2
        assert set(model.provenance["pso_seeds"]) == {"0", "1"}
        y = (await agenerate(model, 50.0, rng_seed=1)).series
        assert y.names == ("u", "v")

    async def test_autocorrelation_matching(self, oscillator_record):
        cfg = Configuration(swarm=12, pso_iters=30, acf_max_lag=30)
        model = await afit_surrogate(oscillator_record, degree=1, match="autocorr", config=cfg)
        assert model.provenance["diagnostics"]["channels"][0]["method"] == "autocorr"
        assert model.oscillators[0].k == pytest.approx(10.0, rel=0.2)

    def test_unknown_match_mode(self, oscillator_record):
        with pytest.raises(ConfigurationError):
            fit_surrogate(oscillator_record, match="moments")


def test_dispatch_sends_one_task_per_channel(rng):
    tmap = MonotoneTriangularMap.identity(3)
    ts = TimeSeries(rng.standard_normal((100, 3)), 0.5)
    sends = dispatch_oscillator_fits({"series": ts, "transport_map": tmap, "transformed": ts.values, "seed": 9})
    assert len(sends) == 3
    assert all(isinstance(s, Send) and s.node == "fit_channel_oscillator" for s in sends)
    assert [s.arg["index"] for s in sends] == [0, 1, 2]
    assert sends[1].arg["dt"] == 0.5 and sends[1].arg["seed"] == 9


async def test_channel_semaphore_follows_limit():
    two = _channel_semaphore(2)
    assert _channel_semaphore(2) is two
    five = _channel_semaphore(5)
    assert five is not two
    for _ in range(5):
        await asyncio.wait_for(five.acquire(), 0.1)
    assert five.locked()
    for _ in range(5):
        five.release()


@pytest.mark.slow
class TestSurrogateStatistics:
    @pytest.fixture(scope="class")
    def fitted(self):
        rng = np.random.default_rng(77)
        z1 = simulate(OscillatorParams.from_k_beta(10.0, 1.0), 2000.0, 0.1, rng).values[:, 0]
        z2 = simulate(OscillatorParams.from_k_beta(4.0, 2.0), 2000.0, 0.1, rng).values[:, 0]
        y1 = heavy_tail_inverse(z1)
        ts = TimeSeries(np.column_stack([y1, 0.5 * y1 + heavy_tail_inverse(z2)]), 0.1, ("a", "b"))
        cfg = Configuration(swarm=20, pso_iters=60, max_concurrency=2)
        model = fit_surrogate(ts, degree=3, seed=0, config=cfg)
        return ts, model, generate(model, 10_000.0, rng_seed=5)

    def test_transformed_channels_are_uncorrelated(self, fitted):
        _, model, y = fitted
        assert y.n_samples == 100_000
        q = transformed_channels(model, y).values
        assert abs(np.corrcoef(q[:, 0], q[:, 1])[0, 1]) < 0.05

    def test_spectra_match_training_record(self, fitted):
        ts, _, y = fitted
        for j in range(2):
            s_data = welch_psd(ts.values[:, j], ts.dt, nperseg=256)
            s_model = welch_psd(y.values[:, j], y.dt, nperseg=256)
            assert relative_l1(s_model, s_data) < 0.25


class TestModelFiles:
    def test_saved_model_generates_identically(self, tmp_path, cubic_model):
        _, model = cubic_model
        save_model(model, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        assert back.oscillators == model.oscillators
        np.testing.assert_array_equal(generate(back, 20.0, 2).values, generate(model, 20.0, 2).values)

    def test_unit_variance_violation_names_field(self, tmp_path, identity_model):
        data = model_to_dict(identity_model)
        data["oscillators"][0]["D"] = 3.0
        (tmp_path / "m.json").write_text(json.dumps(data))
        with pytest.raises(ModelFileError) as err:
            load_model(tmp_path / "m.json")
        assert err.value.field == "oscillators.0.D"

    def test_schema_error_names_field(self, tmp_path, identity_model):
        data = model_to_dict(identity_model)
        del data["dt"]
        (tmp_path / "m.json").write_text(json.dumps(data))
        with pytest.raises(ModelFileError) as err:
            load_model(tmp_path / "m.json")
        assert err.value.field == "dt"

    def test_truncated_file(self, tmp_path, identity_model):
        save_model(identity_model, tmp_path / "m.json")
        text = (tmp_path / "m.json").read_text()
        (tmp_path / "m.json").write_text(text[: len(text) // 2])
        with pytest.raises(ModelFileError) as err:
            load_model(tmp_path / "m.json")
        assert err.value.field == "file"


class TestCovariates:
    @pytest.fixture
    def record(self, rng):
        y = rng.standard_normal(2000)
        candidates = TimeSeries(
            np.column_stack([-y + 2.0 * rng.standard_normal(2000), np.ones(2000), y + 0.1 * rng.standard_normal(2000)]),
            0.1,
            ("weak", "flat", "strong"),
        )
        return TimeSeries(y[:, None], 0.1, ("target",)), candidates

    def test_ranking_by_absolute_correlation(self, record):
        target, candidates = record
        ranked = rank_covariates(target, candidates)
        assert [c.name for c in ranked] == ["strong", "weak"]
        assert ranked[0].correlation > 0.99
        assert ranked[1].correlation < 0

    def test_target_is_last_channel(self, record):
        target, candidates = record
        rec = modeling_record(target, candidates, 1)
        assert rec.names == ("strong", "target")
        with pytest.raises(ConfigurationError):
            modeling_record(target, candidates, 3)

    def test_one_model_per_covariate_count(self, record):
        target, candidates = record
        cfg = Configuration(swarm=8, pso_iters=10, max_concurrency=2)
        models = covariate_models(target, candidates, [0, 2], degree=1, config=cfg)
        assert sorted(models) == [0, 2]
        assert models[0].names == ("target",)
        assert models[2].names == ("strong", "weak", "target")

    def test_constant_target(self, record):
        _, candidates = record
        with pytest.raises(DegenerateChannelError):
            rank_covariates(np.ones(2000), candidates)
