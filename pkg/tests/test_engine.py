import numpy as np
import pytest

from softal.datagen import ProcessSpec, generate, split
from softal.dataset import StreamSource, fit_standardizer, load_csv
from softal.engine import EngineConfig, EngineError, run, seed_initial_labels
from softal.oae import OAEArchitecture, OAEModel
from softal.regression import fit_ols


@pytest.fixture(scope="module")
def data():
    spec = ProcessSpec(observed_dim=6, seed=11)
    return split(generate(spec, 900), (0.4, 0.45, 0.15))


def go(data, criterion="qbc", stream=None, oae=None, **kw):
    H, S, T = data
    cfg = EngineConfig(criterion=criterion, use_oae=oae is not None, **kw)
    return run(H, None, stream or StreamSource.from_dataset(S), T, oae, cfg)


def check_contract(trace, budget):
    c = 0
    for rec in trace.steps:
        if rec.queried:
            assert rec.score >= rec.ucl
            c += 1
        elif c < budget:
            assert rec.score < rec.ucl
    assert c == trace.n_queried <= budget
    assert [r.step for r in trace.steps] == list(range(len(trace.steps)))
    idx = [r.index for r in trace.steps]
    assert idx == sorted(idx) and len(set(idx)) == len(idx)
    assert [n for n, _ in trace.curve] == list(range(c + 1))


@pytest.mark.parametrize("criterion", ["rnd", "hot", "qbc", "emc"])
def test_contract_each_criterion(data, criterion):
    trace = go(data, criterion, budget=15, seed=2)
    check_contract(trace, 15)
    # the first p + 2 stream points seed the labeled set
    assert trace.n_initial == 8
    assert trace.steps[0].index == 8
    assert len(trace.steps) == data[1].n - 8


def test_budget_zero_keeps_initial_model(data):
    H, S, T = data
    trace = go(data, "emc", budget=0)
    assert trace.n_queried == 0
    assert len(trace.steps) == S.n - trace.n_initial
    assert trace.model is trace.initial_model
    # initial model is plain OLS on the first n0 standardized stream points
    s = fit_standardizer(H)
    ref = fit_ols(s.transform(S.features[:8]), S.response[:8])
    np.testing.assert_allclose(trace.model.beta, ref.beta, atol=1e-10)


def test_high_alpha_queries_almost_everything(data):
    for seed in range(5):
        trace = go(data, "rnd", alpha=0.999, budget=30, seed=seed)
        assert trace.n_queried == 30
        last = max(r.step for r in trace.steps if r.queried)
        assert last <= 33


def test_deterministic(data):
    a = go(data, "rnd", budget=20, seed=9)
    b = go(data, "rnd", budget=20, seed=9)
    assert a.steps == b.steps and a.curve == b.curve
    c = go(data, "qbc", budget=20, seed=9)
    d = go(data, "qbc", budget=20, seed=9)
    assert c.steps == d.steps and c.curve == d.curve


def test_no_lookahead(data):
    H, S, T = data
    base = go(data, "qbc", budget=20, seed=1)
    cut = 200
    X = S.features.copy()
    y = S.response.copy()
    r = np.random.default_rng(0)
    X[cut:] = r.normal(size=X[cut:].shape) * 5
    y[cut:] = r.normal(size=y[cut:].shape)
    altered = go(data, "qbc", stream=StreamSource(X, y), budget=20, seed=1)
    early = [rec for rec in base.steps if rec.index < cut]
    assert altered.steps[:len(early)] == early


def test_budget_larger_than_stream(data):
    H, S, T = data
    short = StreamSource(S.features[:40], S.response[:40])
    trace = go(data, "rnd", stream=short, alpha=0.5, budget=1000)
    assert len(trace.steps) == 32
    assert trace.n_queried < 32
    curve = trace.rmse_by_acquisition(1000)
    assert curve.shape == (1001,)
    assert np.all(curve[trace.n_queried:] == trace.curve[-1][1])


def test_with_encoder(data, rng):
    oae = OAEModel.initialize(OAEArchitecture((6, 5, 3)), rng=rng)
    trace = go(data, "hot", oae=oae, budget=10)
    check_contract(trace, 10)
    assert trace.n_initial == 5 and trace.model.feature_dim == 3


def test_explicit_labeled_set(data):
    H, S, T = data
    L = S.take(slice(0, 10))
    rest = S.take(slice(10, None))
    cfg = EngineConfig(criterion="emc", budget=5, use_oae=False)
    trace = run(H, L, StreamSource.from_dataset(rest), T, None, cfg)
    assert trace.n_initial == 10 and trace.steps[0].index == 0


def test_config_validation(data):
    with pytest.raises(ValueError):
        EngineConfig(alpha=1.0)
    with pytest.raises(ValueError):
        EngineConfig(budget=-1)
    with pytest.raises(ValueError):
        EngineConfig(initial_labels=3).n_initial(6)
    H, S, T = data
    with pytest.raises(ValueError, match="OAE"):
        run(H, None, StreamSource.from_dataset(S), T, None, EngineConfig(use_oae=True))


def test_seed_initial_labels():
    S = StreamSource(np.arange(40.0).reshape(20, 2), np.arange(20.0))
    L = seed_initial_labels(S, 12)
    assert L.n == 12 and S.cursor == 12 and S.n_queries == 12
    np.testing.assert_array_equal(L.response, np.arange(12.0))
    with pytest.raises(ValueError):
        seed_initial_labels(S, 0)
    with pytest.raises(EngineError):
        seed_initial_labels(S, 9)


def test_refit_failure_reports_step(data):
    H, S, T = data
    X = S.features.copy()
    X[:] = X[0]             # every stream point identical: singular design
    with pytest.raises(EngineError, match="initial fit"):
        go(data, "rnd", stream=StreamSource(X, S.response), budget=3)


def test_trace_files(data, tmp_path):
    trace = go(data, "qbc", budget=5)
    trace.write(tmp_path)
    t = load_csv(tmp_path / "trace.csv")
    assert t.feature_names == ("step", "index", "score", "ucl", "queried")
    assert t.n == len(trace.steps) and t.features[:, 4].sum() == 5
    c = load_csv(tmp_path / "curve.csv")
    assert c.feature_names == ("n_labels", "test_rmse")
    np.testing.assert_array_equal(c.features[:, 1], [v for _, v in trace.curve])
