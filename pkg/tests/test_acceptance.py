"""Package acceptance checks.

Each test verifies one named criterion at a pinned tolerance and records a
verdict; the conftest terminal-summary hook prints one PASS/FAIL line per
criterion after the run.  Worked-example values are computed by hand or by
an independent solver, never read back from the code under test.
"""
import asyncio
import math
import time

import numpy as np
import httpx
import pytest

import oasis.dan as dan
import oasis.revin as revin
from oasis.baselines.kriging import KrigingModel, Variogram
from oasis.dan import TrainConfig, Discriminator, d_loss, g_loss
from oasis.experiment import ExperimentConfig, run_experiment
from oasis.gdc import AttentionConfig, SelfAttentionBlock, attention
from oasis.metrics import mae, rmse, mape
from oasis.nn import Linear, ReLU, Sequential, zero_grads
from oasis.scheduler import make_schedule, add_noise
from oasis.tensorize import (SyntheticConfig, SEMIDIURNAL_PERIOD_H,
                             generate_synthetic)
from oasis.tide import TideModel, fit_sinusoid
from oasis.serve import create_app, load_state

from conftest import TINY_SYNTH, TINY_TRAIN

_T0 = time.perf_counter()

RESULTS = []


def check(name, ok):
    """Record one criterion verdict; fail the test if it does not hold."""
    RESULTS.append((name, bool(ok)))
    assert ok, f"acceptance criterion failed: {name}"


def rel_err(analytic, numeric):
    a = np.asarray(analytic, dtype=float)
    f = np.asarray(numeric, dtype=float)
    return np.abs(a - f) / np.maximum(np.abs(a) + np.abs(f), 1e-8)


# ---------------------------------------------------------------------------
# worked-example equation checks


class TestEquationExactness:
    def test_normalization_round_trip(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(1, 65))
            spread = 10.0 ** rng.uniform(-2, 3)
            x = rng.normal(rng.uniform(-5, 5), spread, n)
            state = revin.RevinState.from_observations(x)
            state.gamma = float(rng.uniform(0.5, 2.0))
            state.beta = float(rng.uniform(-1.0, 1.0))
            y = revin.normalize(x, state)
            back = revin.denormalize(y, state)
            scale = max(1.0, float(np.abs(x).max()))
            worst = max(worst, float(np.abs(back - x).max()) / scale)
        check("normalization round trip over 1000 seeded arrays "
              "(rel err <= 1e-6)", worst <= 1e-6)

    def test_attention_row_sums_and_single_token(self):
        rng = np.random.default_rng(1)
        Q, K, V = rng.normal(size=(3, 2, 2, 5, 4))
        _, A = attention(Q, K, V)
        rows_ok = float(np.abs(A.sum(axis=-1) - 1.0).max()) <= 1e-6
        Q1, K1, V1 = rng.normal(size=(3, 1, 1, 1, 4))
        out1, A1 = attention(Q1, K1, V1)
        single_ok = np.array_equal(out1, V1) and np.array_equal(
            A1, np.ones_like(A1))
        check("attention rows sum to 1 (tol 1e-6) and a single-token "
              "sequence returns V exactly", rows_ok and single_ok)

    def test_cosine_schedule_shape(self):
        T, b0, bT = 50, 1e-4, 0.02
        sched = make_schedule(T, b0, bT)
        end_ok = abs(sched.beta_at(T) - bT) <= 1e-12
        mid_ok = abs(sched.beta_at(T // 2) - 0.5 * (b0 + bT)) <= 1e-12
        rec = [abs(sched.alpha_bar_at(1) - (1.0 - sched.beta_at(1)))]
        for t in range(2, T + 1):
            rec.append(abs(sched.alpha_bar_at(t)
                           - sched.alpha_bar_at(t - 1)
                           * (1.0 - sched.beta_at(t))))
        check("cosine schedule: beta(T)=betaT, beta(T/2)=(beta0+betaT)/2, "
              "alpha-bar recurrence (tol 1e-12)",
              end_ok and mid_ok and max(rec) <= 1e-12)

    def test_noising_with_zero_noise(self):
        sched = make_schedule(50, 1e-4, 0.02)
        rng = np.random.default_rng(2)
        x = rng.normal(size=7)
        t = 13
        got = add_noise(x, t, np.zeros_like(x), sched)
        want = math.sqrt(sched.alpha_bar_at(t)) * x
        check("noising with zero noise equals sqrt(alpha_bar_t) * x "
              "(tol 1e-12)", float(np.abs(got - want).max()) <= 1e-12)

    def test_critic_loss_at_half(self):
        p = np.full(8, 0.5)
        check("critic loss at p=0.5 equals ln 2 (tol 1e-6)",
              abs(d_loss(p, p) - math.log(2.0)) <= 1e-6)

    def test_generator_loss_worked_example(self):
        # MSE([1,3] vs [2,2]) = 1; matched features contribute 0
        f = np.array([[0.7, -0.2], [0.1, 0.4]])
        val = g_loss(np.array([1.0, 3.0]), np.array([2.0, 2.0]), f, f.copy())
        check("generator loss worked example equals 1 (tol 1e-9)",
              abs(val - 1.0) <= 1e-9)

    def test_error_metric_worked_examples(self):
        y = np.array([1.0, 2.0])
        yh = np.array([2.0, 4.0])
        ok = (abs(mae(y, yh) - 1.5) <= 1e-12
              and abs(rmse(y, yh) - 1.5811) <= 1e-4
              and abs(mape(y, yh) - 100.0) <= 1e-9)
        check("error metrics worked example: MAE 1.5, RMSE 1.5811 "
              "(tol 1e-4), MAPE 100%", ok)


# ---------------------------------------------------------------------------
# finite-difference gradient suite (small shapes: d_model <= 8, N <= 4)

FD_H = 1e-6


class TestGradientSuite:
    def test_normalization_affine_grads(self):
        rng = np.random.default_rng(3)
        x = rng.normal(2.0, 1.5, 16)
        up = rng.normal(size=16)
        state = revin.RevinState.from_observations(x)
        state.gamma, state.beta = 1.3, -0.4

        dgamma, dbeta = revin.normalize_param_grads(x, state, up)

        def loss(g, b):
            st = revin.RevinState(mu=state.mu, var=state.var,
                                  gamma=g, beta=b, eps=state.eps)
            return float((up * revin.normalize(x, st)).sum())

        fd_gamma = (loss(1.3 + FD_H, -0.4) - loss(1.3 - FD_H, -0.4)) / (2 * FD_H)
        fd_beta = (loss(1.3, -0.4 + FD_H) - loss(1.3, -0.4 - FD_H)) / (2 * FD_H)
        worst = max(float(rel_err(np.sum(dgamma), fd_gamma)),
                    float(rel_err(np.sum(dbeta), fd_beta)))
        check("normalization affine gradients match finite differences "
              "(rel err <= 1e-3)", worst <= 1e-3)

    def test_attention_projection_grads(self):
        rng = np.random.default_rng(4)
        block = SelfAttentionBlock(AttentionConfig(d_model=8, n_heads=2), rng)
        x = rng.normal(size=(1, 4, 8))
        R = rng.normal(size=(1, 4, 8))

        y, cache = block.forward(x)
        _, grads = block.backward(R, cache)
        W = block.params["W_Q"].value

        def loss():
            out, _ = block.forward(x)
            return float((out * R).sum())

        worst = 0.0
        idx = [(int(i), int(j)) for i, j in
               rng.integers(0, 8, size=(6, 2))]
        for i, j in idx:
            keep = W[i, j]
            W[i, j] = keep + FD_H
            hi = loss()
            W[i, j] = keep - FD_H
            lo = loss()
            W[i, j] = keep
            worst = max(worst, float(rel_err(grads["W_Q"][i, j],
                                             (hi - lo) / (2 * FD_H))))
        check("attention query-projection gradients match finite "
              "differences (rel err <= 1e-3)", worst <= 1e-3)

    def test_generator_loss_end_to_end_grads(self):
        # two-layer generator feeding the critic's feature tap
        rng = np.random.default_rng(5)
        gen = Sequential([Linear(5, 8, rng), ReLU(), Linear(8, 1, rng)])
        disc = Discriminator(1, TrainConfig(disc_hidden=8,
                                            disc_feature_dim=4), rng)
        x = rng.normal(size=(12, 5))
        s = rng.normal(size=12)

        def loss():
            yhat, _ = gen.forward(x)
            _, f_real, _ = disc.forward(s[:, None])
            _, f_fake, _ = disc.forward(yhat[:, [0]])
            return g_loss(s, yhat[:, 0], f_real, f_fake)

        zero_grads(gen.params)
        yhat, caches = gen.forward(x)
        s_hat = yhat[:, 0]
        _, f_real, _ = disc.forward(s[:, None])
        _, f_fake, cache_f = disc.forward(s_hat[:, None])
        n = s.size
        gap = f_real.mean(axis=0) - f_fake.mean(axis=0)
        dtap = np.tile(-np.sign(gap) / (gap.size * n), (n, 1))
        ds_hat = 2.0 * (s_hat - s) / n
        ds_hat = ds_hat + disc.backward(None, dtap, cache_f)[:, 0]
        gen.backward(ds_hat[:, None], caches)

        worst = 0.0
        for p in gen.params:
            flat_v = p.value.reshape(-1)
            flat_g = p.grad.reshape(-1)
            for k in range(flat_v.size):
                keep = flat_v[k]
                flat_v[k] = keep + FD_H
                hi = loss()
                flat_v[k] = keep - FD_H
                lo = loss()
                flat_v[k] = keep
                fd = (hi - lo) / (2 * FD_H)
                if abs(fd) < 1e-12 and abs(flat_g[k]) < 1e-12:
                    continue   # dead ReLU unit: both sides exactly zero
                worst = max(worst, float(rel_err(flat_g[k], fd)))
        check("generator loss gradients through a two-layer network match "
              "finite differences (rel err <= 1e-3)", worst <= 1e-3)

    def test_fast_suites_within_budget(self):
        # worked examples plus this gradient suite share a 30 s + 2 min cap
        check("worked-example and gradient suites finish within their "
              "time budgets", time.perf_counter() - _T0 < 150.0)


# ---------------------------------------------------------------------------
# desk-scale end-to-end run (about 5000 points, three seeds)
#
# Two synthetic regimes.  The main one has long trajectory spans, so each
# trajectory's mean is a pure sensor-offset nuisance that instance
# normalization removes, and no tide covariate, so the tidal oscillation
# must be learned from raw time, which is where window attention earns
# its keep.  The second regime carries a tide covariate whose value is
# cheap to use and expensive to reconstruct, isolating that switch.

MAIN_SYNTH = dict(n_trajectories=25, steps=200, noise_sigma=0.2,
                  traj_offset_sigma=1.5, walk_step=0.003, lon_gradient=0.5,
                  time_step=1200.0, tide_coupling=2.0, seed=123)
MAIN_TRAIN = dict(epochs=60, batch_size=8, d_model=32, n_heads=2,
                  fe_hidden=16, disc_hidden=32, disc_feature_dim=16,
                  fm_weight=3.0, betaT=0.1)
TIDE_SYNTH = dict(n_trajectories=25, steps=200, noise_sigma=0.1,
                  traj_offset_sigma=0.0, walk_step=0.003, lon_gradient=5.0,
                  time_step=300.0, seed=321)
TIDE_TRAIN = dict(epochs=25, batch_size=8, d_model=32, n_heads=4,
                  fe_hidden=32, disc_hidden=32, disc_feature_dim=16)
DESK_SEEDS = (42, 43, 44)
DESK_VARIANTS = (("full", {}),
                 ("no_norm", {"use_norm": False}),
                 ("no_gdc", {"use_gdc": False}),
                 ("no_sd", {"use_sd": False}))


@pytest.fixture(scope="module")
def desk():
    """All desk-scale fits: model variants and baselines across seeds."""
    t0 = time.perf_counter()
    traj, _ = generate_synthetic(SyntheticConfig(**MAIN_SYNTH))
    tidal, _ = generate_synthetic(SyntheticConfig(**TIDE_SYNTH))
    maes = {}
    history = None
    for seed in DESK_SEEDS:
        for tag, flags in DESK_VARIANTS:
            cfg = ExperimentConfig(model="oasis", seed=seed, use_tide=False,
                                   train=dict(MAIN_TRAIN), **flags)
            res = run_experiment(cfg, dataset=traj)
            maes[(tag, seed)] = res["row"]["mae"]
            if tag == "full" and seed == DESK_SEEDS[0]:
                history = res["model"].history
        for name in ("gan", "kriging"):
            cfg = ExperimentConfig(model=name, seed=seed, use_tide=False,
                                   train=dict(MAIN_TRAIN))
            maes[(name, seed)] = run_experiment(cfg, dataset=traj)["row"]["mae"]
        for tag, flags in (("with_tide", {}),
                           ("without_tide", {"use_tide": False})):
            cfg = ExperimentConfig(model="oasis", seed=seed,
                                   train=dict(TIDE_TRAIN), **flags)
            maes[(tag, seed)] = run_experiment(cfg, dataset=tidal)["row"]["mae"]
    return {"maes": maes, "history": history,
            "elapsed": time.perf_counter() - t0}


def majority(maes, a, b, strict=False):
    """True when variant a is at least as good as b on most seeds."""
    if strict:
        wins = sum(maes[(a, s)] < maes[(b, s)] for s in DESK_SEEDS)
    else:
        wins = sum(maes[(a, s)] <= maes[(b, s)] for s in DESK_SEEDS)
    return wins * 2 > len(DESK_SEEDS)


class TestDeskScale:
    def test_training_reduces_mse(self, desk):
        h = desk["history"]["mse"]
        check("desk-scale training: final epoch MSE below half of the "
              "first epoch", h[-1] < 0.5 * h[0])

    def test_full_beats_adversarial_baseline(self, desk):
        check("full model at or below the adversarial-only baseline MAE "
              "on a majority of 3 seeds", majority(desk["maes"], "full", "gan"))

    def test_full_beats_kriging(self, desk):
        check("full model at or below the kriging baseline MAE on a "
              "majority of 3 seeds", majority(desk["maes"], "full", "kriging"))

    def test_full_beats_each_ablation(self, desk):
        ok = all(majority(desk["maes"], "full", tag)
                 for tag in ("no_norm", "no_gdc", "no_sd"))
        check("full model at or below each single-switch ablation MAE on "
              "a majority of 3 seeds", ok)

    def test_tide_covariate_helps(self, desk):
        check("tide covariate strictly lowers test MAE on a majority of "
              "3 seeds", majority(desk["maes"], "with_tide", "without_tide",
                                  strict=True))

    def test_wall_time(self, desk):
        check("desk-scale experiment completes within 10 minutes",
              desk["elapsed"] < 600.0)


# ---------------------------------------------------------------------------
# tide recovery


class TestTideRecovery:
    def test_eight_noisy_events(self):
        amp, phase, offset = 1.0, 0.5, 2.0
        omega = 2.0 * math.pi / SEMIDIURNAL_PERIOD_H
        rng = np.random.default_rng(11)
        span = 2.0 * SEMIDIURNAL_PERIOD_H * 3600.0
        t = np.sort(rng.uniform(0.0, span, 8))
        h = (offset + amp * np.sin(omega * t / 3600.0 + phase)
             + rng.normal(0.0, 0.01, 8))
        m = fit_sinusoid(t, h)
        params_ok = (abs(m.amplitude - amp) / amp <= 0.02
                     and abs(m.phase - phase) / phase <= 0.02
                     and abs(m.offset - offset) / offset <= 0.02)
        tt = np.linspace(0.0, 2.0 * span, 500)
        truth = offset + amp * np.sin(omega * tt / 3600.0 + phase)
        pred = m.height_at(tt)
        held_out = float(np.sqrt(np.mean((pred - truth) ** 2)))
        check("harmonic fit on 8 noisy events recovers amplitude, phase "
              "and offset within 2%", params_ok)
        check("harmonic fit held-out RMSE at most 0.02 m", held_out <= 0.02)


# ---------------------------------------------------------------------------
# kriging against a hand-solved system

ORACLE_LAT = np.array([0.0, 1.0, 2.0])
ORACLE_VAL = np.array([0.0, 1.0, 2.0])
ORACLE_VG = Variogram(model="exponential", nugget=0.0, sill=1.0,
                      range_param=1.0)
# solved outside the package for the query at lat 0.5
ORACLE_EST = 0.787451982529
ORACLE_VAR = 1.022756686841


class TestKrigingOracle:
    def test_matches_hand_solved_system(self):
        m = KrigingModel(ORACLE_LAT, np.zeros(3), ORACLE_VAL, ORACLE_VG)
        est, var = m.predict(0.5, 0.0)
        check("kriging estimate and variance match the hand-solved "
              "3-point system (tol 1e-6)",
              abs(est - ORACLE_EST) <= 1e-6 and abs(var - ORACLE_VAR) <= 1e-6)
        exact = all(
            abs(m.predict(ORACLE_LAT[i], 0.0)[0] - ORACLE_VAL[i]) <= 1e-9
            for i in range(3))
        check("nugget-free kriging reproduces data points exactly", exact)


# ---------------------------------------------------------------------------
# service behavior

T_NOON = 1466078400.0   # 2016-06-16T12:00:00Z


def client_for(app):
    transport = httpx.ASGITransport(app=app)
    return httpx.AsyncClient(transport=transport, base_url="http://testserver")


def post(app, url, **kw):
    async def go():
        async with client_for(app) as c:
            return await c.post(url, **kw)
    return asyncio.run(go())


def get(app, url):
    async def go():
        async with client_for(app) as c:
            return await c.get(url)
    return asyncio.run(go())


@pytest.fixture(scope="module")
def svc_tide():
    return TideModel(amplitude=0.5, phase=0.3, offset=0.1,
                     period_hours=SEMIDIURNAL_PERIOD_H,
                     t_min=T_NOON - 43200.0, t_max=T_NOON + 43200.0)


@pytest.fixture(scope="module")
def svc_app(tiny_ckpt, svc_tide):
    return create_app(tiny_ckpt, tide_model=svc_tide, admin_token="sesame")


@pytest.fixture(scope="module")
def svc_probe(svc_app):
    region = get(svc_app, "/v1/model").json()["region"]
    return {"timestamp": "2016-06-16T12:00:00Z",
            "lat": 0.5 * (region["lat_min"] + region["lat_max"]),
            "lon": 0.5 * (region["lon_min"] + region["lon_max"])}


@pytest.fixture(scope="module")
def other_ckpt(tmp_path_factory):
    traj, _ = generate_synthetic(SyntheticConfig(**TINY_SYNTH))
    model, _ = dan.train(traj, dan.TrainConfig(**{**TINY_TRAIN, "seed": 7,
                                                  "epochs": 1}))
    path = tmp_path_factory.mktemp("swap") / "other.ckpt"
    dan.save_checkpoint(str(path), model)
    return str(path)


class TestService:
    def test_checkpoint_round_trip_probe(self, tiny_model, tiny_ckpt):
        model = tiny_model[0]
        loaded = dan.load_checkpoint(tiny_ckpt)
        rng = np.random.default_rng(6)
        t = np.sort(rng.uniform(T_NOON, T_NOON + 86400.0, 100))
        # scatter the probe inside the synthetic training region
        lat = rng.uniform(27.41, 27.54, 100)
        lon = rng.uniform(-80.39, -80.21, 100)
        tide = rng.uniform(-0.5, 0.5, 100)
        a = model.predict_sequence(t, lat, lon, tide=tide)
        b = loaded.predict_sequence(t, lat, lon, tide=tide)
        check("checkpoint save/load reproduces a 100-point probe "
              "(tol 1e-9)", float(np.abs(a - b).max()) <= 1e-9)

    def test_batch_of_one_equals_single(self, svc_app, svc_probe):
        single = post(svc_app, "/v1/impute", json=svc_probe).json()
        batch = post(svc_app, "/v1/impute/batch", json=[svc_probe]).json()
        row = batch["results"][0]
        check("batch of one returns exactly the single-request salinity",
              row["ok"] and row["result"]["salinity"] == single["salinity"])

    def test_corrupt_swap_isolated(self, svc_app, svc_probe, tmp_path):
        before = post(svc_app, "/v1/impute", json=svc_probe).json()
        junk = tmp_path / "junk.ckpt"
        junk.write_bytes(b"not a checkpoint at all")
        r = post(svc_app, "/v1/model/swap", json={"path": str(junk)},
                 headers={"x-admin-token": "sesame"})
        after = post(svc_app, "/v1/impute", json=svc_probe).json()
        check("corrupt checkpoint swap is rejected and leaves serving "
              "state untouched", r.status_code == 400 and after == before)

    def test_thousand_concurrent_during_swaps(self, tiny_ckpt, other_ckpt,
                                              svc_tide, svc_probe):
        app = create_app(tiny_ckpt, tide_model=svc_tide,
                         admin_token="sesame")
        expected = {}
        tide_h = float(svc_tide.height_at(T_NOON))
        for path in (tiny_ckpt, other_ckpt):
            st = load_state(path)
            expected[st.version] = st.model.predict_single(
                T_NOON, svc_probe["lat"], svc_probe["lon"], tide_h)

        async def volley():
            async with client_for(app) as c:
                tasks = []
                for i in range(1000):
                    if i % 50 == 25:
                        path = other_ckpt if (i // 50) % 2 == 0 else tiny_ckpt
                        tasks.append(c.post(
                            "/v1/model/swap", json={"path": path},
                            headers={"x-admin-token": "sesame"}))
                    else:
                        tasks.append(c.post("/v1/impute", json=svc_probe))
                return await asyncio.gather(*tasks)

        responses = asyncio.run(volley())
        coherent = 0
        ok = True
        for r in responses:
            ok = ok and r.status_code == 200
            body = r.json()
            if "salinity" not in body:
                continue
            ok = ok and body["model_version"] in expected
            ok = ok and body["salinity"] == expected[body["model_version"]]
            coherent += 1
        check("1000 concurrent requests during live swaps each answered "
              "by one coherent model version", ok and coherent == 980)
