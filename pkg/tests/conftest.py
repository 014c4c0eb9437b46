"""Shared fixtures: a small deterministic dataset and one trained model.

The trained model is session-scoped because several suites (checkpoint,
serving, CLI) only need *a* valid artifact, not a good one.
"""

import sys

import numpy as np
import pytest

from oasis import dan
from oasis.tensorize import SyntheticConfig, generate_synthetic, split_trajectories


TINY_SYNTH = dict(n_trajectories=10, steps=60, noise_sigma=0.05, seed=7)

TINY_TRAIN = dict(epochs=3, batch_size=4, d_model=16, n_heads=2,
                  fe_hidden=16, disc_hidden=16, disc_feature_dim=8, seed=42)


@pytest.fixture(scope="session")
def tiny_traj():
    traj, _ = generate_synthetic(SyntheticConfig(**TINY_SYNTH))
    return traj


@pytest.fixture(scope="session")
def tiny_oracle():
    _, oracle = generate_synthetic(SyntheticConfig(**TINY_SYNTH))
    return oracle


@pytest.fixture(scope="session")
def tiny_split(tiny_traj):
    return split_trajectories(tiny_traj, seed=42)


@pytest.fixture(scope="session")
def tiny_val(tiny_traj, tiny_split):
    return tiny_traj.subset(tiny_split.val_ids)


@pytest.fixture(scope="session")
def tiny_test(tiny_traj, tiny_split):
    return tiny_traj.subset(tiny_split.test_ids)


@pytest.fixture(scope="session")
def tiny_model(tiny_traj, tiny_split, tiny_val):
    train = tiny_traj.subset(tiny_split.train_ids)
    return dan.train(train, dan.TrainConfig(**TINY_TRAIN), val_data=tiny_val)


@pytest.fixture(scope="session")
def tiny_ckpt(tiny_model, tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "tiny.ckpt"
    dan.save_checkpoint(str(path), tiny_model[0])
    return str(path)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per recorded acceptance criterion."""
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, ok in results:
        terminalreporter.write_line(
            ("PASS  " if ok else "FAIL  ") + name)
