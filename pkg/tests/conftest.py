import json
import time
import typing
from pathlib import Path

import numpy as np
import pytest

from safecell import kinematics

REPO_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO_ROOT / "configs"

EXP3_TRIALS = (
    ("baseline", "exp3_trial1_baseline"),
    ("static", "exp3_trial2_static"),
    ("gimbal", "exp3_trial3_gimbal"),
    ("haptic", "exp3_trial4_haptic"),
)


class Exp3Outputs(typing.NamedTuple):
    dirs: dict
    elapsed: float

    def __getitem__(self, label):  # convenience for dict-style access
        return self.dirs[label]

    def metrics(self, label):
        return json.loads((self.dirs[label] / "metrics.json").read_text())


@pytest.fixture(scope="session")
def exp3_outputs(tmp_path_factory):
    """Run the four shipped pipette trials once per session via the CLI."""
    from click.testing import CliRunner

    from safecell.cli import main

    root = tmp_path_factory.mktemp("exp3")
    runner = CliRunner()
    outputs = {}
    start = time.perf_counter()
    for label, name in EXP3_TRIALS:
        dest = root / label
        result = runner.invoke(
            main,
            ["run", "--config", str(CONFIG_DIR / f"{name}.yaml"), "--out", str(dest)],
        )
        assert result.exit_code == 0, result.output
        outputs[label] = dest
    return Exp3Outputs(dirs=outputs, elapsed=time.perf_counter() - start)


@pytest.fixture
def ur10():
    return kinematics.builtin_arm("ur10")


@pytest.fixture
def single_link():
    """Degenerate chain: one 1 m link along x, remaining rows all zero."""
    rows = np.zeros((6, 4))
    rows[0, 0] = 1.0  # a1 = 1 m
    return kinematics.ArmModel(dh_rows=rows, name="single_link")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_q(model, rng, margin=0.9):
    lo = model.joint_limits[:, 0] * margin
    hi = model.joint_limits[:, 1] * margin
    return rng.uniform(lo, hi)
