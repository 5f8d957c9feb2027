import numpy as np
import pytest

import hypershell as hs
from hypershell import shells


@pytest.fixture(scope="session")
def profile():
    return hs.default_profile()


@pytest.fixture(scope="session")
def law_log(profile):
    # admissible in d=2 with a divergent correction
    return hs.DissipationLaw(alpha=2.0, beta=0.0, dim=2, g=hs.log_power(1.0))


@pytest.fixture(scope="session")
def law_flat():
    return hs.DissipationLaw(alpha=2.0, beta=0.0, dim=2, g=hs.constant(1.0))


@pytest.fixture(scope="session")
def law_smoothed():
    # nonzero advection smoothing, still admissible in d=2
    return hs.DissipationLaw(alpha=1.5, beta=0.5, dim=2, g=hs.log_power(1.0))


@pytest.fixture(scope="session")
def random_k8(profile):
    return hs.random_smooth_state(2, 8, decay=2.0, amplitude=1.0, seed=5)


@pytest.fixture(scope="session")
def k16_run(law_log, profile):
    """Short viscous K=16 run sampled every step, with interaction frames."""
    config = hs.RunConfig(cutoff=16, dt=1e-3, t_end=0.02, sample_every=1, seed=7)
    state = hs.random_smooth_state(2, 16, decay=4.0, amplitude=0.5, seed=7)
    trajectory = hs.integrate(state, law_log, config)
    st = shells.shell_trajectory(trajectory, profile, with_interactions=True)
    return trajectory, st


def make_config(path, **overrides):
    """Write a runnable config file; overrides replace the defaults."""
    values = {
        "law.alpha": "2.0",
        "law.beta": "0.0",
        "law.dim": "2",
        "law.g.family": "log_power",
        "law.g.param": "1.0",
        "run.cutoff": "8",
        "run.dt": "0.001",
        "run.t_end": "0.02",
        "run.sample_every": "2",
        "run.seed": "3",
        "run.sobolev_index": "4.0",
        "init.kind": "random_smooth",
        "init.decay": "4.0",
        "init.amplitude": "0.5",
        "shells.theta": "1.0",
        "shells.n0": "1",
        "shells.k_max": "50",
    }
    values.update({k: (None if v is None else str(v)) for k, v in overrides.items()})
    lines = [f"{k} = {v}" for k, v in values.items() if v is not None]
    path.write_text("\n".join(lines) + "\n")
    return path
