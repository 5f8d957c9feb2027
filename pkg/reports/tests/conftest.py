import json
import math

import numpy as np
import pytest

SHELL_HEADER = "time,shell,energy,dissipation"
DIAG_HEADER = "time,shell,tail_energy,energy_bound,weighted_decrement"


@pytest.fixture()
def reference_run(tmp_path):
    """Small synthetic run directory matching the frozen output schema."""
    run_dir = tmp_path / "run"
    run_dir.mkdir()
    times = [0.0, 0.01, 0.02, 0.03]
    shells = list(range(5))
    shell_rows, diag_rows = [], []
    for t in times:
        energies = [math.exp(-t) * 2.0 ** (-2 * n) for n in shells]
        for n in shells:
            chi = 2.0 ** (2 * n - 1)
            shell_rows.append(f"{t},{n},{energies[n]!r},{chi!r}")
            tail = sum(e**2 for e in energies[n:])
            d = math.sqrt(tail) * (1 + 0.1 * t)
            r = 2.0 ** (-n) * (1 + t)
            diag_rows.append(f"{t},{n},{tail!r},{d!r},{r!r}")
    (run_dir / "shells.csv").write_text(SHELL_HEADER + "\n" + "\n".join(shell_rows) + "\n")
    (run_dir / "diagnostics.csv").write_text(DIAG_HEADER + "\n" + "\n".join(diag_rows) + "\n")
    summary = {
        "lambda": 4.0,
        "Q": [0.0, 0.5, 0.4, 0.25, 0.12, 0.05, 0.02],
        "cascade": {"indices": [1, 3, 5, 6, 7], "adjacency_fraction": 0.5},
        "energy_inequality": {
            "worst_relative_violation": 2.5e-9,
            "per_sample": [0.0, 1.0e-9, 2.5e-9, 1.5e-9],
        },
        "d_recursion": {
            "max_violation": -1.0e-3,
            "max_slack": 12.5,
            "per_sample_violation": [-1.0e-3, -2.0e-3, -1.5e-3, -4.0e-3],
        },
    }
    (run_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return run_dir
