"""Run configuration, checkpoint, CSV, and manifest plumbing.

The configuration format is flat key-value text with dotted keys
(law.alpha, run.cutoff, shells.theta); '#' starts a comment.  Checkpoints
are plain text, one mode per row, with a small header.  All floats are
written with repr-exact precision so identical runs produce byte-identical
files.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .multipliers import DissipationLaw, GrowthFunction
from .solver import RunConfig, SpectralState

__all__ = [
    "UsageError",
    "ShellParams",
    "config_init_params",
    "config_law",
    "config_run",
    "config_shell_params",
    "list_checkpoints",
    "parse_config",
    "read_checkpoint",
    "read_csv",
    "write_checkpoint",
    "write_csv",
    "write_manifest",
]

FLOAT_FMT = "%.17g"

TIMESERIES_COLUMNS = ("time", "energy", "sobolev_norm")
SHELL_COLUMNS = ("time", "shell", "energy", "dissipation")
INTERACTION_COLUMNS = ("time", "l", "m", "n", "value")
DIAGNOSTIC_COLUMNS = ("time", "shell", "tail_energy", "energy_bound", "weighted_decrement")


class UsageError(Exception):
    """Bad configuration or command usage; message names the offender."""


def parse_config(path: str) -> dict:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _require(cfg: dict, key: str) -> str:
    if key not in cfg:
        raise UsageError(f"missing key '{key}'")
    return cfg[key]


def _as_float(cfg: dict, key: str) -> float:
    raw = _require(cfg, key)
    try:
        return float(raw)
    except ValueError as exc:
        raise UsageError(f"key '{key}': expected a number, got {raw!r}") from exc


def _as_int(cfg: dict, key: str, default: int | None = None) -> int:
    if key not in cfg and default is not None:
        return default
    raw = _require(cfg, key)
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"key '{key}': expected an integer, got {raw!r}") from exc


def _as_bool(cfg: dict, key: str, default: bool) -> bool:
    if key not in cfg:
        return default
    raw = cfg[key].lower()
    if raw in ("true", "yes", "1"):
        return True
    if raw in ("false", "no", "0"):
        return False
    raise UsageError(f"key '{key}': expected true/false, got {cfg[key]!r}")


def config_law(cfg: dict) -> DissipationLaw:
    alpha = _as_float(cfg, "law.alpha")
    beta = _as_float(cfg, "law.beta")
    dim = _as_int(cfg, "law.dim")
    family = _require(cfg, "law.g.family")
    param = _as_float(cfg, "law.g.param")
    try:
        g = GrowthFunction(family, param)
        return DissipationLaw(alpha=alpha, beta=beta, dim=dim, g=g)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def config_run(cfg: dict) -> RunConfig:
    if "run.K" in cfg and "run.cutoff" not in cfg:  # accepted alias
        cfg = {**cfg, "run.cutoff": cfg["run.K"]}
    try:
        return RunConfig(
            cutoff=_as_int(cfg, "run.cutoff"),
            dt=_as_float(cfg, "run.dt"),
            t_end=_as_float(cfg, "run.t_end"),
            sample_every=_as_int(cfg, "run.sample_every", default=1),
            dealias=_as_bool(cfg, "run.dealias", default=True),
            integrator=cfg.get("run.integrator", "exp_rk4"),
            seed=_as_int(cfg, "run.seed", default=0),
            sobolev_index=float(cfg.get("run.sobolev_index", 4.0)),
            inviscid=_as_bool(cfg, "run.inviscid", default=False),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def config_init_params(cfg: dict) -> dict:
    kind = _require(cfg, "init.kind")
    params: dict = {"kind": kind}
    if kind == "single_mode":
        raw = _require(cfg, "init.k0")
        try:
            params["k0"] = tuple(int(p) for p in raw.split(","))
        except ValueError as exc:
            raise UsageError("key 'init.k0': expected comma-separated integers") from exc
    if "init.amplitude" in cfg:
        params["amplitude"] = _as_float(cfg, "init.amplitude")
    if "init.decay" in cfg:
        params["decay"] = _as_float(cfg, "init.decay")
    return params


@dataclass(frozen=True)
class ShellParams:
    theta: float
    n0: int
    m_exponent: float
    k_max: int


def config_shell_params(cfg: dict) -> ShellParams:
    return ShellParams(
        theta=float(cfg.get("shells.theta", 1.0)),
        n0=int(cfg.get("shells.n0", 1)),
        m_exponent=float(cfg.get("shells.m", 4.0)),
        k_max=int(cfg.get("shells.k_max", 64)),
    )


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def write_checkpoint(path: str, state: SpectralState, law: DissipationLaw):
    K, dim = state.cutoff, state.dim
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("#hypershell-checkpoint v1\n")
        fh.write(f"dim={dim}\n")
        fh.write(f"cutoff={K}\n")
        fh.write(("time=" + FLOAT_FMT + "\n") % state.time)
        fh.write(("law.alpha=" + FLOAT_FMT + "\n") % law.alpha)
        fh.write(("law.beta=" + FLOAT_FMT + "\n") % law.beta)
        fh.write(f"law.dim={law.dim}\n")
        fh.write(f"law.g.family={law.g.family}\n")
        fh.write(("law.g.param=" + FLOAT_FMT + "\n") % law.g.param)
        for idx in np.ndindex(*state.coeffs.shape[1:]):
            k = tuple(int(i) - K for i in idx)
            if all(c == 0 for c in k):
                continue
            vec = state.coeffs[(slice(None),) + idx]
            parts = [" ".join(str(c) for c in k)]
            for comp in vec:
                parts.append(FLOAT_FMT % comp.real)
                parts.append(FLOAT_FMT % comp.imag)
            fh.write(" ".join(parts) + "\n")


def read_checkpoint(path: str) -> tuple[SpectralState, DissipationLaw]:
    header: dict[str, str] = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("#hypershell-checkpoint"):
            raise UsageError(f"{path}: not a checkpoint file")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if "=" in line:  # data rows are pure numbers and never contain '='
                key, value = line.split("=", 1)
                header[key] = value
            else:
                rows.append(line.split())
    dim = int(header["dim"])
    K = int(header["cutoff"])
    law = DissipationLaw(
        alpha=float(header["law.alpha"]),
        beta=float(header["law.beta"]),
        dim=int(header["law.dim"]),
        g=GrowthFunction(header["law.g.family"], float(header["law.g.param"])),
    )
    coeffs = np.zeros((dim,) + (2 * K + 1,) * dim, dtype=complex)
    for row in rows:
        k = tuple(int(c) for c in row[:dim])
        values = [float(c) for c in row[dim:]]
        vec = [complex(values[2 * i], values[2 * i + 1]) for i in range(dim)]
        coeffs[(slice(None),) + tuple(ki + K for ki in k)] = vec
    state = SpectralState(dim=dim, cutoff=K, coeffs=coeffs, time=float(header["time"]))
    return state, law


def list_checkpoints(directory: str) -> list[str]:
    states_dir = os.path.join(directory, "states")
    if not os.path.isdir(states_dir):
        raise UsageError(f"no states/ directory under {directory}")
    names = sorted(f for f in os.listdir(states_dir) if f.startswith("state_"))
    indices = [int(name.split("_")[1].split(".")[0]) for name in names]
    gaps = [i for i in range(len(names)) if i not in set(indices)]
    if gaps:
        raise UsageError(f"missing checkpoints for sample indices {gaps}")
    return [os.path.join(states_dir, name) for name in names]


# ---------------------------------------------------------------------------
# CSV and manifest
# ---------------------------------------------------------------------------


def _format_cell(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return FLOAT_FMT % float(value)


def write_csv(path: str, columns: tuple, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(v) for v in row) + "\n")


def read_csv(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        data = data.reshape(0, len(header))
    return header, data


def write_manifest(directory: str, payload: dict):
    path = os.path.join(directory, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(directory: str) -> dict:
    path = os.path.join(directory, "manifest.json")
    if not os.path.exists(path):
        raise UsageError(f"no manifest.json under {directory}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
