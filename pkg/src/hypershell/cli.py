"""Batch entry point: simulate, analyze, verify, catalog.

simulate  runs the spectral solver from a config file and writes one
          checkpoint per sample plus a time-series CSV and a manifest;
analyze   recomputes the shell decomposition and tail diagnostics from the
          checkpoints and freezes them into CSV dumps and a summary;
verify    re-derives every hard structural assertion from the dumps and
          exits nonzero on the first class of failure;
catalog   prints the growth-function catalog with criticality classes.

All outputs are deterministic for a fixed config and seed (the manifest
wall-clock fields aside).
"""

from __future__ import annotations

import argparse
import os
import sys
import time as _time

import numpy as np

from . import __version__, diagnostics, oracle, runio, shells, solver
from .multipliers import catalog_rows, damping_weights
from .runio import UsageError
from .shells import default_profile

QUIET = False


def _say(*args):
    if not QUIET:
        print(*args)


def _law_payload(law) -> dict:
    return {
        "alpha": law.alpha,
        "beta": law.beta,
        "dim": law.dim,
        "g.family": law.g.family,
        "g.param": law.g.param,
    }


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    cfg = runio.parse_config(args.config)
    law = runio.config_law(cfg)
    run = runio.config_run(cfg)
    init = runio.config_init_params(cfg)
    os.makedirs(args.out, exist_ok=True)
    states_dir = os.path.join(args.out, "states")
    os.makedirs(states_dir, exist_ok=True)

    state = solver.init_field(init.pop("kind"), law.dim, run.cutoff, seed=run.seed, **init)
    started = _time.time()
    outputs = []
    status = "ok"
    monitor_payload = None
    try:
        trajectory = solver.integrate(state, law, run)
        rows = []
        for i, (t, s) in enumerate(zip(trajectory.times, trajectory.states)):
            path = os.path.join(states_dir, f"state_{i:06d}.txt")
            runio.write_checkpoint(path, s, law)
            outputs.append(os.path.relpath(path, args.out))
            rows.append((t, solver.energy(s), solver.sobolev_norm(s, run.sobolev_index)))
        ts_path = os.path.join(args.out, "timeseries.csv")
        runio.write_csv(ts_path, runio.TIMESERIES_COLUMNS, rows)
        outputs.append("timeseries.csv")
        monitor = solver.blowup_monitor(trajectory, run.sobolev_index)
        monitor_payload = {"status": monitor.status.value, "time": monitor.time}
        if monitor.status is solver.MonitorStatus.SUSPECTED_BLOWUP:
            status = "suspected_blowup"
        _say(f"simulate: {len(trajectory.states)} samples -> {args.out}")
        code = 0
    except solver.BlowupNumerics as exc:
        status = "suspected_blowup"
        monitor_payload = {"status": "suspected_blowup", "time": exc.time}
        _say(f"simulate: numeric fault at t={exc.time:g}")
        code = 2
    finally:
        runio.write_manifest(
            args.out,
            {
                "command": "simulate",
                "version": __version__,
                "config": dict(sorted(cfg.items())),
                "law": _law_payload(law),
                "run": {
                    "cutoff": run.cutoff,
                    "dt": run.dt,
                    "t_end": run.t_end,
                    "sample_every": run.sample_every,
                    "dealias": run.dealias,
                    "integrator": run.integrator,
                    "seed": run.seed,
                    "sobolev_index": run.sobolev_index,
                    "inviscid": run.inviscid,
                },
                "profile": {"name": default_profile().name},
                "started_at": started,
                "finished_at": _time.time(),
                "status": status,
                "monitor": monitor_payload,
                "outputs": sorted(outputs) + ["manifest.json"],
            },
        )
    return code


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def _load_shell_trajectory_from_states(run_dir: str):
    paths = runio.list_checkpoints(run_dir)
    states = []
    law = None
    for path in paths:
        state, law = runio.read_checkpoint(path)
        states.append(state)
    times = np.asarray([s.time for s in states])
    return states, times, law


def _cmd_analyze(args) -> int:
    run_dir = args.run_dir
    out_dir = args.out or run_dir
    os.makedirs(out_dir, exist_ok=True)
    manifest = runio.read_manifest(run_dir)
    cfg = manifest.get("config", {})
    shell_params = runio.config_shell_params(cfg)
    profile = default_profile()
    written = []

    states, times, law = _load_shell_trajectory_from_states(run_dir)
    frames = [shells.shell_frame(s, law, profile, with_interactions=True) for s in states]
    st = shells.ShellTrajectory(
        times=times,
        energies=np.stack([f.energies for f in frames]),
        dissipation=np.stack([f.dissipation for f in frames]),
        interactions=[f.interactions for f in frames],
        count=frames[0].count,
        truncated=frames[0].truncated,
    )

    shell_rows = []
    for t, x_row, chi_row in zip(st.times, st.energies, st.dissipation):
        for n in range(st.count):
            shell_rows.append((t, n, x_row[n], chi_row[n]))
    runio.write_csv(os.path.join(out_dir, "shells.csv"), runio.SHELL_COLUMNS, shell_rows)
    written.append("shells.csv")

    phi_rows = []
    for t, table in zip(st.times, st.interactions):
        for (l, m, n), value in sorted(table.items()):
            phi_rows.append((t, l, m, n, value))
    runio.write_csv(os.path.join(out_dir, "interactions.csv"), runio.INTERACTION_COLUMNS, phi_rows)
    written.append("interactions.csv")

    diag = diagnostics.tail_diagnostics(
        st,
        law,
        profile,
        theta=shell_params.theta,
        n0=shell_params.n0,
        k_max=shell_params.k_max,
    )
    diag_rows = []
    for ti, t in enumerate(st.times):
        for n in range(st.count):
            diag_rows.append(
                (
                    t,
                    n,
                    diag.tail_energy[ti, n],
                    diag.energy_bound[ti, n],
                    diag.weighted_decrements[ti, n],
                )
            )
    runio.write_csv(os.path.join(out_dir, "diagnostics.csv"), runio.DIAGNOSTIC_COLUMNS, diag_rows)
    written.append("diagnostics.csv")

    energy_report = diagnostics.check_energy_inequality(st)
    ode_report = shells.verify_shell_ode(st) if len(st.times) >= 3 else None
    recursion_report = diagnostics.check_d_recursion(diag)
    rmin_report = diagnostics.check_R_min_bound(diag) if diag.lam > 1 else None
    q_report = diagnostics.check_Q_properties(diag)
    cancel = max(
        diagnostics.check_cancellation_identity(f) for f in frames
    )
    bound_reports = [shells.verify_interaction_bounds(f, law, profile) for f in frames]
    chi_floor = np.array([shells.dissipation_floor(law, n) for n in range(st.count)])
    chi_margin = float(np.min(st.dissipation - chi_floor[None, :]))
    m_exp = shell_params.m_exponent
    fits = [
        diagnostics.fit_decay(st.energies[i], st.truncated, m_exp)
        for i in (0, len(st.times) - 1)
    ]

    summary = {
        "law": _law_payload(law),
        "lambda": law.lam,
        "c4": diag.c4,
        "shell_count": st.count,
        "truncated_shells": [int(n) for n in np.nonzero(st.truncated)[0]],
        "weights_b": list(diag.weights),
        "Q": [float(q) for q in diag.peak_history],
        "peak_energy_bound": [float(p) for p in diag.peak_bound],
        "energy_inequality": {
            "worst_relative_violation": energy_report.worst_relative_violation,
            "per_sample": list(energy_report.per_sample),
        },
        "shell_ode": {"max_residual": ode_report.max_residual if ode_report else None},
        "d_recursion": {
            "max_violation": recursion_report.max_violation,
            "max_slack": recursion_report.max_slack,
            "per_sample_violation": list(recursion_report.per_sample),
        },
        "r_min_bound": {
            "max_violation": rmin_report.max_violation if rmin_report else None,
        },
        "q_properties": {
            "recursion_residual": q_report.recursion_residual,
            "last_increase_index": q_report.last_increase_index,
        },
        "cancellation": {"max_relative_residual": cancel},
        "interaction_bound": {
            "constant": bound_reports[0].constant,
            "max_ratio": max(r.max_ratio for r in bound_reports),
        },
        "chi_bound": {"min_margin": chi_margin},
        "cascade": {
            "indices": [int(n) for n in diag.cascade],
            "adjacency_fraction": diag.cascade_adjacency,
            "truncated": diag.cascade_truncated,
            "theta": diag.theta,
            "n0": diag.n0,
        },
        "decay": {
            "m": m_exp,
            "initial_weighted_sup": fits[0].weighted_sup,
            "final_weighted_sup": fits[1].weighted_sup,
            "initial_slope": fits[0].slope,
            "final_slope": fits[1].slope,
        },
        "initial_cascade_observations": diagnostics.initial_cascade_observations(
            diag, m_exponent=m_exp
        ),
    }
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        import json

        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append("summary.json")

    if os.path.abspath(out_dir) == os.path.abspath(run_dir):
        listed = set(manifest.get("outputs", []))
        listed.update(written)
        manifest["outputs"] = sorted(listed)
        manifest["analyzed"] = True
        runio.write_manifest(run_dir, manifest)
    _say(f"analyze: wrote shells.csv, interactions.csv, diagnostics.csv, summary.json -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _rebuild_from_dumps(run_dir: str):
    manifest = runio.read_manifest(run_dir)
    law = runio.config_law({f"law.{k}": str(v) for k, v in manifest["law"].items()})
    header, shell_data = runio.read_csv(os.path.join(run_dir, "shells.csv"))
    if tuple(header) != runio.SHELL_COLUMNS:
        raise UsageError(f"shells.csv columns {header} != {list(runio.SHELL_COLUMNS)}")
    times = np.unique(shell_data[:, 0])
    count = int(shell_data[:, 1].max()) + 1
    energies = np.zeros((len(times), count))
    dissipation = np.zeros_like(energies)
    index = {t: i for i, t in enumerate(times)}
    for t, n, x, chi in shell_data:
        energies[index[t], int(n)] = x
        dissipation[index[t], int(n)] = chi

    header, phi_data = runio.read_csv(os.path.join(run_dir, "interactions.csv"))
    if tuple(header) != runio.INTERACTION_COLUMNS:
        raise UsageError(f"interactions.csv columns {header} != {list(runio.INTERACTION_COLUMNS)}")
    tables = [dict() for _ in times]
    for t, l, m, n, value in phi_data:
        tables[index[t]][(int(l), int(m), int(n))] = value

    cutoff = int(manifest["run"]["cutoff"])
    _, truncated = shells._shell_masks(default_profile(), law.dim, cutoff)
    st = shells.ShellTrajectory(
        times=times,
        energies=energies,
        dissipation=dissipation,
        interactions=tables,
        count=count,
        truncated=truncated,
    )
    return manifest, law, cutoff, st


def _cmd_verify(args) -> int:
    scale = args.tolerance_scale
    run_dir = args.run_dir
    manifest, law, cutoff, st = _rebuild_from_dumps(run_dir)
    profile = default_profile()
    shell_params = runio.config_shell_params(manifest.get("config", {}))
    failures = []
    results = {}

    def check(name: str, ok: bool, detail: str):
        tag = "pass" if ok else "FAIL"
        _say(f"  [{tag}] {name}: {detail}")
        results[name] = {"passed": bool(ok), "detail": detail}
        if not ok:
            failures.append(name)

    defect = shells.partition_defect(profile, cutoff, law.dim)
    check("partition_of_unity", defect < 1e-12 * scale, f"defect {defect:.3e}")

    phi_scale = max(
        (max((abs(v) for v in table.values()), default=0.0) for table in st.interactions),
        default=0.0,
    )
    anti = 0.0
    for table in st.interactions:
        for (l, m, n), value in table.items():
            anti = max(anti, abs(value + table.get((l, n, m), 0.0)))
    check(
        "interaction_antisymmetry",
        anti <= 1e-10 * max(phi_scale, 1e-300) * scale,
        f"max |phi(l,m,n)+phi(l,n,m)| = {anti:.3e} (scale {phi_scale:.3e})",
    )

    if cutoff <= 16:
        state, _ = runio.read_checkpoint(runio.list_checkpoints(run_dir)[-1])
        worst_support = 0.0
        for l in range(st.count):
            for m in range(st.count):
                for n in range(st.count):
                    if shells.interacting_triple(l, m, n):
                        continue
                    worst_support = max(
                        worst_support, abs(shells.raw_interaction(state, law, profile, l, m, n))
                    )
        check("interaction_support", worst_support == 0.0, f"max outside support {worst_support:.3e}")
    else:
        _say("  [skip] interaction_support: cutoff above exhaustive-scan budget")

    floor = np.array([shells.dissipation_floor(law, n) for n in range(st.count)])
    margin = float(np.min(st.dissipation - floor[None, :] * (1.0 - 1e-12 * scale)))
    check("chi_lower_bound", margin >= 0.0, f"min margin {margin:.3e}")

    c3 = shells.interaction_bound_constant(law, profile)
    rate = law.dim / 2 + 1 - law.beta
    worst_ratio = 0.0
    for table in st.interactions:
        for (l, m, n), value in table.items():
            worst_ratio = max(worst_ratio, abs(value) / (c3 * 2.0 ** (rate * min(l, m, n))))
    check("interaction_upper_bound", worst_ratio <= 1.0 + 1e-12 * scale, f"max ratio {worst_ratio:.3e}")

    if len(st.times) >= 3:
        ode = shells.verify_shell_ode(st)
        check("shell_ode_residual", ode.max_residual < 1e-4 * scale, f"max residual {ode.max_residual:.3e}")
    else:
        _say("  [skip] shell_ode_residual: fewer than 3 samples")

    energy_report = diagnostics.check_energy_inequality(st)
    check(
        "energy_inequality",
        energy_report.worst_relative_violation < 1e-6 * scale,
        f"worst relative violation {energy_report.worst_relative_violation:.3e}",
    )

    diag = diagnostics.tail_diagnostics(
        st, law, profile, theta=shell_params.theta, n0=shell_params.n0, k_max=shell_params.k_max
    )
    rec = diagnostics.check_d_recursion(diag)
    check("tail_recursion", rec.max_violation <= 1e-8 * scale, f"max violation {rec.max_violation:.3e}")

    if diag.lam > 1:
        rmin = diagnostics.check_R_min_bound(diag)
        r_scale = max(1.0, float(np.max(np.abs(diag.weighted_decrements))))
        check(
            "window_min_bound",
            rmin.max_violation <= 1e-10 * r_scale * scale,
            f"max violation {rmin.max_violation:.3e}",
        )
    else:
        _say("  [skip] window_min_bound: lambda = 1")

    frames = [
        shells.ShellFrame(
            time=t,
            energies=st.energies[i],
            dissipation=st.dissipation[i],
            interactions=st.interactions[i],
            count=st.count,
            truncated=st.truncated,
        )
        for i, t in enumerate(st.times)
    ]
    cancel = max(diagnostics.check_cancellation_identity(f) for f in frames)
    check("cancellation_identity", cancel < 1e-10 * scale, f"max relative residual {cancel:.3e}")

    manifest["verification"] = {
        "tolerance_scale": scale,
        "passed": not failures,
        "checks": results,
    }
    runio.write_manifest(run_dir, manifest)

    if failures:
        _say(f"verify: FAILED ({', '.join(failures)})")
        return 1
    _say("verify: all hard assertions passed")
    return 0


# ---------------------------------------------------------------------------
# catalog and hidden oracle
# ---------------------------------------------------------------------------


def _cmd_catalog(_args) -> int:
    rows = catalog_rows()
    width = max(len(label) for label, _ in rows)
    print(f"{'growth function':<{width}}  criticality")
    print("-" * (width + 13))
    for label, cls in rows:
        print(f"{label:<{width}}  {cls}")
    return 0


def _cmd_oracle(args) -> int:
    cfg = runio.parse_config(args.config) if args.config else {}
    law = (
        runio.config_law(cfg)
        if "law.alpha" in cfg
        else runio.config_law(
            {
                "law.alpha": "2",
                "law.beta": "0",
                "law.dim": "2",
                "law.g.family": "constant",
                "law.g.param": "1",
            }
        )
    )
    state = solver.random_smooth_state(law.dim, 4, decay=1.0, amplitude=1.0, seed=args.seed)
    fast = solver.nonlinear_rhs(state, law)
    slow = oracle.convolution_direct(state, law)
    scale = max(float(np.max(np.abs(slow))), 1e-300)
    err = float(np.max(np.abs(fast - slow))) / scale
    print(f"nonlinear rhs vs direct double sum: relative error {err:.3e}")
    profile = default_profile()
    worst = 0.0
    for triple in [(0, 1, 2), (2, 2, 1), (1, 3, 3)]:
        a = shells.raw_interaction(state, law, profile, *triple)
        b = oracle.phi_direct(state, law, profile, *triple)
        worst = max(worst, abs(a - b))
    print(f"interaction coefficients vs direct double sum: max abs error {worst:.3e}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    global QUIET
    parser = argparse.ArgumentParser(
        prog="hypershell",
        description="spectral simulation and dyadic-shell verification toolkit",
    )
    sub = parser.add_subparsers(
        dest="command", required=True, metavar="{simulate,analyze,verify,catalog}"
    )

    p = sub.add_parser("simulate", help="run the solver from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="shell decomposition and diagnostics of a run directory")
    p.add_argument("run_dir")
    p.add_argument("--out", default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("verify", help="re-check all hard structural assertions from the dumps")
    p.add_argument("run_dir")
    p.add_argument("--tolerance-scale", type=float, default=1.0)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("catalog", help="print the growth-function catalog")
    p.set_defaults(func=_cmd_catalog)

    p = sub.add_parser("oracle")  # hidden debugging aid, omitted from help
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_oracle)

    args = parser.parse_args(argv)
    QUIET = getattr(args, "quiet", False)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
