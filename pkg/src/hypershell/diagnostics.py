"""Tail and cascade diagnostics over a shell trajectory.

From the sampled shell energies and damping coefficients the module builds
the tail energies F_n = sum_{j >= n} X_j^2, the energy bounds

    d_n(t) = sqrt( F_n(t) + sum_{h >= n} int_0^t chi_h X_h^2 ds ),

their running peaks, the discounted peak history Q_n = sum_{j<n} dbar_j
lambda^(j-n), and the weighted decrement sums

    R_n(t) = sum_{j >= n} (d_j^2 - d_{j+1}^2) / (lambda^(j-n) b_j),

with lambda = 2^alpha and b_n = 1/g(2^(n+1)).  Time integrals use the
trapezoid rule on the saved sampling grid, matching the second-order
accuracy of the residual checks; the peaks are maxima over the saved
samples, which can only under-estimate the continuum peak and therefore
weakens the checked inequalities in the safe direction.

The checks cover: the energy inequality (an equality for unforced
Galerkin runs, up to quadrature), the recursive tail inequality with
constant c4 = 10 c2/c1, the minimum bound for windows of R, the cascade
index sequence, the discounted-history recursion, the interaction
cancellation identity, and exponential decay fits of the shell spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .multipliers import DissipationLaw, damping_weights
from .shells import BumpProfile, ShellFrame, ShellTrajectory, interaction_bound_constant

__all__ = [
    "CascadeReport",
    "DecayFit",
    "TailDiagnostics",
    "cascade_indices",
    "check_cancellation_identity",
    "check_d_recursion",
    "check_energy_inequality",
    "check_Q_properties",
    "check_R_min_bound",
    "energy_bound",
    "fit_decay",
    "initial_cascade_observations",
    "peak_history",
    "recursion_constant",
    "tail_diagnostics",
    "tails",
    "weighted_decrements",
]


def tails(energies: np.ndarray) -> np.ndarray:
    """F_n(t) = sum_{j >= n} X_j(t)^2, with the empty tail F_N = 0 appended."""
    x2 = np.asarray(energies, dtype=float) ** 2
    rev = np.cumsum(x2[:, ::-1], axis=1)[:, ::-1]
    return np.concatenate([rev, np.zeros((x2.shape[0], 1))], axis=1)


def _cumtrapz(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid along axis 0, starting at zero."""
    dt = np.diff(times)[:, None]
    increments = 0.5 * dt * (values[1:] + values[:-1])
    out = np.zeros_like(values)
    out[1:] = np.cumsum(increments, axis=0)
    return out


def energy_bound(times: np.ndarray, energies: np.ndarray, dissipation: np.ndarray) -> np.ndarray:
    """d_n(t) = sqrt(F_n(t) + sum_{h >= n} int_0^t chi_h X_h^2), trapezoid
    in time; d_n(0) = sqrt(F_n(0)) by construction."""
    f = tails(energies)
    rate = dissipation * energies**2
    accumulated = _cumtrapz(np.asarray(times, dtype=float), rate)
    tail_diss = np.concatenate(
        [np.cumsum(accumulated[:, ::-1], axis=1)[:, ::-1], np.zeros((f.shape[0], 1))], axis=1
    )
    return np.sqrt(f + tail_diss)


def peak_history(peaks: np.ndarray, lam: float) -> np.ndarray:
    """Q_n = sum_{j < n} peaks_j lambda^(j - n), built by the recursion
    Q_{n+1} = (Q_n + peaks_n) / lambda so the discounting identity used by
    the property check holds by construction."""
    q = np.zeros(len(peaks) + 1)
    for n in range(len(peaks)):
        q[n + 1] = (q[n] + peaks[n]) / lam
    return q


def weighted_decrements(d: np.ndarray, lam: float, weights: np.ndarray) -> np.ndarray:
    """R_n(t) = sum_{j >= n} (d_j^2 - d_{j+1}^2) / (lambda^(j-n) b_j)."""
    count = d.shape[1] - 1
    a = (d[:, :-1] ** 2 - d[:, 1:] ** 2) / np.asarray(weights)[None, :count]
    r = np.zeros((d.shape[0], count))
    r[:, -1] = a[:, -1]
    for n in range(count - 2, -1, -1):
        r[:, n] = a[:, n] + r[:, n + 1] / lam
    return r


def recursion_constant(law: DissipationLaw, profile: BumpProfile) -> float:
    """c4 = 10 c2 / c1 with c1 = 2^(1 - alpha) (damping floor constant) and
    c2 the interaction bound constant."""
    c1 = 2.0 ** (1.0 - law.alpha)
    c2 = interaction_bound_constant(law, profile)
    return 10.0 * c2 / c1


@dataclass(eq=False)
class TailDiagnostics:
    times: np.ndarray
    tail_energy: np.ndarray  # F, (T, N+1)
    energy_bound: np.ndarray  # d, (T, N+1)
    peak_bound: np.ndarray  # dbar over all samples, (N+1,)
    peak_bound_running: np.ndarray  # dbar up to each sample, (T, N+1)
    peak_history: np.ndarray  # Q, (N+2,)
    weighted_decrements: np.ndarray  # R, (T, N+1)
    weights: np.ndarray  # b, (N,)
    lam: float
    c4: float
    theta: float
    n0: int
    cascade: tuple
    cascade_adjacency: float
    cascade_truncated: bool
    count: int


def tail_diagnostics(
    st: ShellTrajectory,
    law: DissipationLaw,
    profile: BumpProfile,
    theta: float = 1.0,
    n0: int = 1,
    k_max: int = 64,
    c4: float | None = None,
    cascade_range: int = 512,
) -> TailDiagnostics:
    lam = law.lam
    f = tails(st.energies)
    d = energy_bound(st.times, st.energies, st.dissipation)
    running = np.maximum.accumulate(d, axis=0)
    peaks = running[-1]
    b = np.asarray(damping_weights(law, st.count).values)
    cascade_b = np.asarray(damping_weights(law, cascade_range).values)
    report = cascade_indices(cascade_b, theta, n0, lam, k_max)
    return TailDiagnostics(
        times=st.times,
        tail_energy=f,
        energy_bound=d,
        peak_bound=peaks,
        peak_bound_running=running,
        peak_history=peak_history(peaks, lam) if lam > 1 else np.zeros(len(peaks) + 1),
        weighted_decrements=weighted_decrements(d, lam, b),
        weights=b,
        lam=lam,
        c4=recursion_constant(law, profile) if c4 is None else c4,
        theta=theta,
        n0=n0,
        cascade=tuple(report.indices),
        cascade_adjacency=report.adjacency_fraction,
        cascade_truncated=report.truncated,
        count=st.count,
    )


# ---------------------------------------------------------------------------
# inequality checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyInequalityReport:
    worst_relative_violation: float
    per_sample: tuple


def check_energy_inequality(st: ShellTrajectory) -> EnergyInequalityReport:
    """Total shell energy plus accumulated dissipation against the initial
    energy; for unforced Galerkin runs the two sides agree up to quadrature
    and integrator error."""
    total = np.sum(st.energies**2, axis=1)
    rate = np.sum(st.dissipation * st.energies**2, axis=1)
    accumulated = _cumtrapz(st.times, rate[:, None])[:, 0]
    lhs = total + accumulated
    rhs = total[0]
    scale = max(rhs, 1e-300)
    violations = (lhs - rhs) / scale
    return EnergyInequalityReport(
        worst_relative_violation=float(np.max(violations)),
        per_sample=tuple(float(v) for v in violations),
    )


@dataclass(frozen=True)
class DRecursionReport:
    max_violation: float
    worst_sample: int
    worst_shell: int
    max_slack: float
    per_sample: tuple  # worst violation at each sample (negative = slack)


def check_d_recursion(diag: TailDiagnostics) -> DRecursionReport:
    """Recursive tail inequality

        d_n^2(t) <= F_n(0) + c4 sum_{l<n} (dbar_l / lambda^(n-l))
                    sum_{m >= n-2} (g(2^(m+1)) / lambda^(m-n)) (d_m^2 - d_{m+1}^2)

    checked for every n >= 2 and every sample, with the peaks taken over
    the samples up to t.  Violation is LHS - RHS (positive means broken),
    slack is RHS - LHS."""
    lam, c4 = diag.lam, diag.c4
    n_shells = diag.count
    d2 = diag.energy_bound**2
    f0 = diag.tail_energy[0]
    g_dyadic = 1.0 / diag.weights  # g(2^(m+1)) = 1 / b_m

    worst = -np.inf
    worst_ix = (0, 0)
    best_slack = -np.inf
    per_sample = []
    for t in range(len(diag.times)):
        # inner[j] = sum_{m >= j} g(2^(m+1)) lambda^(j-m) (d_m^2 - d_{m+1}^2)
        decr = d2[t, :-1] - d2[t, 1:]
        inner = np.zeros(n_shells + 1)
        for j in range(n_shells - 1, -1, -1):
            inner[j] = g_dyadic[j] * decr[j] + inner[j + 1] / lam
        peaks = diag.peak_bound_running[t]
        outer = 0.0  # sum_{l < n} peaks_l lambda^(l-n), built incrementally
        sample_worst = -np.inf
        for n in range(n_shells + 1):
            if n >= 2:
                rhs = f0[n] + c4 * outer * lam**2 * inner[n - 2]
                violation = d2[t, n] - rhs
                sample_worst = max(sample_worst, violation)
                if violation > worst:
                    worst = violation
                    worst_ix = (t, n)
                best_slack = max(best_slack, rhs - d2[t, n])
            if n < len(peaks):
                outer = (outer + peaks[n]) / lam
        per_sample.append(float(sample_worst))
    return DRecursionReport(
        max_violation=float(worst),
        worst_sample=worst_ix[0],
        worst_shell=worst_ix[1],
        max_slack=float(best_slack),
        per_sample=tuple(per_sample),
    )


@dataclass(frozen=True)
class RMinReport:
    max_violation: float
    worst_window: tuple


def check_R_min_bound(diag: TailDiagnostics) -> RMinReport:
    """min(R_{m1..m2}) <= (lambda/(lambda-1)) d_{m1}^2 / sum(b_{m1..m2}) for
    every window 1 <= m1 <= m2 < N and every sample."""
    if diag.lam <= 1.0:
        raise ValueError("the window bound needs lambda > 1 (alpha > 0)")
    lam = diag.lam
    r = diag.weighted_decrements
    d2 = diag.energy_bound**2
    b = diag.weights
    worst = -np.inf
    window = (1, 1)
    n_max = r.shape[1]
    for m1 in range(1, n_max):
        b_sum = 0.0
        running_min = np.full(r.shape[0], np.inf)
        for m2 in range(m1, n_max):
            b_sum += b[m2]
            running_min = np.minimum(running_min, r[:, m2])
            bound = (lam / (lam - 1.0)) * d2[:, m1] / b_sum
            violation = float(np.max(running_min - bound))
            if violation > worst:
                worst = violation
                window = (m1, m2)
    return RMinReport(max_violation=worst, worst_window=window)


# ---------------------------------------------------------------------------
# cascade indices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CascadeReport:
    indices: tuple
    adjacency_fraction: float
    truncated: bool


def cascade_indices(
    weights, theta: float, n0: int, lam: float, k_max: int
) -> CascadeReport:
    """Generate n_{k+1} = 2 + min{ n >= n_k - 1 : sum_{j=n_k-1}^n b_j >=
    theta lambda^(-k/4) } until k_max steps or the weights run out (the
    result is then flagged truncated).  Also reports the fraction of steps
    with n_{k+1} = n_k + 1, the single-step cascade events."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    if n0 < 1:
        raise ValueError("n0 must be at least 1")
    b = np.asarray(weights, dtype=float)
    indices = [n0]
    truncated = False
    for k in range(k_max):
        start = indices[-1] - 1
        target = theta * lam ** (-k / 4.0)
        acc = 0.0
        found = None
        for n in range(start, len(b)):
            acc += b[n]
            if acc >= target:
                found = n
                break
        if found is None:
            truncated = True
            break
        indices.append(2 + found)
    steps = np.diff(indices)
    adjacency = float(np.mean(steps == 1)) if len(steps) else 0.0
    return CascadeReport(indices=tuple(indices), adjacency_fraction=adjacency, truncated=truncated)


# ---------------------------------------------------------------------------
# decay fits and property checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    weighted_sup: float
    slope: float | None


def fit_decay(energies_row: np.ndarray, truncated: np.ndarray, m: float) -> DecayFit:
    """sup_n 2^(m n) X_n over the fully resolved shells, plus the
    least-squares slope of log2 X_n against n over the shells with
    non-negligible energy."""
    if m < 1:
        raise ValueError("decay exponent must be at least 1")
    x = np.asarray(energies_row, dtype=float)
    usable = ~np.asarray(truncated)
    shells = np.arange(len(x))
    sup = 0.0
    if np.any(usable):
        sup = float(np.max(2.0 ** (m * shells[usable]) * x[usable]))
    active = usable & (x > 1e-30)
    if np.sum(active) < 2:
        return DecayFit(weighted_sup=sup, slope=None)
    slope = float(np.polyfit(shells[active], np.log2(x[active]), 1)[0])
    return DecayFit(weighted_sup=sup, slope=slope)


@dataclass(frozen=True)
class QPropertiesReport:
    recursion_residual: float
    last_increase_index: int | None
    final_value: float


def check_Q_properties(diag: TailDiagnostics) -> QPropertiesReport:
    """The discounting identity Q_{n+1} - Q_n = (Q_n - Q_{n-1})/lambda
    + (dbar_n - dbar_{n-1})/lambda holds by construction; also reports the
    last index at which Q still increases and the final tail value."""
    q = diag.peak_history
    peaks = diag.peak_bound
    lam = diag.lam
    scale = max(float(peaks[0]), 1e-300)
    worst = 0.0
    for n in range(1, len(q) - 1):
        lhs = q[n + 1] - q[n]
        rhs = (q[n] - q[n - 1]) / lam + (peaks[n] - peaks[n - 1]) / lam
        worst = max(worst, abs(lhs - rhs) / scale)
    increases = np.nonzero(np.diff(q) > 0)[0]
    last_increase = int(increases[-1]) if len(increases) else None
    return QPropertiesReport(
        recursion_residual=worst,
        last_increase_index=last_increase,
        final_value=float(q[-1]),
    )


def check_cancellation_identity(frame: ShellFrame) -> float:
    """For each split level n, the interactions entirely below n balance the
    mixed ones: sum_{h <= n-1} phi X X X = - sum_{m <= n-1 < h} phi X X X.
    Returns the worst residual relative to the gross magnitude of the terms
    involved (zero frames report zero)."""
    if frame.interactions is None:
        raise ValueError("frame was computed without interactions")
    x = frame.energies
    worst = 0.0
    for split in range(1, frame.count):
        low = 0.0
        mixed = 0.0
        gross = 0.0
        for (l, m, h), value in frame.interactions.items():
            term = value * x[l] * x[m] * x[h]
            if h <= split - 1:
                low += term
                gross += abs(term)
            elif m <= split - 1 < h:
                mixed += term
                gross += abs(term)
        if gross < 1e-300:
            continue
        worst = max(worst, abs(low + mixed) / gross)
    return worst


def initial_cascade_observations(diag: TailDiagnostics, m_exponent: float = 4.0) -> dict:
    """Observed analogues of the cascade start inequalities Q_{n_k} <=
    lambda^(-k/2) and dbar_{n_k}^2 <= lambda^(-M k), reported for the
    configured theta and n0.  Observational only: the underlying constants
    are existential, so nothing here is asserted."""
    lam = diag.lam
    q = diag.peak_history
    peaks = diag.peak_bound
    rows = []
    for k, nk in enumerate(diag.cascade):
        if nk >= len(q) - 1:
            break
        rows.append(
            {
                "k": k,
                "n_k": int(nk),
                "Q_margin": float(q[nk] - lam ** (-k / 2.0)),
                "peak_sq_margin": float(peaks[nk] ** 2 - lam ** (-m_exponent * k)),
            }
        )
    return {
        "m_exponent": m_exponent,
        "theta": diag.theta,
        "n0": diag.n0,
        "rows": rows,
        "note": "observational; peaks are sample maxima and constants are existential",
    }
