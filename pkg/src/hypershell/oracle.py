"""Slow transparent reference computations for validating the fast paths.

Everything here works on plain dictionaries of python complex tuples with
explicit double loops in a fixed iteration order, shares no code with the
transform-based implementations (including its own copy of the projection),
and refuses problem sizes beyond a small budget.  Results are bit-stable
across runs.
"""

from __future__ import annotations

import numpy as np

from .multipliers import DissipationLaw
from .shells import BumpProfile
from .solver import SpectralState, Trajectory

__all__ = ["OracleBudgetError", "convolution_direct", "energy_ledger", "phi_direct"]

MAX_DIM = 2
MAX_CUTOFF = 8


class OracleBudgetError(ValueError):
    """Input exceeds the deliberately small oracle budget."""


def _check_budget(state: SpectralState):
    if state.dim > MAX_DIM or state.cutoff > MAX_CUTOFF:
        raise OracleBudgetError(
            f"oracle budget is dim <= {MAX_DIM}, cutoff <= {MAX_CUTOFF}; "
            f"got dim={state.dim}, cutoff={state.cutoff}"
        )


def _mode_table(state: SpectralState) -> dict:
    """Lattice coefficients as {k tuple: tuple of python complex}."""
    K = state.cutoff
    table = {}
    for idx in np.ndindex(*state.coeffs.shape[1:]):
        k = tuple(int(i) - K for i in idx)
        table[k] = tuple(complex(c) for c in state.coeffs[(slice(None),) + idx])
    return table


def _project(w: tuple, k: tuple) -> tuple:
    n2 = sum(ki * ki for ki in k)
    if n2 == 0:
        return tuple(0.0 * wi for wi in w)
    dot = sum(wi * ki for wi, ki in zip(w, k))
    return tuple(wi - dot * ki / n2 for wi, ki in zip(w, k))


def convolution_direct(state: SpectralState, law: DissipationLaw) -> np.ndarray:
    """-i sum_h (<v_h, k> / |h|^beta) P_k(v_{k-h}) by the literal double
    loop over retained modes, for every retained k."""
    _check_budget(state)
    K, dim = state.cutoff, state.dim
    table = _mode_table(state)
    modes = sorted(table)
    out = np.zeros_like(state.coeffs)
    for k in modes:
        if all(c == 0 for c in k):
            continue
        acc = [0j] * dim
        for h in modes:
            if all(c == 0 for c in h):
                continue
            q = tuple(ki - hi for ki, hi in zip(k, h))
            if q not in table:
                continue
            v_h = table[h]
            v_q = table[q]
            if all(c == 0 for c in v_h) or all(c == 0 for c in v_q):
                continue
            dot = sum(vi * ki for vi, ki in zip(v_h, k))
            if dot == 0:
                continue
            norm_h = sum(c * c for c in h) ** 0.5
            factor = -1j * dot / norm_h**law.beta
            projected = _project(v_q, k)
            for i in range(dim):
                acc[i] += factor * projected[i]
        out[(slice(None),) + tuple(ki + K for ki in k)] = acc
    return out


def phi_direct(
    state: SpectralState,
    law: DissipationLaw,
    profile: BumpProfile,
    l: int,
    m: int,
    n: int,
) -> float:
    """Interaction coefficient for one triple by the literal double sum:
    (2/(X_l X_m X_n)) sum psi_l(h) psi_m(k-h) psi_n(k)
    Im{<v_h,k> <v_{k-h},v_k>} / |h|^beta, and 0 when a shell is empty."""
    _check_budget(state)
    table = _mode_table(state)
    modes = sorted(table)

    def norm(k):
        return sum(c * c for c in k) ** 0.5

    # per-mode bump weights, tabulated once so the double loop below stays
    # plain lookups and scalar arithmetic
    psi_l = {k: float(profile.shell_weight(l, norm(k))) for k in modes}
    psi_m = {k: float(profile.shell_weight(m, norm(k))) for k in modes}
    psi_n = {k: float(profile.shell_weight(n, norm(k))) for k in modes}

    x_l = x_m = x_n = 0.0
    for k in modes:
        amp = sum(abs(c) ** 2 for c in table[k])
        x_l += psi_l[k] * amp
        x_m += psi_m[k] * amp
        x_n += psi_n[k] * amp
    if min(x_l, x_m, x_n) < 1e-30:
        return 0.0

    h_band = [(h, psi_l[h]) for h in modes if psi_l[h] > 0.0 and any(c != 0 for c in h)]
    k_band = [(k, psi_n[k]) for k in modes if psi_n[k] > 0.0]

    total = 0.0
    for h, w_l in h_band:
        v_h = table[h]
        inv_beta = 1.0 / norm(h) ** law.beta
        for k, w_n in k_band:
            q = tuple(ki - hi for ki, hi in zip(k, h))
            w_m = psi_m.get(q)
            if not w_m:
                continue
            v_k = table[k]
            v_q = table[q]
            dot = sum(vi * ki for vi, ki in zip(v_h, k))
            inner = sum(vq * vk.conjugate() for vq, vk in zip(v_q, v_k))
            total += w_l * w_m * w_n * (dot * inner).imag * inv_beta
    return 2.0 * total / (x_l**0.5 * x_m**0.5 * x_n**0.5)


def energy_ledger(trajectory: Trajectory, law: DissipationLaw) -> np.ndarray:
    """Per-interval balance of sum |v_k|^2 against the trapezoid of the
    dissipation rate 2 sum m1(k) |v_k|^2; zero up to integrator and
    quadrature error for unforced runs."""
    for state in trajectory.states:
        _check_budget(state)

    def totals(state):
        table = _mode_table(state)
        e = 0.0
        d = 0.0
        for k in sorted(table):
            amp = sum(abs(c) ** 2 for c in table[k])
            if amp == 0.0:
                continue
            r = sum(c * c for c in k) ** 0.5
            e += amp
            if r > 0:
                d += 2.0 * (r**law.alpha / law.g(r)) * amp
        return e, d

    pairs = [totals(s) for s in trajectory.states]
    out = []
    inviscid = trajectory.config.inviscid
    for i in range(len(pairs) - 1):
        dt = float(trajectory.times[i + 1] - trajectory.times[i])
        e0, d0 = pairs[i]
        e1, d1 = pairs[i + 1]
        if inviscid:
            d0 = d1 = 0.0
        out.append(e1 - e0 + 0.5 * dt * (d0 + d1))
    return np.asarray(out)
