"""Square-averaged dyadic shell decomposition of a spectral state.

A smooth radial partition of unity psi_n(k) = psi(|k| / 2^n), built from a
transition profile Phi (identically 1 on [0,1], 0 on [2, inf)), splits the
lattice into dyadic bands 2^(n-1) < |k| < 2^(n+1).  From a state v the
module computes

    X_n   = sqrt( sum_k psi_n(k) |v_k|^2 )                 (shell energy)
    chi_n = (2/X_n^2) sum_k psi_n(k) m1(k) |v_k|^2         (damping rate)
    phi_(l,m,n) = (2/(X_l X_m X_n)) sum_{h != 0, k}
        psi_l(h) psi_m(k-h) psi_n(k)
        Im{ <v_h, k> <v_{k-h}, v_k> } / |h|^beta           (interaction)

with the degenerate branches chi_n = 2^(alpha n - alpha + 1) / g(2^(n+1))
and phi = 0 when the corresponding shell energies vanish.  The triple
interaction is supported on the index set where the two largest of
(l, m, n) differ by at most 2 (three wavevectors can only interact when
they close a triangle), and is antisymmetric in its last two slots, which
is what makes the quadratic term conservative shell by shell.

The shell count covers every lattice mode, so the partition of unity makes
sum_n X_n^2 equal the total energy exactly; shells whose dyadic support
pokes outside the lattice cutoff are flagged as truncated.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .multipliers import DissipationLaw, dissipation_symbol_on_norms
from .solver import SpectralState, Trajectory, _geometry, _transform_plan

__all__ = [
    "BumpProfile",
    "ShellFrame",
    "ShellTrajectory",
    "chi_coeffs",
    "default_profile",
    "dissipation_floor",
    "interacting_triple",
    "interaction_bound_constant",
    "interaction_coeffs",
    "interaction_triples",
    "lipschitz_sqrt_psi",
    "partition_defect",
    "psi_n",
    "shell_count",
    "shell_energies",
    "shell_frame",
    "shell_trajectory",
    "verify_interaction_bounds",
    "verify_shell_ode",
]

ZERO_SHELL_THRESHOLD = 1e-30  # X_n^2 below this selects the degenerate branches


def _ramp(t: np.ndarray) -> np.ndarray:
    """exp(-1/t) extended by zero to t <= 0; flat to all orders at 0."""
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    return np.where(t > 0, np.exp(-1.0 / safe), 0.0)


@dataclass(frozen=True)
class BumpProfile:
    """Smooth transition profile and the derived dyadic bump.

    transition(x) is exactly 1 on [0,1] and exactly 0 on [2,inf) so that
    bump(x) = transition(x) - transition(2x) vanishes identically outside
    (1/2, 2) in floating point as well, not just in exact arithmetic.
    """

    name: str = "exp-transition"

    def transition(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        up = _ramp(2.0 - x)
        down = _ramp(x - 1.0)
        denom = np.where(up + down > 0, up + down, 1.0)
        mid = up / denom
        out = np.where(x <= 1.0, 1.0, np.where(x >= 2.0, 0.0, mid))
        return float(out) if out.ndim == 0 else out

    def bump(self, x) -> np.ndarray:
        return self.transition(x) - self.transition(2.0 * np.asarray(x, dtype=float))

    def shell_weight(self, n: int, radius) -> np.ndarray:
        """psi_n evaluated on radii: bump(r / 2^n)."""
        return self.bump(np.asarray(radius, dtype=float) / 2.0**n)

    @cached_property
    def sqrt_bump_lipschitz(self) -> float:
        """Grid estimate of the Lipschitz constant of sqrt(bump) on its
        support, inflated by a 5% safety factor."""
        grid = np.linspace(0.4, 2.1, 100_000)
        values = np.sqrt(np.maximum(self.bump(grid), 0.0))
        slopes = np.abs(np.diff(values)) / np.diff(grid)
        return float(np.max(slopes) * 1.05)


_DEFAULT_PROFILE = BumpProfile()


def default_profile() -> BumpProfile:
    return _DEFAULT_PROFILE


def psi_n(profile: BumpProfile, n: int, k) -> float:
    """Radial bump of shell n at lattice vector k."""
    if n < 0:
        raise ValueError("shell index must be non-negative")
    r = float(np.linalg.norm(np.asarray(k, dtype=float)))
    return float(profile.shell_weight(n, r))


def lipschitz_sqrt_psi(profile: BumpProfile) -> float:
    return profile.sqrt_bump_lipschitz


def shell_count(K: int, dim: int) -> int:
    """Number of shells needed so every lattice mode (|k| <= K sqrt(dim))
    is fully covered by the partition of unity."""
    return int(math.floor(math.log2(K * math.sqrt(dim)))) + 2


@lru_cache(maxsize=32)
def _shell_masks(profile: BumpProfile, dim: int, K: int):
    _, norm, _, _ = _geometry(dim, K)
    count = shell_count(K, dim)
    masks = np.stack([profile.shell_weight(n, norm) for n in range(count)])
    truncated = np.array([2 ** (n + 1) > K + 1 for n in range(count)])
    masks.setflags(write=False)
    truncated.setflags(write=False)
    return masks, truncated


def partition_defect(profile: BumpProfile, K: int, dim: int) -> float:
    """max |sum_n psi_n - 1| over all lattice modes with |k| >= 1 and over a
    fine radial grid up to 2^(count-1)."""
    masks, _ = _shell_masks(profile, dim, K)
    _, norm, _, _ = _geometry(dim, K)
    total = masks.sum(axis=0)
    lattice_defect = np.max(np.abs(total[norm >= 1.0] - 1.0))
    count = masks.shape[0]
    radii = np.linspace(1.0, 2.0 ** (count - 1), 20_001)
    radial_total = sum(profile.shell_weight(n, radii) for n in range(count))
    radial_defect = np.max(np.abs(radial_total - 1.0))
    return float(max(lattice_defect, radial_defect))


# ---------------------------------------------------------------------------
# shell energies and damping coefficients
# ---------------------------------------------------------------------------


def shell_energies(state: SpectralState, profile: BumpProfile) -> np.ndarray:
    masks, _ = _shell_masks(profile, state.dim, state.cutoff)
    density = np.sum(np.abs(state.coeffs) ** 2, axis=0)
    return np.sqrt(np.tensordot(masks, density, axes=state.dim))


def dissipation_floor(law: DissipationLaw, n: int) -> float:
    """Lower bound 2^(alpha n - alpha + 1) / g(2^(n+1)) for the damping
    rate of shell n; also its value on an empty shell."""
    return 2.0 ** (law.alpha * n - law.alpha + 1.0) / law.g(2.0 ** (n + 1))


def chi_coeffs(state: SpectralState, law: DissipationLaw, profile: BumpProfile) -> np.ndarray:
    masks, _ = _shell_masks(profile, state.dim, state.cutoff)
    _, norm, _, _ = _geometry(state.dim, state.cutoff)
    density = np.sum(np.abs(state.coeffs) ** 2, axis=0)
    m1 = dissipation_symbol_on_norms(law, norm)
    weighted = np.tensordot(masks, m1 * density, axes=state.dim)
    x2 = np.tensordot(masks, density, axes=state.dim)
    out = np.empty_like(x2)
    for n in range(len(out)):
        if x2[n] < ZERO_SHELL_THRESHOLD:
            out[n] = dissipation_floor(law, n)
        else:
            out[n] = 2.0 * weighted[n] / x2[n]
    return out


# ---------------------------------------------------------------------------
# interaction tensor
# ---------------------------------------------------------------------------


def interacting_triple(l: int, m: int, n: int) -> bool:
    """True when the two largest of (l, m, n) differ by at most 2."""
    a, b, c = sorted((l, m, n))
    return c - b <= 2


def interaction_triples(count: int) -> list[tuple[int, int, int]]:
    return [
        (l, m, n)
        for l in range(count)
        for m in range(count)
        for n in range(count)
        if interacting_triple(l, m, n)
    ]


def _thread_count() -> int:
    raw = os.environ.get("HYPERSHELL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _numerators_transform(
    state: SpectralState, law: DissipationLaw, profile: BumpProfile, wanted: dict
) -> dict:
    """Raw interaction numerators via band-filtered transform products.

    For the pair (l, m) the inner sum over h is the convolution of the
    band psi_l(h) v_h / |h|^beta against the gradient of the band
    psi_m(q) v_q; the numerator is then the psi_n-weighted imaginary part
    of its pairing with v.  Exact on the retained modes thanks to the
    padded grid.
    """
    dim, K = state.dim, state.cutoff
    masks, _ = _shell_masks(profile, dim, K)
    _, norm, _, center = _geometry(dim, K)
    P, embed, freqs = _transform_plan(dim, K, True)
    axes = tuple(range(1, dim + 1))
    scale = float(P) ** dim
    v = state.coeffs

    safe = np.where(norm > 0, norm, 1.0)
    smoothing = safe ** (-law.beta)

    needed_l = sorted({l for (l, _m) in wanted})
    needed_m = sorted({m for (_l, m) in wanted})

    a_phys = {}
    for l in needed_l:
        band = v * (masks[l] * smoothing)
        band[(slice(None),) + center] = 0.0
        z = np.zeros((dim,) + (P,) * dim, dtype=complex)
        z[(slice(None),) + embed] = band
        a_phys[l] = np.fft.ifftn(z, axes=axes).real * scale

    grad_phys = {}
    for m in needed_m:
        band = v * masks[m]
        z = np.zeros((dim,) + (P,) * dim, dtype=complex)
        z[(slice(None),) + embed] = band
        grad_phys[m] = [
            np.fft.ifftn(1j * freqs[j] * z, axes=axes).real * scale for j in range(dim)
        ]

    def pair_sums(item):
        (l, m), ns = item
        adv = np.zeros((dim,) + (P,) * dim)
        for j in range(dim):
            adv += a_phys[l][j] * grad_phys[m][j]
        conv = np.fft.fftn(adv, axes=axes)[(slice(None),) + embed] / scale
        # Im<C_k, v_k> with C = -i * conv reduces to -Re<conv_k, v_k>
        g = -np.sum(conv * np.conj(v), axis=0).real
        return [((l, m, n), float(np.tensordot(masks[n], g, axes=dim))) for n in ns]

    items = sorted(wanted.items())
    threads = _thread_count()
    out = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for chunk in pool.map(pair_sums, items):
                out.update(chunk)
    else:
        for item in items:
            out.update(pair_sums(item))
    return out


def _numerator_direct(
    state: SpectralState, law: DissipationLaw, profile: BumpProfile, l: int, m: int, n: int
) -> float:
    """Raw interaction numerator by the literal double sum over retained
    modes.  Every addend carries the full psi_l psi_m psi_n weight, so the
    result is exactly zero whenever the three bands cannot close a
    triangle."""
    dim, K = state.dim, state.cutoff
    masks, _ = _shell_masks(profile, dim, K)
    kvec, norm, _, _ = _geometry(dim, K)
    v = state.coeffs
    side = 2 * K + 1

    safe = np.where(norm > 0, norm, 1.0)
    weight_l = masks[l] * safe ** (-law.beta)
    h_list = np.argwhere((weight_l > 0) & (norm > 0))

    total = 0.0
    for h_idx in h_list:
        wl = weight_l[tuple(h_idx)]
        v_h = v[(slice(None),) + tuple(h_idx)]
        h = h_idx - K
        k_slices, q_slices = [], []
        for ax in range(dim):
            shift = int(h[ax])
            k_slices.append(slice(max(0, shift), side + min(0, shift)))
            q_slices.append(slice(max(0, -shift), side + min(0, -shift)))
        k_sl = tuple(k_slices)
        q_sl = tuple(q_slices)
        psi_nk = masks[n][k_sl]
        psi_mq = masks[m][q_sl]
        vk = v[(slice(None),) + k_sl]
        vq = v[(slice(None),) + q_sl]
        dot_vh_k = sum(v_h[i] * kvec[i][k_sl] for i in range(dim))
        inner = np.sum(vq * np.conj(vk), axis=0)
        total += wl * float(np.sum(psi_mq * psi_nk * np.imag(dot_vh_k * inner)))
    return total


def interaction_coeffs(
    state: SpectralState,
    law: DissipationLaw,
    profile: BumpProfile,
    method: str = "auto",
    symmetrize: bool = True,
) -> dict:
    """Sparse interaction tensor over the triangle-compatible index set.

    With symmetrize=True the raw sums are evaluated for m < n only; the
    mirror entries are derived by the sign flip and the diagonal entries
    (l, m, m) are set to exact zero.  With symmetrize=False every ordered
    triple is evaluated independently from its own raw sum, which is what
    the antisymmetry verifications use.
    """
    dim, K = state.dim, state.cutoff
    count = shell_count(K, dim)
    x = shell_energies(state, profile)
    if method == "auto":
        method = "direct" if K <= 8 else "transform"

    triples = interaction_triples(count)
    if symmetrize:
        compute = [(l, m, n) for (l, m, n) in triples if m < n]
    else:
        compute = triples

    if method == "transform":
        wanted: dict = {}
        for l, m, n in compute:
            wanted.setdefault((l, m), []).append(n)
        numerators = _numerators_transform(state, law, profile, wanted)
    elif method == "direct":
        numerators = {
            (l, m, n): _numerator_direct(state, law, profile, l, m, n)
            for (l, m, n) in compute
        }
    else:
        raise ValueError(f"unknown interaction method {method!r}")

    out = {}
    for l, m, n in compute:
        prod = x[l] * x[m] * x[n]
        if (
            x[l] ** 2 < ZERO_SHELL_THRESHOLD
            or x[m] ** 2 < ZERO_SHELL_THRESHOLD
            or x[n] ** 2 < ZERO_SHELL_THRESHOLD
        ):
            out[(l, m, n)] = 0.0
        else:
            out[(l, m, n)] = 2.0 * numerators[(l, m, n)] / prod
    if symmetrize:
        for l, m, n in triples:
            if m == n:
                out[(l, m, n)] = 0.0
            elif m > n:
                out[(l, m, n)] = -out[(l, n, m)]
    return {key: out[key] for key in sorted(out)}


def raw_interaction(
    state: SpectralState,
    law: DissipationLaw,
    profile: BumpProfile,
    l: int,
    m: int,
    n: int,
) -> float:
    """Single interaction coefficient from its literal banded double sum,
    for any triple (also outside the compatible set, where it is exactly
    zero)."""
    x = shell_energies(state, profile)
    if min(x[l], x[m], x[n]) ** 2 < ZERO_SHELL_THRESHOLD:
        return 0.0
    return 2.0 * _numerator_direct(state, law, profile, l, m, n) / (x[l] * x[m] * x[n])


# ---------------------------------------------------------------------------
# frames and trajectories
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ShellFrame:
    time: float
    energies: np.ndarray  # X_n
    dissipation: np.ndarray  # chi_n
    interactions: dict | None  # (l, m, n) -> phi
    count: int
    truncated: np.ndarray


@dataclass(eq=False)
class ShellTrajectory:
    times: np.ndarray
    energies: np.ndarray  # (T, N)
    dissipation: np.ndarray  # (T, N)
    interactions: list | None  # per sample dict, or None
    count: int
    truncated: np.ndarray


def shell_frame(
    state: SpectralState,
    law: DissipationLaw,
    profile: BumpProfile,
    with_interactions: bool = True,
    method: str = "auto",
    symmetrize: bool = True,
) -> ShellFrame:
    _, truncated = _shell_masks(profile, state.dim, state.cutoff)
    phi = (
        interaction_coeffs(state, law, profile, method=method, symmetrize=symmetrize)
        if with_interactions
        else None
    )
    return ShellFrame(
        time=state.time,
        energies=shell_energies(state, profile),
        dissipation=chi_coeffs(state, law, profile),
        interactions=phi,
        count=shell_count(state.cutoff, state.dim),
        truncated=truncated,
    )


def shell_trajectory(
    trajectory: Trajectory,
    profile: BumpProfile,
    with_interactions: bool = True,
    method: str = "auto",
) -> ShellTrajectory:
    law = trajectory.law
    frames = [
        shell_frame(s, law, profile, with_interactions=with_interactions, method=method)
        for s in trajectory.states
    ]
    return ShellTrajectory(
        times=np.asarray(trajectory.times, dtype=float),
        energies=np.stack([f.energies for f in frames]),
        dissipation=np.stack([f.dissipation for f in frames]),
        interactions=[f.interactions for f in frames] if with_interactions else None,
        count=frames[0].count,
        truncated=frames[0].truncated,
    )


# ---------------------------------------------------------------------------
# verifications
# ---------------------------------------------------------------------------


def interaction_bound_constant(law: DissipationLaw, profile: BumpProfile) -> float:
    """Constant in |phi| <= c 2^((d/2 + 1 - beta) min(l,m,n)): the larger of
    the separated-shell and the adjacent-shell (Lipschitz cancellation)
    estimates."""
    d, beta = law.dim, law.beta
    lip = profile.sqrt_bump_lipschitz
    return max(2.0 ** (2 + 1.5 * d), 2.0 ** (9 + 5.5 * d - 3 * beta) * lip)


@dataclass(frozen=True)
class InteractionBoundReport:
    constant: float
    max_ratio: float
    worst_triple: tuple | None
    satisfied: bool


def verify_interaction_bounds(
    frame: ShellFrame, law: DissipationLaw, profile: BumpProfile, slack: float = 1e-12
) -> InteractionBoundReport:
    if frame.interactions is None:
        raise ValueError("frame was computed without interactions")
    c = interaction_bound_constant(law, profile)
    rate = law.dim / 2 + 1 - law.beta
    worst, worst_triple = 0.0, None
    for (l, m, n), value in frame.interactions.items():
        ratio = abs(value) / (c * 2.0 ** (rate * min(l, m, n)))
        if ratio > worst:
            worst, worst_triple = ratio, (l, m, n)
    return InteractionBoundReport(
        constant=c,
        max_ratio=worst,
        worst_triple=worst_triple,
        satisfied=worst <= 1.0 + slack,
    )


@dataclass(frozen=True)
class ShellOdeReport:
    max_residual: float
    residuals: np.ndarray  # (T-2, N)


def verify_shell_ode(st: ShellTrajectory) -> ShellOdeReport:
    """Central-difference residual of d/dt X_n^2 = -chi_n X_n^2
    + sum phi_(l,m,n) X_l X_m X_n at the interior samples; second order in
    the sample spacing."""
    if len(st.times) < 3:
        raise ValueError("need at least 3 samples for a central difference")
    if st.interactions is None:
        raise ValueError("trajectory was computed without interactions")
    spacing = np.diff(st.times)
    if np.max(np.abs(spacing - spacing[0])) > 1e-9 * spacing[0]:
        raise ValueError("samples are not uniformly spaced")
    dt = float(spacing[0])
    x2 = st.energies**2
    residuals = np.empty((len(st.times) - 2, st.count))
    for i in range(1, len(st.times) - 1):
        lhs = (x2[i + 1] - x2[i - 1]) / (2.0 * dt)
        rhs = -st.dissipation[i] * x2[i]
        x = st.energies[i]
        for (l, m, n), value in st.interactions[i].items():
            rhs[n] += value * x[l] * x[m] * x[n]
        residuals[i - 1] = lhs - rhs
    return ShellOdeReport(max_residual=float(np.max(np.abs(residuals))), residuals=residuals)
