"""Truncated Fourier-Galerkin evolution on the periodic torus.

The state is the full table of Fourier coefficients v_k for k in the
symmetric lattice {-K..K}^d, stored as a complex array of shape
(dim, 2K+1, ..., 2K+1) with axis index i corresponding to wavenumber
i - K.  Three structural constraints are maintained throughout:

    <v_k, k> = 0          (divergence-free),
    v_{-k} = conj(v_k)    (real physical field),
    v_0 = 0               (zero mean).

Each mode obeys

    v_k' = -(|k|^alpha / g(|k|)) v_k
           - i sum_{h != 0} (<v_h, k> / |h|^beta) P_k(v_{k-h}),

with P_k(w) = w - <w,k> k / |k|^2.  The quadratic sum is a convolution of
band-limited fields, so it is evaluated pseudo-spectrally: with the 2/3
rule the padded grid has at least 3K+1 points per axis and the retained
modes of the product are exact, which keeps the Galerkin truncation
energy-conservative.  The stiff diagonal damping is integrated exactly by
an exponential integrating factor wrapped around classical Runge-Kutta
stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from .multipliers import DissipationLaw, dissipation_symbol_on_norms

__all__ = [
    "BlowupNumerics",
    "MonitorStatus",
    "NonFiniteState",
    "RunConfig",
    "SpectralState",
    "Trajectory",
    "blowup_monitor",
    "conjugacy_defect",
    "divergence_defect",
    "energy",
    "init_field",
    "integrate",
    "leray_project",
    "mean_mode",
    "nonlinear_rhs",
    "random_smooth_state",
    "single_mode_state",
    "sobolev_norm",
    "step",
    "taylor_green_state",
]


class NonFiniteState(RuntimeError):
    """A coefficient is NaN or Inf; the message carries the mode index."""


class BlowupNumerics(RuntimeError):
    """Time stepping produced non-finite values."""

    def __init__(self, time: float, detail: str = ""):
        self.time = time
        super().__init__(f"non-finite state at t={time:g}" + (f" ({detail})" if detail else ""))


@dataclass(frozen=True, eq=False)
class SpectralState:
    dim: int
    cutoff: int
    coeffs: np.ndarray  # complex128, shape (dim,) + (2*cutoff+1,)*dim
    time: float = 0.0

    def copy(self) -> "SpectralState":
        return replace(self, coeffs=self.coeffs.copy())


@dataclass(frozen=True)
class RunConfig:
    cutoff: int
    dt: float
    t_end: float
    sample_every: int = 1
    dealias: bool = True
    integrator: str = "exp_rk4"
    seed: int = 0
    sobolev_index: float = 4.0
    inviscid: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.cutoff < 4:
            raise ValueError("lattice cutoff must be at least 4")
        if self.sample_every < 1:
            raise ValueError("sample_every must be at least 1")
        if self.integrator not in ("exp_rk4", "exp_euler"):
            raise ValueError(f"unknown integrator {self.integrator!r}")


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: list
    law: DissipationLaw
    config: RunConfig


# ---------------------------------------------------------------------------
# lattice geometry and padded transforms
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _geometry(dim: int, K: int):
    axes = [np.arange(-K, K + 1)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    kvec = np.stack(mesh).astype(float)
    norm2 = np.sum(kvec**2, axis=0)
    norm = np.sqrt(norm2)
    center = (K,) * dim
    for a in (kvec, norm2, norm):
        a.setflags(write=False)
    return kvec, norm, norm2, center


def _next_fast_len(n: int) -> int:
    while True:
        m = n
        for p in (2, 3, 5, 7):
            while m % p == 0:
                m //= p
        if m == 1:
            return n
        n += 1


@lru_cache(maxsize=None)
def _transform_plan(dim: int, K: int, dealias: bool):
    # 2/3 rule: P >= 3K+1 keeps retained modes of quadratic products exact
    P = _next_fast_len(3 * K + 1 if dealias else 2 * K + 1)
    wn = np.arange(-K, K + 1) % P
    embed = np.ix_(*([wn] * dim))
    freqs = []
    for ax in range(dim):
        shape = [1] * dim
        shape[ax] = P
        f = (np.fft.fftfreq(P) * P).reshape(shape)
        f.setflags(write=False)
        freqs.append(f)
    return P, embed, tuple(freqs)


def _smoothing_weights(law: DissipationLaw, dim: int, K: int) -> np.ndarray | None:
    """1/|k|^beta on the lattice, zero at the origin; None when beta = 0."""
    if law.beta == 0:
        return None
    _, norm, _, center = _geometry(dim, K)
    safe = np.where(norm > 0, norm, 1.0)
    w = safe ** (-law.beta)
    w[center] = 0.0
    return w


def leray_project(w, k) -> np.ndarray:
    """Remove the component of w parallel to k; idempotent, kills w || k."""
    k = np.asarray(k, dtype=float)
    w = np.asarray(w, dtype=complex)
    n2 = float(k @ k)
    if n2 == 0.0:
        raise ValueError("cannot project onto the complement of the zero vector")
    return w - (w @ k) / n2 * k


def _project_field(field: np.ndarray, dim: int, K: int) -> np.ndarray:
    kvec, _, norm2, center = _geometry(dim, K)
    dot = np.einsum("i...,i...->...", field, kvec)
    safe = np.where(norm2 > 0, norm2, 1.0)
    out = field - (dot / safe) * kvec
    out[(slice(None),) + center] = 0.0
    return out


def _check_finite(coeffs: np.ndarray, K: int):
    if not np.all(np.isfinite(coeffs)):
        bad = np.argwhere(~np.isfinite(coeffs))[0]
        comp, mode = int(bad[0]), tuple(int(x) - K for x in bad[1:])
        raise NonFiniteState(f"non-finite coefficient in component {comp} at mode {mode}")


def _nonlinear(coeffs: np.ndarray, dim: int, K: int, law: DissipationLaw, dealias: bool) -> np.ndarray:
    P, embed, freqs = _transform_plan(dim, K, dealias)
    axes = tuple(range(1, dim + 1))
    scale = float(P) ** dim

    w = _smoothing_weights(law, dim, K)
    u = coeffs if w is None else coeffs * w

    zu = np.zeros((dim,) + (P,) * dim, dtype=complex)
    zu[(slice(None),) + embed] = u
    zv = np.zeros_like(zu)
    zv[(slice(None),) + embed] = coeffs

    u_phys = np.fft.ifftn(zu, axes=axes).real * scale
    adv = np.zeros((dim,) + (P,) * dim)
    for j in range(dim):
        dj = np.fft.ifftn(1j * freqs[j] * zv, axes=axes).real * scale
        adv += u_phys[j] * dj

    conv = np.fft.fftn(adv, axes=axes)[(slice(None),) + embed] / scale
    return _project_field(-conv, dim, K)


def nonlinear_rhs(state: SpectralState, law: DissipationLaw, dealias: bool = True) -> np.ndarray:
    """Quadratic term of the mode ODE, -i sum_h (<v_h,k>/|h|^beta) P_k(v_{k-h}),
    for every retained k.  Output is divergence-free and conjugate-symmetric."""
    _check_finite(state.coeffs, state.cutoff)
    return _nonlinear(state.coeffs, state.dim, state.cutoff, law, dealias)


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _exp_factors(law: DissipationLaw, dim: int, K: int, dt: float, inviscid: bool):
    _, norm, _, center = _geometry(dim, K)
    if inviscid:
        m1 = np.zeros_like(norm)
    else:
        m1 = dissipation_symbol_on_norms(law, norm).copy()
        m1[center] = 0.0
    full = np.exp(-dt * m1)
    half = np.exp(-0.5 * dt * m1)
    full.setflags(write=False)
    half.setflags(write=False)
    return full, half


def step(
    state: SpectralState,
    law: DissipationLaw,
    dt: float,
    dealias: bool = True,
    integrator: str = "exp_rk4",
    inviscid: bool = False,
) -> SpectralState:
    """Advance one step.  The diagonal damping factor exp(-m1(k) dt) is
    applied exactly; the transformed quadratic term is integrated with
    classical four-stage Runge-Kutta (or forward Euler for exp_euler)."""
    dim, K = state.dim, state.cutoff
    _check_finite(state.coeffs, K)
    e_full, e_half = _exp_factors(law, dim, K, float(dt), inviscid)
    v = state.coeffs

    def rhs(c):
        return _nonlinear(c, dim, K, law, dealias)

    if integrator == "exp_rk4":
        n1 = rhs(v)
        a = e_half * (v + 0.5 * dt * n1)
        n2 = rhs(a)
        b = e_half * v + 0.5 * dt * n2
        n3 = rhs(b)
        c = e_full * v + dt * e_half * n3
        n4 = rhs(c)
        out = e_full * v + (dt / 6.0) * (e_full * n1 + 2.0 * e_half * (n2 + n3) + n4)
    elif integrator == "exp_euler":
        out = e_full * (v + dt * rhs(v))
    else:
        raise ValueError(f"unknown integrator {integrator!r}")

    out[(slice(None),) + (K,) * dim] = 0.0
    new_time = state.time + dt
    if not np.all(np.isfinite(out)):
        raise BlowupNumerics(new_time)
    return SpectralState(dim=dim, cutoff=K, coeffs=out, time=new_time)


def integrate(state: SpectralState, law: DissipationLaw, config: RunConfig) -> Trajectory:
    """Run to t_end, keeping a snapshot every sample_every steps.

    The number of steps is rounded to a multiple of sample_every so the
    saved grid is uniform, which the finite-difference residual checks
    assume.
    """
    n_steps = int(round(config.t_end / config.dt))
    n_steps -= n_steps % config.sample_every
    times = [state.time]
    states = [state.copy()]
    current = state
    for i in range(1, n_steps + 1):
        current = step(
            current,
            law,
            config.dt,
            dealias=config.dealias,
            integrator=config.integrator,
            inviscid=config.inviscid,
        )
        if i % config.sample_every == 0:
            times.append(current.time)
            states.append(current.copy())
    return Trajectory(times=np.asarray(times), states=states, law=law, config=config)


# ---------------------------------------------------------------------------
# norms and invariants
# ---------------------------------------------------------------------------


def energy(state: SpectralState) -> float:
    return float(np.sum(np.abs(state.coeffs) ** 2))


def sobolev_norm(state: SpectralState, s: float) -> float:
    """sqrt of sum over modes of (1+|k|^2)^s |v_k|^2."""
    _, _, norm2, _ = _geometry(state.dim, state.cutoff)
    weights = (1.0 + norm2) ** s
    return float(np.sqrt(np.sum(weights * np.sum(np.abs(state.coeffs) ** 2, axis=0))))


def divergence_defect(state: SpectralState) -> float:
    """max over modes of |<v_k, k>| / (|v_k| |k|), zero modes excluded."""
    kvec, norm, _, _ = _geometry(state.dim, state.cutoff)
    dot = np.abs(np.einsum("i...,i...->...", state.coeffs, kvec))
    amp = np.sqrt(np.sum(np.abs(state.coeffs) ** 2, axis=0))
    denom = amp * norm
    mask = denom > 0
    if not np.any(mask):
        return 0.0
    return float(np.max(dot[mask] / denom[mask]))


def conjugacy_defect(state: SpectralState) -> float:
    """max |v_k - conj(v_{-k})| relative to the largest coefficient."""
    flipped = np.flip(state.coeffs, axis=tuple(range(1, state.dim + 1)))
    diff = np.max(np.abs(state.coeffs - np.conj(flipped)))
    scale = np.max(np.abs(state.coeffs))
    return float(diff / scale) if scale > 0 else 0.0


def mean_mode(state: SpectralState) -> float:
    center = (state.cutoff,) * state.dim
    return float(np.max(np.abs(state.coeffs[(slice(None),) + center])))


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


def _perpendicular(k: np.ndarray) -> np.ndarray:
    if len(k) == 2:
        e = np.array([-k[1], k[0]], dtype=float)
    else:
        axis = np.zeros(3)
        axis[int(np.argmin(np.abs(k)))] = 1.0
        e = np.cross(axis, k)
    return e / np.linalg.norm(e)


def _empty_coeffs(dim: int, K: int) -> np.ndarray:
    return np.zeros((dim,) + (2 * K + 1,) * dim, dtype=complex)


def single_mode_state(dim: int, K: int, k0, amplitude: float = 1.0) -> SpectralState:
    """Excite the conjugate pair +-k0 with a real vector orthogonal to k0."""
    k0 = np.asarray(k0, dtype=int)
    if np.all(k0 == 0):
        raise ValueError("the excited mode must be nonzero")
    if np.max(np.abs(k0)) > K:
        raise ValueError("mode outside the lattice cutoff")
    e = amplitude * _perpendicular(k0.astype(float))
    coeffs = _empty_coeffs(dim, K)
    coeffs[(slice(None),) + tuple(k0 + K)] = e
    coeffs[(slice(None),) + tuple(-k0 + K)] = e  # real vector: conj(e) = e
    return SpectralState(dim=dim, cutoff=K, coeffs=coeffs)


def _decay_shell(r: float) -> int:
    """Dyadic block of a radius: 0 for r <= 1, else ceil(log2 r)."""
    if r <= 1.0:
        return 0
    return max(0, int(math.ceil(math.log2(r) - 1e-12)))


def random_smooth_state(
    dim: int, K: int, decay: float, amplitude: float, seed: int
) -> SpectralState:
    """Random divergence-free field with total mass amplitude * 2^(-decay*n)
    in the n-th dyadic block, so the shell energies inherit the smooth
    envelope.  Deterministic in the seed."""
    rng = np.random.default_rng(seed)
    kvec, norm, _, _ = _geometry(dim, K)
    coeffs = _empty_coeffs(dim, K)

    # draw on the half lattice, mirror the conjugate
    all_modes = np.argwhere(norm > 0)
    half = [tuple(ix) for ix in all_modes if tuple(ix) > tuple(2 * K - ix)]
    shells: dict[int, list[tuple]] = {}
    for ix in half:
        k = np.array(ix) - K
        n = _decay_shell(float(np.linalg.norm(k)))
        shells.setdefault(n, []).append(ix)

    for n in sorted(shells):
        members = shells[n]
        raw = rng.standard_normal((len(members), dim)) + 1j * rng.standard_normal(
            (len(members), dim)
        )
        mass = 0.0
        vecs = []
        for ix, w in zip(members, raw):
            k = (np.array(ix) - K).astype(float)
            w = leray_project(w, k)
            vecs.append(w)
            mass += 2.0 * float(np.sum(np.abs(w) ** 2))  # mirror counts too
        if mass == 0.0:
            continue
        target = amplitude * 2.0 ** (-decay * n)
        factor = target / math.sqrt(mass)
        for ix, w in zip(members, vecs):
            mirror = tuple(2 * K - i for i in ix)
            coeffs[(slice(None),) + ix] = factor * w
            coeffs[(slice(None),) + mirror] = np.conj(factor * w)
    return SpectralState(dim=dim, cutoff=K, coeffs=coeffs)


def taylor_green_state(dim: int, K: int, amplitude: float = 1.0) -> SpectralState:
    """Classical cellular vortex: (sin x cos y [cos z], -cos x sin y [cos z], 0)."""
    if K < 1:
        raise ValueError("cutoff too small for the vortex modes")
    coeffs = _empty_coeffs(dim, K)
    quarter = amplitude / (4.0 if dim == 2 else 8.0)
    signs = [-1, 1]
    if dim == 2:
        for sx in signs:
            for sy in signs:
                ix = (sx + K, sy + K)
                coeffs[(0,) + ix] = -1j * sx * quarter
                coeffs[(1,) + ix] = 1j * sy * quarter
    else:
        for sx in signs:
            for sy in signs:
                for sz in signs:
                    ix = (sx + K, sy + K, sz + K)
                    coeffs[(0,) + ix] = -1j * sx * quarter
                    coeffs[(1,) + ix] = 1j * sy * quarter
    return SpectralState(dim=dim, cutoff=K, coeffs=coeffs)


def init_field(kind: str, dim: int, K: int, seed: int = 0, **params) -> SpectralState:
    """Dispatch used by the batch runner; kinds: single_mode, random_smooth,
    taylor_green."""
    if kind == "single_mode":
        return single_mode_state(dim, K, params["k0"], params.get("amplitude", 1.0))
    if kind == "random_smooth":
        return random_smooth_state(
            dim, K, params.get("decay", 4.0), params.get("amplitude", 1.0), seed
        )
    if kind == "taylor_green":
        return taylor_green_state(dim, K, params.get("amplitude", 1.0))
    raise ValueError(f"unknown initial field kind {kind!r}")


# ---------------------------------------------------------------------------
# blow-up monitoring
# ---------------------------------------------------------------------------


class MonitorStatus(Enum):
    ONGOING = "ongoing"
    SUSPECTED_BLOWUP = "suspected_blowup"
    COMPLETED = "completed"


@dataclass(frozen=True)
class MonitorResult:
    status: MonitorStatus
    time: float | None = None
    norms: tuple = ()


def blowup_monitor(
    trajectory: Trajectory,
    m: float,
    threshold: float = 1e6,
    expected_t_end: float | None = None,
) -> MonitorResult:
    """Watch the H^m norm along the samples.  Flags a suspected singularity
    when the norm is non-finite or exceeds threshold times its initial
    value; otherwise reports completed once the expected end time is
    reached."""
    dim = trajectory.states[0].dim
    if m < 2 + dim / 2:
        raise ValueError(f"monitoring index must be at least 2 + dim/2 = {2 + dim / 2}")
    norms = []
    base = None
    for state, t in zip(trajectory.states, trajectory.times):
        value = sobolev_norm(state, m)
        norms.append(value)
        if base is None:
            base = max(value, 1e-300)
        if not math.isfinite(value) or value > threshold * base:
            return MonitorResult(MonitorStatus.SUSPECTED_BLOWUP, float(t), tuple(norms))
    t_goal = trajectory.config.t_end if expected_t_end is None else expected_t_end
    if trajectory.times[-1] >= t_goal - trajectory.config.dt * trajectory.config.sample_every:
        return MonitorResult(MonitorStatus.COMPLETED, float(trajectory.times[-1]), tuple(norms))
    return MonitorResult(MonitorStatus.ONGOING, float(trajectory.times[-1]), tuple(norms))
