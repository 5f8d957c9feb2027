"""Dissipation laws and the growth-function catalog.

A law is the pair of Fourier symbols acting on the system: the linear
damping m1(k) = |k|^alpha / g(|k|) and the advection smoothing
m2(k) = |k|^beta.  The correction g is restricted to a small closed
catalog of non-decreasing positive functions, because the dividing line
between the regular and the possibly singular regime is whether
integral_1^inf ds / (s g(s)) diverges, and that cannot be decided by
floating-point quadrature; inside the catalog it is decided exactly by
per-family rules.

Logarithms are taken of (e + s) rather than s so every family is defined
and positive down to s = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Criticality",
    "DampingWeights",
    "DissipationLaw",
    "GrowthFunction",
    "VelocityLaw",
    "catalog_rows",
    "classify_criticality",
    "constant",
    "damping_weights",
    "dissipation_symbol",
    "dissipation_symbol_on_norms",
    "iter_log_power",
    "log_power",
    "power",
    "smoothing_symbol",
    "smoothing_symbol_on_norms",
    "velocity_to_leray",
]

_FAMILIES = ("constant", "power", "log_power", "iter_log_power")


@dataclass(frozen=True)
class GrowthFunction:
    """One member of the closed catalog of corrections g.

    family      semantics
    --------------------------------------------------------
    constant        g(s) = c
    power           g(s) = s^gamma
    log_power       g(s) = log(e+s)^p
    iter_log_power  g(s) = log(e+s) * log(e+log(e+s))^p
    """

    family: str
    param: float

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown growth family {self.family!r}")
        if not self.param > 0:
            raise ValueError("growth parameter must be positive")

    def __call__(self, s):
        x = np.asarray(s, dtype=float)
        if self.family == "constant":
            out = np.full_like(x, float(self.param))
        elif self.family == "power":
            out = x**self.param
        elif self.family == "log_power":
            out = np.log(np.e + x) ** self.param
        else:
            inner = np.log(np.e + x)
            out = inner * np.log(np.e + inner) ** self.param
        return float(out) if out.ndim == 0 else out

    def squared(self) -> "GrowthFunction":
        """Return the catalog member equal to g^2, used when a single
        velocity-form multiplier is rewritten as a damping/smoothing pair."""
        if self.family == "constant":
            return GrowthFunction("constant", self.param**2)
        if self.family == "power":
            return GrowthFunction("power", 2.0 * self.param)
        if self.family == "log_power":
            return GrowthFunction("log_power", 2.0 * self.param)
        raise ValueError(
            "the square of an iter_log_power growth function is not a catalog member"
        )

    def label(self) -> str:
        return f"{self.family}({self.param:g})"


def constant(c: float) -> GrowthFunction:
    return GrowthFunction("constant", c)


def power(gamma: float) -> GrowthFunction:
    return GrowthFunction("power", gamma)


def log_power(p: float) -> GrowthFunction:
    return GrowthFunction("log_power", p)


def iter_log_power(p: float) -> GrowthFunction:
    return GrowthFunction("iter_log_power", p)


class Criticality(Enum):
    DIVERGENT = "divergent"
    CONVERGENT = "convergent"


def classify_criticality(g: GrowthFunction) -> Criticality:
    """Decide whether integral_1^inf ds / (s g(s)) diverges.

    Rule-based over the catalog: constants always diverge, powers always
    converge, and the two log families diverge exactly when the exponent
    is at most one.
    """
    if g.family == "constant":
        return Criticality.DIVERGENT
    if g.family == "power":
        return Criticality.CONVERGENT
    return Criticality.DIVERGENT if g.param <= 1.0 else Criticality.CONVERGENT


@dataclass(frozen=True)
class DissipationLaw:
    """Damping exponent alpha, smoothing exponent beta, dimension, and g."""

    alpha: float
    beta: float
    dim: int
    g: GrowthFunction

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")

    @property
    def admissible(self) -> bool:
        """alpha + beta reaches the critical total (dim + 2) / 2."""
        return self.alpha + self.beta >= (self.dim + 2) / 2 - 1e-12

    @property
    def lam(self) -> float:
        """Dyadic damping ratio 2^alpha between consecutive shells."""
        return 2.0**self.alpha


def dissipation_symbol_on_norms(law: DissipationLaw, norms) -> np.ndarray:
    """m1 evaluated on an array of wavevector norms (callers mask zeros)."""
    r = np.asarray(norms, dtype=float)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, safe**law.alpha / law.g(safe), 0.0)


def smoothing_symbol_on_norms(law: DissipationLaw, norms) -> np.ndarray:
    r = np.asarray(norms, dtype=float)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, safe**law.beta, 0.0)


def dissipation_symbol(law: DissipationLaw, k) -> float:
    """m1(k) = |k|^alpha / g(|k|) for a single lattice vector k != 0."""
    r = float(np.linalg.norm(np.asarray(k, dtype=float)))
    if r == 0.0:
        raise ValueError("the zero mode carries no dynamics; m1(0) is undefined")
    return r**law.alpha / law.g(r)


def smoothing_symbol(law: DissipationLaw, k) -> float:
    """m2(k) = |k|^beta for a single lattice vector k != 0."""
    r = float(np.linalg.norm(np.asarray(k, dtype=float)))
    if r == 0.0:
        raise ValueError("the zero mode carries no dynamics; m2(0) is undefined")
    return r**law.beta


@dataclass(frozen=True)
class VelocityLaw:
    """Single-multiplier form: damping of the velocity by
    m(k) >= |k|^((dim+2)/4) / G(|k|) with non-decreasing envelope G."""

    dim: int
    growth: GrowthFunction

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")


def velocity_to_leray(vlaw: VelocityLaw) -> DissipationLaw:
    """Rewrite a velocity-form law as a damping/smoothing pair.

    The damped equation with m(k)^2 acting on the velocity and no
    smoothing is the pair (alpha = (dim+2)/2, beta = 0, g = G^2); the
    square is realized inside the catalog.
    """
    return DissipationLaw(
        alpha=(vlaw.dim + 2) / 2,
        beta=0.0,
        dim=vlaw.dim,
        g=vlaw.growth.squared(),
    )


@dataclass(frozen=True)
class DampingWeights:
    """b_n = 1 / g(2^(n+1)) with the monotonicity facts used downstream."""

    values: tuple
    non_increasing: bool
    scaled_non_decreasing: bool
    partial_sums: tuple
    partial_sums_growing: bool


def damping_weights(law: DissipationLaw, n_max: int) -> DampingWeights:
    """Compute b_n for n = 0..n_max and report the three structural
    properties of the sequence: b non-increasing, 2^(alpha n) b_n
    non-decreasing, and whether the partial sums are still visibly growing
    over the computed range (reported, not asserted)."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    n = np.arange(n_max + 1)
    b = 1.0 / law.g(2.0 ** (n + 1))
    tol = 1e-12 * b[0]
    non_inc = bool(np.all(np.diff(b) <= tol))
    # compare lambda^n b_n in log space to stay finite for large n
    logs = n * (law.alpha * math.log(2.0)) + np.log(b)
    scaled_non_dec = bool(np.all(np.diff(logs) >= -1e-12))
    sums = np.cumsum(b)
    half = len(sums) // 2
    growing = bool(sums[-1] - sums[half] > 0.01 * sums[-1])
    return DampingWeights(
        values=tuple(float(x) for x in b),
        non_increasing=non_inc,
        scaled_non_decreasing=scaled_non_dec,
        partial_sums=tuple(float(x) for x in sums),
        partial_sums_growing=growing,
    )


def catalog_rows() -> list[tuple[str, str]]:
    """Representative catalog members with their criticality class."""
    samples = [
        constant(1.0),
        power(0.5),
        log_power(1.0),
        log_power(2.0),
        iter_log_power(1.0),
        iter_log_power(2.0),
    ]
    return [(g.label(), classify_criticality(g).value) for g in samples]
