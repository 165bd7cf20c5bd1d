"""The single-cycle (log-law) and two-cycle (volume-law) circuit families.

A cycle is ``U(t, h, lam) = U_X(i lam) U_X(h) U_ZZ(t)``.  The log-law model
repeats one cycle; the volume-law model alternates two cycles with
``t1 = h1 = pi/4 - x`` and ``t2 = h2 = pi/4 + x``.  Both have closed-form
transfer matrices, which are cross-checked against :func:`compose_round`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DivergentZ, DivergesAtZero
from .mobius import LayerSpec, _assemble

__all__ = [
    "LogLawParams",
    "VolumeParams",
    "CriticalWindow",
    "cycle_spec",
    "volume_round",
    "z_coefficient",
    "loglaw_matrix",
    "volume_matrix",
    "volume_trace",
    "loglaw_critical_momentum",
    "lambda_c_loglaw",
    "lambda_c_volume",
    "critical_window",
]


@dataclass(frozen=True)
class LogLawParams:
    t: float
    h: float
    lam: float


@dataclass(frozen=True)
class VolumeParams:
    x: float
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.x <= math.pi / 4 + 1e-15:
            raise ValueError(f"x must lie in [0, pi/4], got {self.x}")

    @property
    def round(self) -> list[LayerSpec]:
        return volume_round(self.x, self.lam)


@dataclass(frozen=True)
class CriticalWindow:
    """Critical momenta in (0, pi): ``[k_lo, k_hi]``, nothing, or everything."""

    kind: str  # "window" | "empty" | "full"
    k_lo: float = float("nan")
    k_hi: float = float("nan")

    @classmethod
    def empty(cls) -> "CriticalWindow":
        return cls("empty")

    @classmethod
    def full(cls) -> "CriticalWindow":
        return cls("full", 0.0, math.pi)

    @property
    def is_empty(self) -> bool:
        return self.kind == "empty"

    @property
    def width(self) -> float:
        """Length of the critical set within (0, pi)."""
        if self.kind == "empty":
            return 0.0
        return self.k_hi - self.k_lo


def cycle_spec(t: float, h: float, lam: float) -> list[LayerSpec]:
    """Layers of ``U(t, h, lam)`` in application order (ZZ first)."""
    return [LayerSpec("ZZ", t), LayerSpec("X", h), LayerSpec("X", 1j * lam)]


def volume_round(x: float, lam: float) -> list[LayerSpec]:
    t1, t2 = math.pi / 4 - x, math.pi / 4 + x
    return cycle_spec(t1, t1, lam) + cycle_spec(t2, t2, lam)


def z_coefficient(k, t: float):
    """``z_{k,t} = (e^{2it} tan(k/2) + e^{-2it} / tan(k/2)) / (2 sin 2t)``."""
    s2t = math.sin(2 * t)
    if abs(s2t) < 1e-15:
        raise DivergentZ(f"sin(2t) = 0 at t = {t}; use compose_round instead")
    tk = np.tan(np.asarray(k, dtype=float) / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (np.exp(2j * t) * tk + np.exp(-2j * t) / tk) / (2 * s2t)


def loglaw_matrix(k, p: LogLawParams) -> np.ndarray:
    """Closed-form det-1 matrix of one cycle ``U(t, h, lam)``."""
    z = z_coefficient(k, p.t)
    lead = np.exp(-2 * p.lam + 2j * p.h)
    trail = np.exp(2 * p.lam - 2j * p.h)
    norm = 1 / np.sqrt(1 + np.abs(z) ** 2)
    return _assemble(z * lead * norm, lead * norm, -trail * norm, np.conj(z) * trail * norm)


def volume_matrix(k, p: VolumeParams) -> np.ndarray:
    """Closed-form det-1 matrix of the two-cycle round, valid for 0 < x < pi/4.

    Uses ``z_{k,t1} = -conj(z_{k,t2})``, so only ``z1 = z_{k, pi/4 - x}``
    enters.  The trace is real for every k.
    """
    z = z_coefficient(k, math.pi / 4 - p.x)
    z2 = np.abs(z) ** 2
    em, ep = math.exp(-4 * p.lam), math.exp(4 * p.lam)
    w = np.exp(4j * p.x)
    norm = 1 / (1 + z2)
    return _assemble(
        (z2 * em - w) * norm,
        np.conj(z) * (em + w) * norm,
        -z * (ep + np.conj(w)) * norm,
        (z2 * ep - np.conj(w)) * norm,
    )


def volume_trace(k, p: VolumeParams):
    """Real trace ``2 (|z|^2 cosh 4 lam - cos 4x) / (1 + |z|^2)``."""
    z2 = np.abs(z_coefficient(k, math.pi / 4 - p.x)) ** 2
    return 2 * (z2 * math.cosh(4 * p.lam) - math.cos(4 * p.x)) / (1 + z2)


def loglaw_critical_momentum(t: float, h: float) -> Optional[float]:
    """Positive momentum ``arccos(tan 2h / tan 2t)`` where Im Tr vanishes.

    ``None`` when ``|tan 2h| > |tan 2t|`` (no solution).
    """
    num = math.sin(2 * h) * math.cos(2 * t)
    den = math.sin(2 * t) * math.cos(2 * h)
    if abs(num) > abs(den):
        return None
    return math.acos(num / den)


def lambda_c_loglaw(t: float, h: float) -> Optional[float]:
    """Critical measurement strength of the single-cycle model.

    Returns ``None`` when ``|tan 2h| > |tan 2t|`` (area law for every
    ``lam > 0``) and ``0.0`` on the boundary ``|tan 2h| = |tan 2t|``, where
    the critical momentum sits at k = 0 or pi.  ``inf`` is returned when the
    critical set survives every ``lam`` (e.g. ``t = pi/4``).
    """
    s2t, c2t = math.sin(2 * t), math.cos(2 * t)
    s2h, c2h = math.sin(2 * h), math.cos(2 * h)
    if abs(c2t) < 1e-15 and abs(c2h) < 1e-15:
        return math.inf
    # |tan 2h| vs |tan 2t| without dividing by cos
    lhs, rhs = abs(s2h * c2t), abs(s2t * c2h)
    if abs(lhs - rhs) <= 1e-14 * max(rhs, 1e-300):
        return 0.0
    if lhs > rhs:
        return None
    a, b = (s2t * c2h) ** 2, (s2h * c2t) ** 2
    den = math.cos(4 * t) + (a + b) / (a - b)
    if den <= 0:
        return math.inf
    return 0.5 * math.asinh(math.sqrt(2 * s2t * s2t / den))


def lambda_c_volume(x: float) -> float:
    """``lam_c = asinh(cos^2 2x / sin 2x) / 2`` for the two-cycle model."""
    if x <= 0:
        raise DivergesAtZero("lambda_c diverges as x -> 0")
    return 0.5 * math.asinh(math.cos(2 * x) ** 2 / math.sin(2 * x))


def _window_rhs(x: float, lam: float) -> float:
    return 4 * math.cos(2 * x) ** 4 / math.sinh(2 * lam) ** 2 + 2 * math.cos(4 * x)


def critical_window(p: VolumeParams) -> CriticalWindow:
    """Closed-form critical interval ``[k_c, pi - k_c]`` of the two-cycle model.

    ``k_c`` solves ``y + 1/y = R`` for ``y = tan^2(k_c / 2) <= 1``.
    """
    if p.lam == 0:
        return CriticalWindow.full()
    if p.x > 0 and p.lam >= lambda_c_volume(p.x):
        return CriticalWindow.empty()
    rhs = _window_rhs(p.x, p.lam)
    if rhs <= 2:
        return CriticalWindow.empty()
    y = 2 / (rhs + math.sqrt(rhs * rhs - 4))
    k_c = 2 * math.atan(math.sqrt(y))
    return CriticalWindow("window", k_c, math.pi - k_c)
