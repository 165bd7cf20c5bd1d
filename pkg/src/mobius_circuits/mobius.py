"""SL(2, C) transfer matrices for translation-invariant Gaussian layers.

Every layer of the circuit acts on the pair amplitude ``f(k)`` of a fermionic
coherent state by a Mobius transformation ``f -> (a f + b) / (c f + d)``.  The
functions here build those matrices per momentum, compose them into rounds,
act with them projectively and classify each momentum by the magnitudes of
the two eigenvalues.

Conventions
-----------
* A Mobius matrix is a complex array of shape ``(..., 2, 2)`` normalized to
  unit determinant.  The leading axes are batch axes (usually a k-grid).
* A projective amplitude is a complex array of shape ``(..., 2)`` holding
  homogeneous coordinates ``(x, y)`` with ``f = x / y``; ``y = 0`` is the
  point at infinity.  Amplitudes are rescaled so ``max(|x|, |y|) = 1``.
* Matrices are only defined up to an overall sign.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import DegenerateMap, NormalizationSingular

__all__ = [
    "LayerSpec",
    "Critical",
    "NonCritical",
    "FixedPoints",
    "layer_mobius",
    "compose_round",
    "normalize_det",
    "apply_mobius",
    "matrix_power",
    "amplitude",
    "to_complex",
    "projective_distance",
    "eigenvalues",
    "fixed_points",
    "stable_fixed_point",
    "classify_momentum",
    "criticality_mask",
    "DEFAULT_TOL",
]

LAYER_KINDS = ("ZZ", "YY", "X")
DEFAULT_TOL = 1e-9
_SINGULAR_DET = 1e-14


@dataclass(frozen=True)
class LayerSpec:
    """One translation-invariant layer ``exp(-i t sum_j O_j)``.

    ``kind`` selects ``O_j``: ``"ZZ"`` (sigma^z_j sigma^z_{j+1}), ``"YY"``
    (sigma^y_j sigma^y_{j+1}) or ``"X"`` (sigma^x_j).  A weak measurement of
    strength ``lam`` is an ``X`` layer with ``time = 1j * lam``.
    """

    kind: str
    time: complex

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}; expected one of {LAYER_KINDS}")
        object.__setattr__(self, "time", complex(self.time))


RoundSpec = Sequence[LayerSpec]


# -- matrices -----------------------------------------------------------------

def normalize_det(m: np.ndarray) -> np.ndarray:
    """Rescale ``m`` to unit determinant using the principal square root."""
    m = np.asarray(m, dtype=complex)
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    if np.any(np.abs(det) < _SINGULAR_DET):
        raise NormalizationSingular("layer matrix has vanishing determinant; perturb k")
    return m / np.sqrt(det)[..., None, None]


def _assemble(a, b, c, d) -> np.ndarray:
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    out = np.empty(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = c
    out[..., 1, 1] = d
    return out


def layer_mobius(layer: LayerSpec, k) -> np.ndarray:
    """Mobius matrix of a single layer at momentum ``k`` (scalar or array).

    The ZZ and YY maps are multiplied through by cos^2(k/2), so they stay
    finite over the whole Brillouin zone including k = pi.
    """
    k = np.asarray(k, dtype=float)
    e4 = np.exp(4j * layer.time)
    if layer.kind == "X":
        one = np.ones_like(k, dtype=complex)
        return normalize_det(_assemble(e4 * one, 0 * one, 0 * one, one))
    s, c = np.sin(k / 2), np.cos(k / 2)
    off = 1j * s * c * (1 - e4)
    if layer.kind == "YY":
        off = -off
    return normalize_det(_assemble(c * c + s * s * e4, off, -off, s * s + c * c * e4))


def compose_round(round_spec: RoundSpec, k) -> np.ndarray:
    """Matrix of a whole round; the first layer in ``round_spec`` acts first."""
    if len(round_spec) == 0:
        raise ValueError("round must contain at least one layer")
    m = None
    for layer in round_spec:
        lm = layer_mobius(layer, k)
        m = lm if m is None else lm @ m
    return normalize_det(m)


def matrix_power(m: np.ndarray, n: int) -> np.ndarray:
    """``m**n`` up to a positive scale, by binary exponentiation.

    Each partial product is divided by its largest entry, which keeps the
    projective action exact while avoiding overflow for non-unitary ``m``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    m = np.asarray(m, dtype=complex)
    result = np.broadcast_to(np.eye(2, dtype=complex), m.shape).copy()
    base = m.copy()
    while n:
        if n & 1:
            result = _rescale(result @ base)
        n >>= 1
        if n:
            base = _rescale(base @ base)
    return result


def _rescale(m: np.ndarray) -> np.ndarray:
    return m / np.abs(m).max(axis=(-2, -1), keepdims=True)


# -- projective amplitudes ----------------------------------------------------

def amplitude(f) -> np.ndarray:
    """Homogeneous coordinates for ``f`` (complex scalar/array; ``inf`` allowed)."""
    f = np.asarray(f, dtype=complex)
    inf = ~np.isfinite(f)
    x = np.where(inf, 1.0, f)
    y = np.where(inf, 0.0, 1.0).astype(complex)
    return _normalize_amplitude(np.stack([x, y], axis=-1))


def _normalize_amplitude(v: np.ndarray) -> np.ndarray:
    scale = np.abs(v).max(axis=-1, keepdims=True)
    if np.any(scale == 0):
        raise ValueError("(0, 0) is not a projective point")
    return v / scale


def to_complex(v: np.ndarray) -> np.ndarray:
    """``x / y`` with ``inf`` at the point at infinity."""
    v = np.asarray(v)
    x, y = v[..., 0], v[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(y == 0, np.inf + 0j, x / np.where(y == 0, 1, y))


def projective_distance(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Chordal distance ``|x1 y2 - x2 y1| / (|v| |w|)``; zero iff same point."""
    v, w = np.asarray(v), np.asarray(w)
    cross = v[..., 0] * w[..., 1] - v[..., 1] * w[..., 0]
    return np.abs(cross) / (np.linalg.norm(v, axis=-1) * np.linalg.norm(w, axis=-1))


def apply_mobius(m: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Act with ``m`` on homogeneous coordinates ``f`` (broadcasting)."""
    out = np.einsum("...ij,...j->...i", np.asarray(m, dtype=complex), np.asarray(f, dtype=complex))
    return _normalize_amplitude(out)


# -- spectra and fixed points -------------------------------------------------

def eigenvalues(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues ``(mu_minus, mu_plus)`` with ``|mu_minus| <= |mu_plus|``."""
    m = np.asarray(m, dtype=complex)
    tr = m[..., 0, 0] + m[..., 1, 1]
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    disc = np.sqrt(tr * tr - 4 * det)
    hi1, hi2 = (tr + disc) / 2, (tr - disc) / 2
    mu_plus = np.where(np.abs(hi1) >= np.abs(hi2), hi1, hi2)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu_minus = np.where(mu_plus == 0, 0, det / np.where(mu_plus == 0, 1, mu_plus))
    return mu_minus, mu_plus


def _eigvec(m: np.ndarray, mu: np.ndarray) -> np.ndarray:
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    v1 = np.stack([b, mu - a], axis=-1)
    v2 = np.stack([mu - d, c], axis=-1)
    pick = np.linalg.norm(v1, axis=-1) >= np.linalg.norm(v2, axis=-1)
    return np.where(pick[..., None], v1, v2)


class FixedPoints(NamedTuple):
    f_minus: np.ndarray  # attracting when contraction < 1
    f_plus: np.ndarray
    contraction: float


def fixed_points(m: np.ndarray, atol: float = 1e-12) -> FixedPoints:
    """Fixed points of a single Mobius matrix and the ratio ``|mu_-| / |mu_+|``.

    The attracting point ``f_minus`` is the eigenvector of the larger
    eigenvalue; a parabolic map reports its single fixed point twice.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError("fixed_points expects a single 2x2 matrix")
    sign = 1.0 if (m[0, 0] + m[1, 1]).real >= 0 else -1.0
    if np.abs(m - sign * np.sqrt(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) * np.eye(2)).max() <= atol:
        raise DegenerateMap("matrix is a multiple of the identity")
    mu_minus, mu_plus = eigenvalues(m)
    stable = _normalize_amplitude(_eigvec(m, mu_plus))
    unstable = _normalize_amplitude(_eigvec(m, mu_minus))
    contraction = float(min(abs(mu_minus) / abs(mu_plus), 1.0))
    return FixedPoints(stable, unstable, contraction)


def stable_fixed_point(m: np.ndarray) -> np.ndarray:
    """Vectorized attracting fixed point (eigenvector of the larger eigenvalue)."""
    m = np.asarray(m, dtype=complex)
    _, mu_plus = eigenvalues(m)
    return _normalize_amplitude(_eigvec(m, mu_plus))


# -- criticality --------------------------------------------------------------

@dataclass(frozen=True)
class Critical:
    """Both eigenvalues unimodular: ``mu = exp(+-i theta)``."""

    theta: float


@dataclass(frozen=True)
class NonCritical:
    """Eigenvalue magnitudes differ; ``f_stable`` attracts every other point."""

    f_stable: np.ndarray
    f_unstable: np.ndarray
    contraction: float


Criticality = Union[Critical, NonCritical]


def criticality_mask(m: np.ndarray, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized trace test: returns ``(is_critical, theta)``.

    ``theta`` is ``arccos(Re Tr / 2)`` clipped to [0, pi] and is meaningful
    only where ``is_critical`` holds.
    """
    m = np.asarray(m, dtype=complex)
    tr = m[..., 0, 0] + m[..., 1, 1]
    crit = (np.abs(tr.imag) <= tol) & (np.abs(tr.real) <= 2 + tol)
    theta = np.arccos(np.clip(tr.real / 2, -1.0, 1.0))
    return crit, theta


def classify_momentum(m: np.ndarray, tol: float = DEFAULT_TOL) -> Criticality:
    """Classify one det-1 matrix as critical (|mu_-| = |mu_+|) or not."""
    m = np.asarray(m, dtype=complex)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det - 1) > 1e-10:
        raise ValueError(f"matrix is not unimodular (det = {det})")
    crit, theta = criticality_mask(m, tol)
    if crit:
        return Critical(float(theta))
    fp = fixed_points(m)
    return NonCritical(fp.f_minus, fp.f_plus, fp.contraction)
