"""Entanglement entropies of Gaussian states from block-Toeplitz correlations.

The Majorana correlation matrix of a block of ``ell`` sites has 2x2 blocks
``Pi_{s-r} = [[-phi_j, psi_j], [-psi_{-j}, phi_j]]``.  Its eigenvalues come in
pairs ``+-i nu_p`` and every Renyi entropy is a sum ``sum_p H_m(nu_p)``.  For
large blocks the entropy density is the k-integral of ``H_m`` applied to the
modulus of the symbol; near the critical coupling of the two-cycle model
the density vanishes with the power laws collected at the end of this module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    CoefficientRangeTooSmall,
    DegenerateFit,
    InsufficientRange,
    SpectralFailure,
)
from .models import VolumeParams, critical_window, lambda_c_volume
from .steady_state import Coefficients, SymbolPair, symbol_modulus

__all__ = [
    "EntropyReport",
    "SlopeResult",
    "ExponentFit",
    "renyi_h",
    "build_correlation_matrix",
    "jacobi_eigenvalues",
    "entanglement_spectrum",
    "entropy_from_spectrum",
    "hartley_entropy",
    "block_entropies",
    "entropy_density_integral",
    "fit_slope",
    "fit_log_coefficient",
    "gamma_coefficient",
    "asymptotic_slope",
    "fit_exponent",
]

H0_EPS = 1e-8  # nu counted as "not pure" when below 1 - H0_EPS


@dataclass(frozen=True)
class EntropyReport:
    """Entropies ``S_m`` of one block, keyed by ``m`` (nats; ``S_0`` is a count).

    ``hartley`` holds ``S_0`` converted to nats (count * log 2) when known.
    """

    ell: int
    values: dict
    hartley: float | None = None

    def __getitem__(self, m: int) -> float:
        return self.values[m]


@dataclass(frozen=True)
class SlopeResult:
    m: int | None
    slope: float
    intercept: float
    residual: float
    method: str  # "fit" | "integral" | "asymptotic"


@dataclass(frozen=True)
class ExponentFit:
    nu: float
    amplitude: float
    window: tuple
    residual: float


# -- H_m ----------------------------------------------------------------------

def renyi_h(nu, m: int) -> np.ndarray:
    """``H_m(nu)`` for ``nu`` in [-1, 1], exact at ``|nu| = 1``.

    ``H_0`` is the indicator of ``|nu| < 1``; ``H_1`` is the binary entropy of
    ``(1 +- nu) / 2``; ``H_m`` (m >= 2) is ``log(p^m + q^m) / (1 - m)``.
    """
    if m < 0 or int(m) != m:
        raise ValueError(f"m must be a non-negative integer, got {m}")
    nu = np.abs(np.clip(np.asarray(nu, dtype=float), -1.0, 1.0))
    if m == 0:
        return (nu < 1 - H0_EPS).astype(float)
    q = (1 - nu) / 2  # the smaller of the two probabilities
    p = 1 - q
    if m == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            qlogq = np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0)
        return -p * np.log1p(-q) - qlogq
    # log(p^m + q^m) with p^m = exp(m log1p(-q)), accurate when q is tiny
    return np.log1p(np.expm1(m * np.log1p(-q)) + q ** m) / (1 - m)


# -- correlation matrix and spectrum ------------------------------------------

def build_correlation_matrix(coeffs: Coefficients, ell: int, atol: float = 1e-9) -> np.ndarray:
    """Assemble the real antisymmetric ``2 ell x 2 ell`` matrix Gamma."""
    if ell < 1:
        raise ValueError("ell must be positive")
    if coeffs.max_j < ell - 1:
        raise CoefficientRangeTooSmall(f"need |j| <= {ell - 1}, have |j| <= {coeffs.max_j}")
    phi = coeffs.phi.copy()
    phi[coeffs.max_j] = 0.0
    r = np.arange(ell)
    d = r[None, :] - r[:, None] + coeffs.max_j  # index of j = s - r
    dm = r[:, None] - r[None, :] + coeffs.max_j  # index of -j
    g = np.empty((ell, 2, ell, 2))
    g[:, 0, :, 0] = -phi[d]
    g[:, 0, :, 1] = coeffs.psi[d]
    g[:, 1, :, 0] = -coeffs.psi[dm]
    g[:, 1, :, 1] = phi[d]
    g = g.reshape(2 * ell, 2 * ell)
    asym = np.abs(g + g.T).max()
    if asym > atol:
        raise ValueError(f"correlation matrix not antisymmetric (max |G + G^T| = {asym:.3e})")
    return g


def jacobi_eigenvalues(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm drops below ``tol`` times
    the matrix norm (absolute for the zero matrix).
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    scale = max(np.linalg.norm(a), 1.0)
    for _ in range(max_sweeps):
        off = math.sqrt(2 * np.sum(np.triu(a, 1) ** 2))
        if off < tol * scale:
            return np.diag(a).copy()
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.hypot(1.0, tau))
                c = 1 / math.sqrt(1 + t * t)
                s = t * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * col_p - s * col_q, s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :], a[q, :] = c * row_p - s * row_q, s * row_p + c * row_q
    raise SpectralFailure(f"Jacobi did not converge in {max_sweeps} sweeps")


def entanglement_spectrum(gamma: np.ndarray, method: str = "lapack") -> np.ndarray:
    """``nu_p`` (descending, length ell) from the paired eigenvalues of ``-Gamma^2``."""
    gamma = np.asarray(gamma, dtype=float)
    sq = gamma.T @ gamma  # equals -Gamma^2 for antisymmetric Gamma
    sq = 0.5 * (sq + sq.T)
    if method == "lapack":
        ev = np.linalg.eigvalsh(sq)
    elif method == "jacobi":
        ev = jacobi_eigenvalues(sq)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    ev = np.sort(ev)[::-1]
    paired = 0.5 * (ev[0::2] + ev[1::2])
    return np.sqrt(np.clip(paired, 0.0, 1.0))


def entropy_from_spectrum(nu, m: int) -> float:
    """``sum_p H_m(nu_p)``; for ``m = 0`` a dimensionless count."""
    return float(np.sum(renyi_h(nu, m)))


def hartley_entropy(nu) -> float:
    """``S_0`` in nats: log of the reduced-density-matrix rank."""
    return entropy_from_spectrum(nu, 0) * math.log(2)


def block_entropies(coeffs: Coefficients, ells: Iterable[int], ms: Sequence[int] = (1,),
                    method: str = "lapack") -> list[EntropyReport]:
    """Entropies of blocks ``[1, ell]`` for each ``ell``."""
    out = []
    for ell in ells:
        nu = entanglement_spectrum(build_correlation_matrix(coeffs, int(ell)), method)
        vals = {m: entropy_from_spectrum(nu, m) for m in ms}
        out.append(EntropyReport(int(ell), vals, hartley_entropy(nu)))
    return out


# -- entropy densities ----------------------------------------------------------

def _window_integral(p: VolumeParams, m: int, n_nodes: int) -> float:
    win = critical_window(p)
    if win.is_empty:
        return 0.0
    if m == 0:
        return win.width / math.pi
    # s_m = (1/pi) int_{k_lo}^{k_hi} H_m(nu(k)) dk over positive momenta, split at
    # pi/2 and mapped by k = pi/2 - (pi/2 - edge)(1 - s^2) so the sqrt edge behaviour is smooth
    s, w = np.polynomial.legendre.leggauss(n_nodes)
    s, w = (s + 1) / 2, w / 2
    total = 0.0
    for edge in (win.k_lo, win.k_hi):
        span = math.pi / 2 - edge
        k = math.pi / 2 - span * (1 - s * s)
        jac = 2 * s * abs(span)
        nu = np.minimum(symbol_modulus(p, k, method="exact"), 1.0)
        total += float(np.sum(w * jac * renyi_h(nu, m)))
    return total / math.pi


def entropy_density_integral(source: Union[SymbolPair, VolumeParams], m: int,
                             n_nodes: int = 400) -> float:
    """Leading coefficient ``s_m = (1 / 2 pi) int H_m(|symbol|) dk``.

    A :class:`SymbolPair` is integrated by its grid mean.  For the two-cycle
    model (:class:`VolumeParams`) only the critical window contributes, and
    that window is integrated by Gauss-Legendre with closed-form averages.
    """
    if isinstance(source, SymbolPair):
        nu = np.minimum(source.modulus, 1.0)
        return float(np.mean(renyi_h(nu, m)))
    if isinstance(source, VolumeParams):
        return _window_integral(source, m, n_nodes)
    raise TypeError("source must be a SymbolPair or VolumeParams")


# -- fits -------------------------------------------------------------------

def _as_points(points, ys=None):
    if ys is not None:
        xs, ys = np.asarray(points, dtype=float), np.asarray(ys, dtype=float)
    else:
        arr = np.asarray(list(points), dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("points must be (ell, S) pairs")
        xs, ys = arr[:, 0], arr[:, 1]
    return xs, ys


def fit_slope(points, values=None, m: int | None = None) -> SlopeResult:
    """Least-squares line ``S = s ell + b`` through ``(ell, S)`` points.

    Accepts a list of pairs, or two parallel sequences.
    """
    ell, s = _as_points(points, values)
    if len(ell) and np.all(ell == ell[0]):
        raise DegenerateFit("all ell values are equal")
    if len(ell) < 5:
        raise ValueError("need at least 5 points")
    if np.any(np.diff(ell) <= 0):
        raise ValueError("ell must be strictly increasing")
    a = np.stack([ell, np.ones_like(ell)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(a, s, rcond=None)
    resid = float(np.sqrt(np.mean((a @ [slope, intercept] - s) ** 2)))
    return SlopeResult(m, float(slope), float(intercept), resid, "fit")


def fit_log_coefficient(ells, values) -> tuple[float, float]:
    """``(a, b)`` of the least-squares fit ``S = a log(ell) + b``."""
    ells, values = np.asarray(ells, dtype=float), np.asarray(values, dtype=float)
    a, b = np.polyfit(np.log(ells), values, 1)
    return float(a), float(b)


def fit_exponent(samples, lambda_c: float) -> ExponentFit:
    """Fit ``s = A (lambda_c - lambda)^nu`` to ``(lambda, s)`` samples."""
    lam, s = _as_points(samples)
    if np.any(s <= 0):
        raise ValueError("entropy densities must be positive")
    delta = lambda_c - lam
    if np.any(delta <= 0):
        raise ValueError("all samples must lie below lambda_c")
    if delta.max() / delta.min() < 10:
        raise InsufficientRange("samples must span at least a decade in lambda_c - lambda")
    ld, ls = np.log(delta), np.log(s)
    nu, log_amp = np.polyfit(ld, ls, 1)
    resid = float(np.sqrt(np.mean((nu * ld + log_amp - ls) ** 2)))
    return ExponentFit(float(nu), float(math.exp(log_amp)), (float(delta.min()), float(delta.max())), resid)


# -- near-critical asymptotics of the two-cycle model ---------------------------

def _gamma_integrand(theta: np.ndarray, x: float) -> np.ndarray:
    lc = lambda_c_volume(x)
    s2, c2 = math.sin(2 * x), math.cos(2 * x)
    a = s2 ** 2 * math.exp(-4 * lc) - c2 ** 2 * np.exp(4j * x)
    b = s2 * c2 * (math.exp(-4 * lc) + np.exp(4j * x))
    b2 = abs(b) ** 2
    dd = b2 + abs(1 - a) ** 2
    u = np.tan(theta)
    num = b2 * u * u + b2 / dd
    den = dd * dd * u ** 4 + 2 * (dd - 2 * (1 - a).real ** 2) * u * u + 1
    return num / den * (1 + u * u)  # du = sec^2(theta) dtheta


def gamma_coefficient(x: float, n_nodes: int = 4096, with_error: bool = False):
    """Slope ``gamma`` in ``1 - |symbol| = gamma |theta_k| + O(theta_k^2)`` at the window edge.

    The integral over ``u`` in [0, inf) is mapped to theta = atan(u) in
    [0, pi/2) and summed by the midpoint rule.  The integrand is even about
    both endpoints, so the rule converges spectrally; the estimate from
    ``2 n_nodes`` nodes gives the returned error.
    """
    if not 0 < x < math.pi / 4:
        raise ValueError("x must lie in (0, pi/4)")

    def rule(n):
        h = (math.pi / 2) / n
        theta = (np.arange(n) + 0.5) * h
        return 4 / math.pi * h * float(np.sum(_gamma_integrand(theta, x)))

    coarse, fine = rule(n_nodes), rule(2 * n_nodes)
    return (fine, abs(fine - coarse)) if with_error else fine


def asymptotic_slope(m: int, x: float, lam: float) -> float:
    """Leading small-``(lambda_c - lambda)`` form of ``s_m`` for the two-cycle model.

    m = 0: ``4 sin 2x / (pi sqrt(tanh 2 lambda_c)) sqrt(delta)``;
    m = 1: ``gamma sin^2 2x cosh 2 lambda_c (1 - 2 log 2) / 2 * delta log delta``;
    m >= 2: ``2 gamma sin^2 2x cosh 2 lambda_c m / (m - 1) * delta``.
    """
    lc = lambda_c_volume(x)
    delta = lc - lam
    if delta < 0:
        raise ValueError("lambda must not exceed lambda_c")
    if delta == 0:
        return 0.0
    if m == 0:
        return 4 * math.sin(2 * x) / (math.pi * math.sqrt(math.tanh(2 * lc))) * math.sqrt(delta)
    amp = gamma_coefficient(x) * math.sin(2 * x) ** 2 * math.cosh(2 * lc)
    if m == 1:
        return amp * (1 - 2 * math.log(2)) / 2 * delta * math.log(delta)
    return 2 * amp * m / (m - 1) * delta
