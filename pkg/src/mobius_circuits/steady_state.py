"""Evolution of the pair amplitude f_n(k) and its long-time limits.

Non-critical momenta relax to the attracting fixed point of the round's
Mobius matrix.  Critical momenta keep rotating by ``theta_k`` per round; their
steady state is the average over the phase ``u = n theta_k``, which this
module evaluates either by uniform quadrature in ``u`` or in closed form
(the integrands are ratios of quadratic forms in ``(cos u, sin u)``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import AsymmetryViolation, NotCritical
from .mobius import (
    DEFAULT_TOL,
    LayerSpec,
    amplitude,
    apply_mobius,
    compose_round,
    criticality_mask,
    matrix_power,
    projective_distance,
    stable_fixed_point,
)
from .models import (
    CriticalWindow,
    LogLawParams,
    VolumeParams,
    cycle_spec,
    loglaw_matrix,
    volume_matrix,
)

__all__ = [
    "MomentumGrid",
    "Coefficients",
    "SymbolPair",
    "Phase",
    "transfer_matrices",
    "evolve_amplitude",
    "closed_form_fn",
    "symbol_values",
    "fourier_coefficients",
    "correlation_coefficients",
    "u_average",
    "averaged_symbols",
    "symbol_modulus",
    "classify_phase",
]

Source = Union[VolumeParams, LogLawParams, Sequence[LayerSpec]]


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform half-integer grid ``k_j = -pi + 2 pi (j + 1/2) / N``.

    It never contains 0 or +-pi, is symmetric under k -> -k, and for ``N = L``
    coincides with the antiperiodic momenta of an L-site ring.
    """

    n: int = 4096

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError("grid size must be an even integer >= 2")

    @property
    def k(self) -> np.ndarray:
        return -math.pi + 2 * math.pi * (np.arange(self.n) + 0.5) / self.n

    @property
    def spacing(self) -> float:
        return 2 * math.pi / self.n


@dataclass(frozen=True)
class Coefficients:
    """Real-space coefficients ``phi_j, psi_j`` for ``j = -max_j .. max_j``."""

    phi: np.ndarray
    psi: np.ndarray

    @property
    def max_j(self) -> int:
        return (len(self.phi) - 1) // 2

    def phi_at(self, j):
        return self.phi[np.asarray(j) + self.max_j]

    def psi_at(self, j):
        return self.psi[np.asarray(j) + self.max_j]


@dataclass(frozen=True)
class SymbolPair:
    """Momentum-space symbols ``phi_hat(k), psi_hat(k)`` on a grid."""

    grid: MomentumGrid
    phi_hat: np.ndarray
    psi_hat: np.ndarray
    critical: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)

    @property
    def modulus(self) -> np.ndarray:
        """``sqrt(|phi_hat|^2 + |psi_hat|^2)``, the argument of H_m."""
        return np.sqrt(np.abs(self.phi_hat) ** 2 + np.abs(self.psi_hat) ** 2)

    def coefficients(self, max_j: int) -> Coefficients:
        return fourier_coefficients(self.phi_hat, self.psi_hat, self.grid, max_j)


# -- transfer matrices on a grid ----------------------------------------------

def transfer_matrices(source: Source, k) -> np.ndarray:
    """Det-1 round matrices at momenta ``k``.

    Closed forms are used where they are defined; the degenerate parameter
    points (``x`` in {0, pi/4}, ``sin 2t = 0``) fall back to layer composition.
    """
    k = np.asarray(k, dtype=float)
    if isinstance(source, VolumeParams):
        if 0 < source.x < math.pi / 4:
            return volume_matrix(k, source)
        return compose_round(source.round, k)
    if isinstance(source, LogLawParams):
        if abs(math.sin(2 * source.t)) > 1e-12:
            return loglaw_matrix(k, source)
        return compose_round(cycle_spec(source.t, source.h, source.lam), k)
    return compose_round(list(source), k)


# -- finite-n evolution ---------------------------------------------------------

def evolve_amplitude(m: np.ndarray, n: int, f0=None) -> np.ndarray:
    """Homogeneous ``f_n = M^n f0`` (default ``f0 = 0``), batched over k."""
    if n < 0:
        raise ValueError("n must be non-negative")
    m = np.asarray(m, dtype=complex)
    if f0 is None:
        f0 = amplitude(np.zeros(m.shape[:-2]))
    f0 = np.broadcast_to(np.asarray(f0, dtype=complex), m.shape[:-2] + (2,))
    if n == 0:
        return apply_mobius(np.eye(2), f0)
    return apply_mobius(matrix_power(m, n), f0)


def closed_form_fn(k, n: int, p: VolumeParams, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Oscillating amplitude of the two-cycle model at critical momenta.

    ``f_n = b sin(n theta) / ((cos theta - a) sin(n theta) + sin(theta) cos(n theta))``,
    returned in homogeneous form after dividing through by ``sin theta``.
    """
    m = volume_matrix(k, p)
    crit, theta = criticality_mask(m, tol)
    if not np.all(crit):
        raise NotCritical("closed form requires every momentum to be critical")
    a, b = m[..., 0, 0], m[..., 0, 1]
    st = np.sin(theta)
    small = np.abs(st) < 1e-12
    # sin(n theta) / sin(theta), with its limits at theta -> 0, pi
    ratio = np.where(
        small,
        n * np.where(np.cos(theta) > 0, 1.0, (-1.0) ** (n + 1)),
        np.sin(n * theta) / np.where(small, 1.0, st),
    )
    x = b * ratio
    y = (np.cos(theta) - a) * ratio + np.cos(n * theta)
    return apply_mobius(np.eye(2), np.stack([x, y], axis=-1))


# -- symbols and Fourier coefficients -----------------------------------------

def symbol_values(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Integrands of the coefficient formulas evaluated at amplitudes ``f``.

    Returns ``(i (f + f*) / (1 + |f|^2), (f - f* + |f|^2 - 1) / (1 + |f|^2))``
    written in homogeneous coordinates so ``f = inf`` is handled exactly.
    """
    f = np.asarray(f)
    x, y = f[..., 0], f[..., 1]
    norm = np.abs(x) ** 2 + np.abs(y) ** 2
    xy = x * np.conj(y)
    phi = 2j * xy.real / norm
    psi = (2j * xy.imag + np.abs(x) ** 2 - np.abs(y) ** 2) / norm
    return phi, psi


def fourier_coefficients(phi_hat, psi_hat, grid: MomentumGrid, max_j: int,
                         imag_tol: float = 1e-9) -> Coefficients:
    """``(1 / N) sum_k e^{-ikj} (.)`` for ``|j| <= max_j``, via one FFT each."""
    n = grid.n
    js = np.arange(-max_j, max_j + 1)
    # k_m = -pi + 2 pi (m + 1/2) / N  =>  e^{-i k_m j} = e^{i pi j (1 - 1/N)} e^{-2 pi i m j / N}
    phase = np.exp(1j * math.pi * js * (1 - 1 / n))
    out = []
    for values in (phi_hat, psi_hat):
        spec = np.fft.fft(np.asarray(values, dtype=complex))
        coeff = phase * spec[js % n] / n
        if np.abs(coeff.imag).max(initial=0.0) > imag_tol:
            raise ValueError(f"coefficients not real (max imag {np.abs(coeff.imag).max():.3e})")
        out.append(coeff.real.copy())
    out[0][max_j] = 0.0  # phi_0 vanishes for odd amplitudes
    return Coefficients(out[0], out[1])


def correlation_coefficients(f: np.ndarray, grid: MomentumGrid, max_j: int,
                             asym_tol: float = 1e-8) -> Coefficients:
    """``phi_j, psi_j`` of the coherent state with amplitude ``f`` sampled on ``grid``.

    ``f`` must be odd in k; on the half-integer grid node ``i`` mirrors node
    ``N - 1 - i``.
    """
    f = np.asarray(f, dtype=complex)
    if f.shape != (grid.n, 2):
        raise ValueError(f"expected amplitudes of shape {(grid.n, 2)}, got {f.shape}")
    flipped = f[::-1] * np.array([-1.0, 1.0])
    asym = projective_distance(f, flipped).max()
    if asym > asym_tol:
        raise AsymmetryViolation(f"f(-k) != -f(k): max deviation {asym:.3e}")
    return fourier_coefficients(*symbol_values(f), grid, max_j)


# -- averages over the fast phase ---------------------------------------------

def _oscillation_vectors(m: np.ndarray, theta: np.ndarray, f0: np.ndarray):
    # M^n v0 is proportional to sin(u) (M - cos theta) v0 + sin(theta) cos(u) v0
    p = np.einsum("...ij,...j->...i", m, f0) - np.cos(theta)[..., None] * f0
    q = np.sin(theta)[..., None] * f0
    return p, q


def _forms(p: np.ndarray, q: np.ndarray):
    """Coefficients (c^2, cs/2, s^2) of the quadratic forms in (cos u, sin u)."""
    px, py, qx, qy = p[..., 0], p[..., 1], q[..., 0], q[..., 1]
    cc = qx * np.conj(qy)
    cs = (px * np.conj(qy) + qx * np.conj(py)) / 2
    ss = px * np.conj(py)
    re_xy = (cc.real, cs.real, ss.real)
    im_xy = (cc.imag, cs.imag, ss.imag)
    diff = (np.abs(qx) ** 2 - np.abs(qy) ** 2,
            (px * np.conj(qx) - py * np.conj(qy)).real,
            np.abs(px) ** 2 - np.abs(py) ** 2)
    pr = np.concatenate([p.real, p.imag], axis=-1)
    qr = np.concatenate([q.real, q.imag], axis=-1)
    norm = ((qr * qr).sum(-1), (pr * qr).sum(-1), (pr * pr).sum(-1))
    # Lagrange identity: |P|^2 |Q|^2 - (P.Q)^2 without cancellation
    cross = pr[..., :, None] * qr[..., None, :] - pr[..., None, :] * qr[..., :, None]
    det = 0.5 * (cross ** 2).sum(axis=(-2, -1))
    return re_xy, im_xy, diff, norm, det


def _ratio_average(a, b, det_b):
    # (1/2pi) int (v.Av)/(v.Bv) du = (tr A + tr(adj(B) A) / sqrt(det B)) / (tr B + 2 sqrt(det B))
    sq = np.sqrt(det_b)
    adj = b[2] * a[0] - 2 * b[1] * a[1] + b[0] * a[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(sq > 0, adj / np.where(sq > 0, sq, 1.0), 0.0)
    return (a[0] + a[2] + corr) / (b[0] + b[2] + 2 * sq)


def u_average(m: np.ndarray, theta: np.ndarray, f0=None, method: str = "quadrature",
              n_u: int = 2048, chunk: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Average of the symbol integrands over the phase ``u`` at critical momenta.

    ``method="quadrature"`` uses ``n_u`` uniform nodes on [0, 2 pi);
    ``method="exact"`` uses the closed form for ratios of quadratic forms.
    """
    m = np.asarray(m, dtype=complex)
    theta = np.asarray(theta, dtype=float)
    if f0 is None:
        f0 = amplitude(np.zeros(theta.shape))
    f0 = np.broadcast_to(np.asarray(f0, dtype=complex), theta.shape + (2,))
    p, q = _oscillation_vectors(m, theta, f0)
    if method == "exact":
        re_xy, im_xy, diff, norm, det = _forms(p, q)
        phi = 2j * _ratio_average(re_xy, norm, det)
        psi = 2j * _ratio_average(im_xy, norm, det) + _ratio_average(diff, norm, det)
        return phi, psi
    if method != "quadrature":
        raise ValueError(f"unknown averaging method {method!r}")
    u = 2 * math.pi * np.arange(n_u) / n_u
    su, cu = np.sin(u), np.cos(u)
    flat_p, flat_q = p.reshape(-1, 2), q.reshape(-1, 2)
    phi = np.empty(len(flat_p), dtype=complex)
    psi = np.empty(len(flat_p), dtype=complex)
    for start in range(0, len(flat_p), chunk):
        sl = slice(start, start + chunk)
        x = flat_p[sl, 0, None] * su + flat_q[sl, 0, None] * cu
        y = flat_p[sl, 1, None] * su + flat_q[sl, 1, None] * cu
        ph, ps = symbol_values(np.stack([x, y], axis=-1))
        phi[sl], psi[sl] = ph.mean(axis=-1), ps.mean(axis=-1)
    return phi.reshape(theta.shape), psi.reshape(theta.shape)


def averaged_symbols(source: Source, grid: MomentumGrid, n_u: int = 2048,
                     method: str = "quadrature", f0=None, tol: float = DEFAULT_TOL) -> SymbolPair:
    """Steady-state symbols of a round on ``grid``.

    Non-critical momenta use the attracting fixed point; critical momenta use
    the average over the oscillation phase.
    """
    k = grid.k
    m = transfer_matrices(source, k)
    crit, theta = criticality_mask(m, tol)
    phi = np.empty(grid.n, dtype=complex)
    psi = np.empty(grid.n, dtype=complex)
    if np.any(~crit):
        phi[~crit], psi[~crit] = symbol_values(stable_fixed_point(m[~crit]))
    if np.any(crit):
        start = None if f0 is None else np.broadcast_to(f0, (grid.n, 2))[crit]
        phi[crit], psi[crit] = u_average(m[crit], theta[crit], start, method=method, n_u=n_u)
    return SymbolPair(grid, phi, psi, crit, theta)


def symbol_modulus(source: Source, k, method: str = "exact", n_u: int = 2048,
                   tol: float = DEFAULT_TOL) -> np.ndarray:
    """``sqrt(|phi_hat|^2 + |psi_hat|^2)`` at arbitrary momenta (equal to 1 off-critical)."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    m = transfer_matrices(source, k)
    crit, theta = criticality_mask(m, tol)
    out = np.ones(k.shape)
    if np.any(crit):
        phi, psi = u_average(m[crit], theta[crit], method=method, n_u=n_u)
        out[crit] = np.sqrt(np.abs(phi) ** 2 + np.abs(psi) ** 2)
    return out


# -- phase classification -------------------------------------------------------

@dataclass(frozen=True)
class Phase:
    """Entanglement phase read off from the set of critical momenta.

    ``windows`` are critical intervals in (-pi, pi); ``critical_momenta``
    are isolated critical points.
    """

    kind: str  # "AreaLaw" | "LogLaw" | "VolumeLaw"
    critical_momenta: tuple = ()
    windows: tuple = ()

    @property
    def window(self) -> CriticalWindow:
        """Critical window restricted to positive momenta."""
        pos = [(max(lo, 0.0), hi) for lo, hi in self.windows if hi > 0]
        if not pos:
            return CriticalWindow.empty()
        lo, hi = pos[0][0], pos[-1][1]
        if lo <= 1e-9 and hi >= math.pi - 1e-9 and len(pos) == 1:
            return CriticalWindow.full()
        return CriticalWindow("window", lo, hi)


def _bisect(pred: Callable[[float], bool], lo: float, hi: float, tol: float) -> float:
    """Boundary between ``pred(lo)`` and ``pred(hi)`` (which must differ)."""
    p_lo = pred(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid) == p_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _minimize(fn: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Golden-section search for a minimum of a unimodal ``fn`` on [lo, hi]."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def classify_phase(source: Source, grid: MomentumGrid | None = None, tol: float = DEFAULT_TOL,
                   k_tol: float = 1e-10) -> Phase:
    """Area, log or volume law from the critical momenta of a round.

    Runs of at least three critical grid nodes are windows (edges refined by
    bisection).  Shorter runs, and sign changes of Im Tr at which condition
    ``|Re Tr| <= 2`` holds, are isolated critical momenta.
    """
    grid = grid or MomentumGrid()
    k = grid.k
    m = transfer_matrices(source, k)
    tr = m[..., 0, 0] + m[..., 1, 1]
    crit, _ = criticality_mask(m, tol)

    def trace_at(kk: float) -> complex:
        mm = transfer_matrices(source, np.array([kk]))[0]
        return complex(mm[0, 0] + mm[1, 1])

    def is_crit(kk: float) -> bool:
        # edges are refined on the exact condition |Re Tr| <= 2
        tr_k = trace_at(kk)
        return abs(tr_k.imag) <= tol and abs(tr_k.real) <= 2

    def im_tr(kk: float) -> float:
        return trace_at(kk).imag

    if np.all(crit):
        return Phase("VolumeLaw", windows=((-math.pi, math.pi),))

    windows, isolated = [], []
    padded = np.concatenate([[False], crit, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(int)))
    for start, stop in zip(edges[::2], edges[1::2]):  # run covers nodes start..stop-1
        if stop - start >= 3:
            lo = -math.pi if start == 0 else _bisect(is_crit, k[start - 1], k[start], k_tol)
            hi = math.pi if stop == grid.n else _bisect(is_crit, k[stop - 1], k[stop], k_tol)
            windows.append((lo, hi))
        else:
            centre = k[(start + stop - 1) // 2] if stop - start == 1 else 0.5 * (k[start] + k[stop - 1])
            lo_i, hi_i = max(start - 1, 0), min(stop, grid.n - 1)
            if np.sign(tr[lo_i].imag) * np.sign(tr[hi_i].imag) < 0:
                centre = _bisect(lambda kk: im_tr(kk) > 0, k[lo_i], k[hi_i], k_tol)
            isolated.append(float(centre))

    # isolated roots of Im Tr falling between grid nodes
    im = tr.imag
    big = np.abs(im) > tol
    flips = np.flatnonzero(big[:-1] & big[1:] & (np.sign(im[:-1]) != np.sign(im[1:])))
    for i in flips:
        root = _bisect(lambda kk: im_tr(kk) > 0, k[i], k[i + 1], k_tol)
        mm = transfer_matrices(source, np.array([root]))[0]
        tr_root = mm[0, 0] + mm[1, 1]
        # a sign jump of the (sign-ambiguous) matrix is not a root
        if abs(tr_root.imag) <= 1e-6 and abs(tr_root.real) <= 2 + tol:
            isolated.append(float(root))

    # |Re Tr| touching 2 between nodes on a real-trace stretch (e.g. at lambda_c)
    excess = np.abs(tr.real) - 2
    real_tr = np.abs(im) <= tol
    for i in range(1, grid.n - 1):
        if crit[i] or not (real_tr[i - 1] and real_tr[i] and real_tr[i + 1]):
            continue
        if excess[i] <= excess[i - 1] and excess[i] < excess[i + 1]:
            kk = _minimize(lambda q: abs(trace_at(q).real), k[i - 1], k[i + 1], k_tol)
            if abs(trace_at(kk).real) <= 2 + tol:
                isolated.append(float(kk))

    isolated = sorted(isolated)
    if windows:
        return Phase("VolumeLaw", tuple(isolated), tuple(windows))
    if isolated:
        return Phase("LogLaw", tuple(isolated))
    return Phase("AreaLaw")
