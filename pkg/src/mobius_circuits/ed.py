"""Dense statevector simulation of the same circuits on small periodic chains.

Site ``j`` is tensor axis ``j`` of a ``(2,) * L`` array; bit value 0 is the
sigma^z = +1 state.  Non-unitary layers are renormalized after each layer.
This is the ground truth the Gaussian machinery is tested against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .entanglement import (
    EntropyReport,
    build_correlation_matrix,
    entanglement_spectrum,
    entropy_from_spectrum,
    hartley_entropy,
)
from .errors import NormUnderflow, ZeroPostSelection
from .mobius import LayerSpec, amplitude, compose_round
from .steady_state import MomentumGrid, evolve_amplitude, fourier_coefficients, symbol_values

__all__ = [
    "FiniteLatticeSpec",
    "plus_state",
    "apply_layer_dense",
    "run_circuit",
    "reduced_entropies",
    "finite_lattice_entropies",
    "ancilla_weak_measurement",
]

MAX_SITES = 14
RANK_CUTOFF = 1e-10
POSTSELECT_CUTOFF = 1e-14  # relative weight below which the outcome counts as impossible

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
ID2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class FiniteLatticeSpec:
    """Even ring of ``L`` sites; its positive momenta are ``pi (2m + 1) / L``."""

    L: int

    def __post_init__(self):
        if self.L < 2 or self.L % 2:
            raise ValueError("L must be even and at least 2")

    @property
    def positive_momenta(self) -> np.ndarray:
        return math.pi * (2 * np.arange(self.L // 2) + 1) / self.L

    @property
    def grid(self) -> MomentumGrid:
        return MomentumGrid(self.L)


def _sites(psi: np.ndarray) -> int:
    n = int(round(math.log2(psi.size)))
    if 2 ** n != psi.size:
        raise ValueError("state length must be a power of two")
    return n


def plus_state(L: int) -> np.ndarray:
    """All spins in the sigma^x = +1 eigenstate."""
    return np.full(2 ** L, 2 ** (-L / 2), dtype=complex)


def _apply_one(psi: np.ndarray, gate: np.ndarray, j: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(gate, psi, axes=([1], [j])), 0, j)


def _apply_two(psi: np.ndarray, gate: np.ndarray, i: int, j: int) -> np.ndarray:
    out = np.tensordot(gate.reshape(2, 2, 2, 2), psi, axes=([2, 3], [i, j]))
    return np.moveaxis(out, [0, 1], [i, j])


def apply_layer_dense(psi: np.ndarray, layer: LayerSpec, normalize: bool = True) -> np.ndarray:
    """Apply ``exp(-i t sum_j O_j)`` on a periodic ring, gate by gate.

    ZZ and YY gates act on bonds (1,2), ..., (L-1,L), (L,1); X gates on every
    site.  With ``normalize`` the result is rescaled to unit norm.
    """
    L = _sites(psi)
    if L < 4 or L % 2 or L > MAX_SITES:
        raise ValueError(f"need an even chain with 4 <= L <= {MAX_SITES}, got {L}")
    t = layer.time
    state = np.asarray(psi, dtype=complex).reshape((2,) * L)
    if layer.kind == "X":
        gate = np.cos(t) * ID2 - 1j * np.sin(t) * SX
        for j in range(L):
            state = _apply_one(state, gate, j)
    elif layer.kind == "ZZ":
        phases = np.exp(-1j * t * np.array([1.0, -1.0, -1.0, 1.0]))
        gate = np.diag(phases)
        for j in range(L):
            state = _apply_two(state, gate, j, (j + 1) % L)
    else:
        gate = np.cos(t) * np.eye(4) - 1j * np.sin(t) * np.kron(SY, SY)
        for j in range(L):
            state = _apply_two(state, gate, j, (j + 1) % L)
    out = state.reshape(-1)
    if normalize:
        norm = np.linalg.norm(out)
        if not norm > 1e-300:
            raise NormUnderflow("state norm vanished; the trajectory has zero weight")
        out = out / norm
    return out


def run_circuit(L: int, round_spec: Sequence[LayerSpec], n: int, psi0=None) -> np.ndarray:
    """``n`` repetitions of the round, starting from the all-+x state by default."""
    if n < 0:
        raise ValueError("n must be non-negative")
    psi = plus_state(L) if psi0 is None else np.asarray(psi0, dtype=complex).copy()
    if psi.size != 2 ** L:
        raise ValueError("initial state has the wrong length")
    for _ in range(n):
        for layer in round_spec:
            psi = apply_layer_dense(psi, layer)
    return psi


def reduced_entropies(psi: np.ndarray, ell: int, ms: Sequence[int] = (0, 1, 2)) -> EntropyReport:
    """Renyi entropies of sites ``1..ell``; ``S_0`` is the log of the rank."""
    L = _sites(psi)
    if not 1 <= ell <= L - 1:
        raise ValueError("need 1 <= ell <= L - 1")
    a = np.asarray(psi).reshape(2 ** ell, -1)
    a = a / np.linalg.norm(a)
    p = np.clip(np.linalg.eigvalsh(a @ a.conj().T), 0.0, None)
    nz = p[p > RANK_CUTOFF]
    rank_log = math.log(len(nz))
    vals = {}
    for m in ms:
        if m == 0:
            vals[m] = rank_log
        elif m == 1:
            vals[m] = float(-np.sum(nz * np.log(nz)))
        else:
            vals[m] = float(math.log(np.sum(p ** m)) / (1 - m))
    return EntropyReport(ell, vals, rank_log)


def finite_lattice_entropies(spec: FiniteLatticeSpec, round_spec: Sequence[LayerSpec], n: int,
                             ell: int, ms: Sequence[int] = (0, 1, 2)) -> EntropyReport:
    """Entropies of the exact Gaussian state on an ``L``-site ring.

    Each antiperiodic momentum evolves under the round's Mobius matrix from
    ``f = 0``; the coefficients are discrete momentum sums.
    """
    if not 1 <= ell <= spec.L:
        raise ValueError("need 1 <= ell <= L")
    grid = spec.grid
    m = compose_round(list(round_spec), grid.k)
    f = evolve_amplitude(m, n, amplitude(np.zeros(grid.n)))
    coeffs = fourier_coefficients(*symbol_values(f), grid, max(ell - 1, 0))
    nu = entanglement_spectrum(build_correlation_matrix(coeffs, ell))
    vals = {mm: entropy_from_spectrum(nu, mm) for mm in ms}
    return EntropyReport(ell, vals, hartley_entropy(nu))


def ancilla_weak_measurement(psi: np.ndarray, site: int, theta: float, theta_prime: float) -> np.ndarray:
    """Weak sigma^x measurement at ``site`` realized with an ancilla and post-selection.

    Couples an ancilla prepared in |0> through
    ``exp(i ((theta + theta')/2 + (theta - theta')/2 sigma^x_site) sigma^y_a)``,
    keeps the ancilla outcome |0> and renormalizes.  The net effect is
    ``exp(lam sigma^x_site)`` with ``exp(2 lam) = cos(theta) / cos(theta')``.
    """
    L = _sites(psi)
    if not 0 <= site < L:
        raise ValueError("site out of range")
    gen = ((theta + theta_prime) / 2 * np.kron(ID2, SY)
           + (theta - theta_prime) / 2 * np.kron(SX, SY))  # (site, ancilla)
    w, v = np.linalg.eigh(gen)
    coupling = (v * np.exp(1j * w)) @ v.conj().T
    state = np.multiply.outer(np.asarray(psi, dtype=complex).reshape((2,) * L), np.array([1.0, 0.0]))
    state = _apply_two(state, coupling, site, L)
    kept = state[..., 0].reshape(-1)
    norm = np.linalg.norm(kept)
    if not norm > POSTSELECT_CUTOFF * np.linalg.norm(psi):
        raise ZeroPostSelection("post-selected ancilla outcome has zero amplitude")
    return kept / norm
