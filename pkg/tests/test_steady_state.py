import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mobius_circuits.errors import AsymmetryViolation, NotCritical
from mobius_circuits.mobius import (
    LayerSpec,
    amplitude,
    apply_mobius,
    criticality_mask,
    projective_distance,
    to_complex,
)
from mobius_circuits.models import (
    LogLawParams,
    VolumeParams,
    critical_window,
    lambda_c_volume,
    loglaw_critical_momentum,
    volume_matrix,
)
from mobius_circuits.steady_state import (
    MomentumGrid,
    averaged_symbols,
    classify_phase,
    closed_form_fn,
    correlation_coefficients,
    evolve_amplitude,
    symbol_values,
    transfer_matrices,
    u_average,
)

X8 = math.pi / 8
PSI0_N500 = -0.4480948054872357  # x = pi/8, lam = 0.1, n = 500, N = 4096 (frozen)


def test_grid_nodes():
    g = MomentumGrid(16)
    k = g.k
    assert np.all(np.abs(k) > 0) and np.all(np.abs(k) < math.pi)
    assert np.allclose(k, -k[::-1])
    with pytest.raises(ValueError):
        MomentumGrid(7)


# -- evolution ----------------------------------------------------------------

def test_evolve_zero_steps_returns_start():
    f0 = amplitude(0.2 - 0.1j)
    assert projective_distance(evolve_amplitude(np.eye(2), 0, f0), f0) < 1e-15


def test_pure_measurement_collapses():
    lam = 0.3
    m = np.diag([math.exp(-lam), math.exp(lam)])
    for n in (1, 5, 20):
        f = to_complex(evolve_amplitude(m, n, amplitude(1.0)))
        assert f == pytest.approx(math.exp(-2 * n * lam), rel=1e-12)


def test_evolve_matches_sequential_application():
    rng = np.random.default_rng(11)
    p = VolumeParams(X8, 0.1)
    m = volume_matrix(1.4, p)  # critical momentum
    assert criticality_mask(m)[0]
    f0 = amplitude(rng.normal() + 1j * rng.normal())
    seq = f0
    for _ in range(7):
        seq = apply_mobius(m, seq)
    assert projective_distance(evolve_amplitude(m, 7, f0), seq) < 1e-10


def test_evolution_stays_finite_at_strong_measurement():
    p = VolumeParams(X8, 2.0)
    k = MomentumGrid(64).k
    f = evolve_amplitude(transfer_matrices(p, k), 10 ** 6)
    assert np.all(np.isfinite(f))
    assert np.allclose(np.abs(f).max(axis=-1), 1)


def test_antisymmetry_propagates():
    p = VolumeParams(0.3, 0.2)
    k = np.linspace(0.1, 3.0, 9)
    f0 = amplitude(0.3 + 0.4j)
    neg = amplitude(-(0.3 + 0.4j))
    plus = evolve_amplitude(transfer_matrices(p, k), 13, f0)
    minus = evolve_amplitude(transfer_matrices(p, -k), 13, neg)
    assert projective_distance(plus, minus * np.array([-1, 1])).max() < 1e-10


# -- closed form --------------------------------------------------------------

def test_closed_form_matches_matrix_power():
    p = VolumeParams(X8, 0.1)
    m = volume_matrix(math.pi / 2, p)
    assert projective_distance(closed_form_fn(math.pi / 2, 0, p), amplitude(0.0)) < 1e-15
    for n in range(1, 201):
        d = projective_distance(closed_form_fn(math.pi / 2, n, p), evolve_amplitude(m, n))
        assert d < 1e-9


def test_closed_form_near_poles():
    p = VolumeParams(X8, 0.1)
    win = critical_window(p)
    k = np.linspace(win.k_lo + 1e-3, win.k_hi - 1e-3, 400)
    worst = 0.0
    for n in range(1, 60):
        a = closed_form_fn(k, n, p)
        b = evolve_amplitude(volume_matrix(k, p), n)
        worst = max(worst, projective_distance(a, b).max())
    assert worst < 1e-9
    # Im a = -sin 4x / (1 + |z|^2) never vanishes, so this model has no poles;
    # the pole case is exercised with a hand-built critical matrix instead
    m = np.array([[0.0, 1.0], [-1.0, 0.0]])  # theta = pi/2, f_1 = b / (cos(theta) - a) = inf
    assert evolve_amplitude(m, 1)[1] == 0


def test_closed_form_rejects_non_critical():
    with pytest.raises(NotCritical):
        closed_form_fn(0.05, 3, VolumeParams(X8, 0.1))


# -- coefficients ---------------------------------------------------------------

def test_coefficients_of_vacuum_and_infinity():
    g = MomentumGrid(64)
    c = correlation_coefficients(amplitude(np.zeros(g.n)), g, 5)
    assert np.abs(c.phi).max() < 1e-15
    assert np.allclose(c.psi, -(np.arange(-5, 6) == 0).astype(float), atol=1e-15)
    c = correlation_coefficients(amplitude(np.full(g.n, np.inf)), g, 5)
    assert np.abs(c.phi).max() < 1e-15
    assert np.allclose(c.psi, (np.arange(-5, 6) == 0), atol=1e-15)


def test_coefficients_finite_n_regression():
    g = MomentumGrid(4096)
    p = VolumeParams(X8, 0.1)
    f = evolve_amplitude(transfer_matrices(p, g.k), 500)
    c = correlation_coefficients(f, g, 20)
    assert -1 < c.psi_at(0) < 1
    assert c.psi_at(0) == pytest.approx(PSI0_N500, abs=1e-10)
    assert np.allclose(c.phi, -c.phi[::-1], atol=1e-12)
    assert c.phi_at(0) == 0


def test_coefficients_match_direct_sum():
    g = MomentumGrid(128)
    f = evolve_amplitude(transfer_matrices(VolumeParams(0.3, 0.2), g.k), 17)
    c = correlation_coefficients(f, g, 6)
    ph, ps = symbol_values(f)
    for j in range(-6, 7):
        e = np.exp(-1j * g.k * j)
        assert c.phi_at(j) == pytest.approx((e @ ph).real / g.n, abs=1e-13)
        assert c.psi_at(j) == pytest.approx((e @ ps).real / g.n, abs=1e-13)


def test_asymmetric_amplitude_rejected():
    g = MomentumGrid(32)
    with pytest.raises(AsymmetryViolation):
        correlation_coefficients(amplitude(np.full(g.n, 0.5)), g, 3)


# -- averaged symbols -----------------------------------------------------------

def test_averaged_symbols_modulus():
    g = MomentumGrid(1024)
    sym = averaged_symbols(VolumeParams(X8, 0.1), g)
    nu = sym.modulus
    assert np.all(nu <= 1 + 1e-9)
    assert np.abs(nu[~sym.critical] - 1).max() < 1e-10
    assert np.all(nu[sym.critical] < 1 - 1e-6)
    assert np.allclose(sym.psi_hat[::-1], np.conj(sym.psi_hat), atol=1e-12)


def test_quadrature_and_closed_form_averages_agree():
    g = MomentumGrid(512)
    for src in (VolumeParams(X8, 0.1), VolumeParams(0.6, 0.02), LogLawParams(0.3, 0.2, 0.0)):
        a = averaged_symbols(src, g, method="quadrature")
        b = averaged_symbols(src, g, method="exact")
        assert np.abs(a.phi_hat - b.phi_hat).max() < 1e-10
        assert np.abs(a.psi_hat - b.psi_hat).max() < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(-2, 2), st.floats(-2, 2))
def test_closed_form_average_with_general_start(k, re, im):
    p = VolumeParams(0.3, 0.05)
    m = volume_matrix(np.array([k]), p)
    crit, theta = criticality_mask(m)
    if not crit[0] or np.sin(theta[0]) < 1e-3:
        return
    f0 = amplitude(np.array([re + 1j * im]))
    a = u_average(m, theta, f0, method="quadrature", n_u=4096)
    b = u_average(m, theta, f0, method="exact")
    assert abs(a[0] - b[0]).max() < 1e-8 and abs(a[1] - b[1]).max() < 1e-8


def test_general_round_symbols():
    rnd = [LayerSpec("ZZ", 0.4), LayerSpec("YY", 0.2), LayerSpec("X", 0.3 + 0.05j)]
    sym = averaged_symbols(rnd, MomentumGrid(256))
    assert np.all(sym.modulus <= 1 + 1e-9)
    assert np.allclose(sym.psi_hat[::-1], np.conj(sym.psi_hat), atol=1e-12)
    c = sym.coefficients(10)
    assert np.allclose(c.phi, -c.phi[::-1], atol=1e-12)


def test_quadrature_convergence_area_law():
    p = VolumeParams(X8, 0.6)
    a = averaged_symbols(p, MomentumGrid(2048)).coefficients(50)
    b = averaged_symbols(p, MomentumGrid(4096)).coefficients(50)
    assert np.abs(a.phi - b.phi).max() < 1e-8
    assert np.abs(a.psi - b.psi).max() < 1e-8


def test_time_average_approached():
    g = MomentumGrid(8192)
    p = VolumeParams(X8, 0.1)
    avg = averaged_symbols(p, g, method="exact").coefficients(20)
    m = transfer_matrices(p, g.k)

    def envelope(n0):
        errs = []
        for n in range(n0, n0 + 20):
            c = correlation_coefficients(evolve_amplitude(m, n), g, 20)
            errs.append(np.abs(c.phi - avg.phi).max())
        return max(errs)

    assert envelope(2000) < envelope(250)


# -- phase classification -------------------------------------------------------

def test_phase_area_above_lambda_c():
    assert classify_phase(VolumeParams(X8, 0.4), MomentumGrid(512)).kind == "AreaLaw"


def test_phase_volume_window_matches_closed_form():
    p = VolumeParams(X8, 0.1)
    phase = classify_phase(p, MomentumGrid(512))
    win = critical_window(p)
    assert phase.kind == "VolumeLaw"
    assert phase.window.k_lo == pytest.approx(win.k_lo, abs=1e-9)
    assert phase.window.k_hi == pytest.approx(win.k_hi, abs=1e-9)


def test_phase_full_at_zero_lambda():
    phase = classify_phase(VolumeParams(X8, 0.0), MomentumGrid(128))
    assert phase.kind == "VolumeLaw" and phase.window.kind == "full"


def test_phase_loglaw_momenta():
    p = LogLawParams(0.3, 0.2, 0.05)
    phase = classify_phase(p, MomentumGrid(1024))
    kc = loglaw_critical_momentum(0.3, 0.2)
    assert phase.kind == "LogLaw"
    assert np.allclose(sorted(phase.critical_momenta), [-kc, kc], atol=1e-9)


def test_phase_at_lambda_c_is_isolated_pair():
    x = X8
    phase = classify_phase(VolumeParams(x, lambda_c_volume(x) - 1e-12), MomentumGrid(1024))
    assert phase.kind == "LogLaw"
    assert np.allclose(phase.critical_momenta, [-math.pi / 2, math.pi / 2], atol=1e-6)
    phase = classify_phase(VolumeParams(x, lambda_c_volume(x) + 1e-6), MomentumGrid(1024))
    assert phase.kind == "AreaLaw"
