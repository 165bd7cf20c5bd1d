import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mobius_circuits.errors import DegenerateMap, NormalizationSingular
from mobius_circuits.mobius import (
    Critical,
    LayerSpec,
    NonCritical,
    amplitude,
    apply_mobius,
    classify_momentum,
    compose_round,
    criticality_mask,
    fixed_points,
    layer_mobius,
    matrix_power,
    normalize_det,
    projective_distance,
    to_complex,
)
from mobius_circuits.models import LogLawParams, cycle_spec, loglaw_matrix


def det(m):
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def same_up_to_sign(a, b, atol=1e-12):
    return min(np.abs(a - b).max(), np.abs(a + b).max()) < atol


def acts_like(m, fn, samples=(0.3 + 0.2j, -1.1 + 0.4j, 2.5j)):
    for f in samples:
        got = to_complex(apply_mobius(m, amplitude(f)))
        assert abs(got - fn(f)) < 1e-12 * max(1, abs(fn(f)))


def test_x_quarter_turn_flips_sign():
    for k in (0.3, 1.7, -2.9):
        m = layer_mobius(LayerSpec("X", math.pi / 4), k)
        assert same_up_to_sign(m, np.diag([1j, -1j]))
        acts_like(m, lambda f: -f)


def test_zz_zero_time_is_identity():
    for k in (0.4, 2.0, math.pi):
        assert same_up_to_sign(layer_mobius(LayerSpec("ZZ", 0.0), k), np.eye(2))


def test_zz_quarter_turn_at_half_pi_inverts():
    m = layer_mobius(LayerSpec("ZZ", math.pi / 4), math.pi / 2)
    acts_like(m, lambda f: -1 / f)


def test_layer_kind_validated():
    with pytest.raises(ValueError):
        LayerSpec("ZX", 0.1)


def test_singular_layer_detected():
    with pytest.raises(NormalizationSingular):
        normalize_det(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_regularized_layer_matches_tangent_form():
    # f -> (f + i tan(k/2) (1 - e)) / (... ) written with tan(k/2), away from k = pi
    k, t = 1.1, 0.37
    tk, e = math.tan(k / 2), np.exp(4j * t)
    raw = np.array([[1 + tk * tk * e, 1j * tk * (1 - e)], [-1j * tk * (1 - e), tk * tk + e]])
    assert same_up_to_sign(layer_mobius(LayerSpec("ZZ", t), k), normalize_det(raw))


def test_inverse_layers_compose_to_identity():
    m = compose_round([LayerSpec("X", 0.3), LayerSpec("X", -0.3)], np.linspace(-3, 3, 7))
    for mm in m:
        assert same_up_to_sign(mm, np.eye(2))


def test_single_layer_round():
    layer = LayerSpec("YY", 0.2 + 0.1j)
    assert same_up_to_sign(compose_round([layer], 0.8), layer_mobius(layer, 0.8))


def test_cycle_matches_closed_form():
    p = LogLawParams(0.3, 0.2, 0.1)
    assert same_up_to_sign(compose_round(cycle_spec(p.t, p.h, p.lam), 1.0), loglaw_matrix(1.0, p))


def test_empty_round_rejected():
    with pytest.raises(ValueError):
        compose_round([], 0.1)


def test_apply_mobius_examples():
    f = amplitude(0.3 + 0.2j)
    assert projective_distance(apply_mobius(np.eye(2), f), f) < 1e-15
    m = normalize_det(np.array([[1 + 1j, 2.0], [0.5, 3 - 1j]]))
    pole = -m[1, 1] / m[1, 0]
    assert abs(apply_mobius(m, amplitude(pole))[1]) < 1e-15
    assert abs(to_complex(apply_mobius(m, amplitude(0))) - m[0, 1] / m[1, 1]) < 1e-14


def test_amplitude_normalized_and_infinity():
    v = amplitude(np.array([1e200, np.inf, 0.0]))
    assert np.allclose(np.abs(v).max(axis=-1), 1)
    assert v[1, 1] == 0
    with pytest.raises(ValueError):
        apply_mobius(np.zeros((2, 2)), amplitude(1.0))


def test_fixed_points_diagonal():
    mu = 0.5
    fp = fixed_points(np.diag([1 / mu, mu]))
    assert abs(fp.f_minus[1]) == 0  # infinity attracts under f -> f / mu^2
    fp = fixed_points(np.diag([mu, 1 / mu]))
    assert abs(to_complex(fp.f_minus)) < 1e-15
    assert fp.f_plus[1] == 0
    assert fp.contraction == pytest.approx(mu * mu)


def test_fixed_points_parabolic():
    fp = fixed_points(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert fp.f_minus[1] == 0 and fp.f_plus[1] == 0
    assert fp.contraction == 1.0


def test_fixed_points_identity_degenerate():
    with pytest.raises(DegenerateMap):
        fixed_points(np.eye(2))
    with pytest.raises(DegenerateMap):
        fixed_points(-np.eye(2))


def test_classify_examples():
    u = np.array([[np.cos(0.4), np.sin(0.4)], [-np.sin(0.4), np.cos(0.4)]])
    assert isinstance(classify_momentum(u), Critical)
    res = classify_momentum(np.diag([2.0, 0.5]))
    assert isinstance(res, NonCritical)
    assert res.contraction == pytest.approx(0.25)
    with pytest.raises(ValueError):
        classify_momentum(np.diag([2.0, 2.0]))


def test_parabolic_is_critical_with_zero_angle():
    res = classify_momentum(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert isinstance(res, Critical) and res.theta == 0.0


# -- properties ---------------------------------------------------------------

kinds = st.sampled_from(["ZZ", "YY", "X"])
times = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False).filter(
    lambda z: abs(z.imag) <= 2)
layers = st.builds(LayerSpec, kinds, times)
momenta = st.floats(-3.1, 3.1).filter(lambda k: abs(k) > 1e-3)


@settings(max_examples=60, deadline=None)
@given(st.lists(layers, min_size=1, max_size=20), momenta)
def test_round_has_unit_determinant(rnd, k):
    try:
        m = compose_round(rnd, k)
    except NormalizationSingular:
        return
    # ad - bc cannot be evaluated better than eps |a| |d| in double precision
    scale = max(1.0, float(np.abs(m).max()) ** 2)
    assert abs(det(m) - 1) < 1e-10 * scale
    assert np.all(np.isfinite(m))


@settings(max_examples=60, deadline=None)
@given(st.lists(layers, min_size=2, max_size=6), momenta,
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_projective_composition(rnd, k, f):
    try:
        m1, m2 = compose_round(rnd[:1], k), compose_round(rnd[1:], k)
    except NormalizationSingular:
        return
    v = amplitude(f)
    seq = apply_mobius(m2, apply_mobius(m1, v))
    assert projective_distance(seq, apply_mobius(m2 @ m1, v)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.lists(st.builds(LayerSpec, kinds, st.floats(-3, 3)), min_size=1, max_size=12), momenta)
def test_real_times_are_unitary(rnd, k):
    m = compose_round(rnd, k)
    assert np.abs(m.conj().T @ m - np.eye(2)).max() < 1e-10
    assert isinstance(classify_momentum(m), Critical)


def _random_sl2(rng):
    while True:
        v = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        if abs(np.linalg.det(v)) > 0.1:
            return v / np.sqrt(np.linalg.det(v))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.2, 5.0), st.floats(0, 2 * math.pi))
def test_fixed_points_are_fixed(seed, rho, alpha):
    rng = np.random.default_rng(seed)
    v = _random_sl2(rng)
    if abs(rho - 1) < 1e-3:
        return
    m = v @ np.diag([rho * np.exp(1j * alpha), np.exp(-1j * alpha) / rho]) @ np.linalg.inv(v)
    fp = fixed_points(m)
    for pt in (fp.f_minus, fp.f_plus):
        assert projective_distance(apply_mobius(m, pt), pt) < 1e-9
    assert fp.contraction == pytest.approx(min(rho, 1 / rho) ** 2, rel=1e-8)
    # the stable point attracts a generic start
    start = amplitude(0.123 + 0.456j)
    n = math.ceil(30 / -math.log(fp.contraction))  # contraction^n ~ 1e-13
    assert projective_distance(apply_mobius(matrix_power(m, n), start), fp.f_minus) < 1e-8


def test_fixed_points_volume_example():
    from mobius_circuits.models import VolumeParams, volume_matrix

    m = volume_matrix(1.0, VolumeParams(math.pi / 8, 0.6))
    fp = fixed_points(m)
    assert fp.contraction < 1
    assert projective_distance(fp.f_minus, fp.f_plus) > 1e-3
    for pt in fp[:2]:
        assert projective_distance(apply_mobius(m, pt), pt) < 1e-10


def test_matrix_power_matches_repeated_application():
    rng = np.random.default_rng(1)
    m = _random_sl2(rng)
    v = amplitude(0.7 - 0.2j)
    seq = v
    for _ in range(13):
        seq = apply_mobius(m, seq)
    assert projective_distance(apply_mobius(matrix_power(m, 13), v), seq) < 1e-10
