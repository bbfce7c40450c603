import math
from fractions import Fraction

import numpy as np
from pytest import fixture, mark, raises

from errors import CompatibilityViolation, DimensionMismatch, InvalidCoset
from lattice import CosetIndex
from restriction import (PHI_OMEGA_COMPATIBLE, PT_PHI_IDENTITY, as_prym_spec, build_embedding, coeffs_prym_eq6,
                         coeffs_thm2, coeffs_to_json, expand_sum, generate_instance, instance_from_json,
                         instance_to_json, minimal_delta, prym_coefficient, prym_matrices, prym_spec,
                         verify_expansion)
from theta import Characteristic, theta
from verifier import random_samples

INSTANCES = [
    dict(kind='prym', g=1, n=1),
    dict(kind='prym', g=1, n=2),
    dict(kind='prym', g=2, n=1),
    dict(kind='generic', n=1, g_tilde=2),
    dict(kind='generic', n=2, g_tilde=4),
]


def make_instance(params, seed=0):
    params = dict(params)
    return generate_instance(params.pop('n'), kind=params.pop('kind'), seed=seed, **params)


@fixture
def prym11():
    return generate_instance(1, kind='prym', g=1, seed=3)


def random_shift(rng, size):
    return rng.uniform(-0.5, 0.5, size) + 1j * rng.uniform(-0.2, 0.2, size)


# Embeddings

def test_identity_embedding():
    omega = np.array([[1.1j, 0.2], [0.2, 0.9j]])
    emb = build_embedding(omega, np.eye(2, dtype=int), np.eye(2, dtype=int), [1, 1])
    assert np.array_equal(emb.small_omega.omega, emb.big_omega.omega)


def test_identity_embedding_coefficient_is_one():
    omega = np.array([[1.1j, 0.2], [0.2, 0.9j]])
    emb = build_embedding(omega, np.eye(2, dtype=int), np.eye(2, dtype=int), [1, 1])
    coeffs = coeffs_thm2(emb, np.zeros(2))
    assert len(coeffs) == 1
    assert coeffs[(0, 0)].value == 1


def test_identity_embedding_expansion_exact():
    omega = np.array([[1.1j, 0.2], [0.2, 0.9j]])
    emb = build_embedding(omega, np.eye(2, dtype=int), np.eye(2, dtype=int), [1, 1])
    check = verify_expansion(emb, [0.1 + 0.05j, -0.3], [0.2, 0.1 - 0.1j])
    assert check.rel_err <= 1e-12


def test_prym_embedding_accepted(prym11):
    phi, p, delta = prym_matrices(1, 1)
    emb = build_embedding(prym11.big_omega, phi, p, delta)
    assert emb.delta == (2, 1)
    assert emb.violations == ()


def test_doubled_p_rejected(prym11):
    phi, p, delta = prym_matrices(1, 1)
    with raises(CompatibilityViolation) as e:
        build_embedding(prym11.big_omega, phi, 2 * p, delta)
    assert e.value.condition == PT_PHI_IDENTITY


def test_non_integral_phi_delta_rejected(prym11):
    phi, p, _ = prym_matrices(1, 1)
    with raises(CompatibilityViolation):
        build_embedding(prym11.big_omega, phi, p, (1, 1))


def test_incompatible_omega(prym11):
    big = prym11.big_omega.omega.copy()
    big[0, 0] += 1e-3
    phi, p, delta = prym_matrices(1, 1)
    with raises(CompatibilityViolation) as e:
        build_embedding(big, phi, p, delta)
    assert e.value.condition == PHI_OMEGA_COMPATIBLE
    emb = build_embedding(big, phi, p, delta, strict=False)
    assert emb.violations == (PHI_OMEGA_COMPATIBLE,)


def test_prym_matrices():
    phi, p, delta = prym_matrices(2, 1)
    assert delta == (2, 2, 1)
    assert phi[0][0] == Fraction(1, 2) and phi[3][0] == Fraction(1, 2)
    assert phi[2][2] == 1
    assert p.T.tolist() == [[1, 0, 0, 1, 0], [0, 1, 0, 0, 1], [0, 0, 1, 0, 0]]


def test_prym_spec_wrong_size(prym11):
    with raises(DimensionMismatch):
        prym_spec(prym11.big_omega, 1, 2)


def test_minimal_delta():
    phi = [[Fraction(1, 2), 0], [0, Fraction(1, 3)], [Fraction(1, 2), Fraction(2, 3)]]
    assert minimal_delta(phi) == (2, 3)


# Instance generation

@mark.parametrize("params", INSTANCES)
def test_generated_instances_are_admissible(params):
    emb = make_instance(params, seed=1)
    assert emb.violations == ()
    again = build_embedding(emb.big_omega.omega, emb.phi, emb.p, emb.delta)
    assert again.small_omega.dim == emb.n


def test_generation_is_deterministic():
    a = generate_instance(2, kind='prym', g=1, seed=5)
    b = generate_instance(2, kind='prym', g=1, seed=5)
    assert np.array_equal(a.big_omega.omega, b.big_omega.omega)


def test_generation_rejects_bad_sizes():
    with raises(ValueError):
        generate_instance(0, kind='prym', g=1)
    with raises(ValueError):
        generate_instance(1, g_tilde=1, kind='generic')
    with raises(ValueError):
        generate_instance(1, g_tilde=5, kind='prym', g=1)
    with raises(ValueError):
        generate_instance(1, g_tilde=3, kind='other')


@mark.parametrize("g n".split(), [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1)])
def test_prym_instance_dimensions(g, n):
    emb = generate_instance(n, kind='prym', g=g, seed=7)
    assert emb.big_omega.dim == 2 * g + n
    assert emb.small_omega.dim == g + n
    assert emb.delta == (2,) * g + (1,) * n
    assert emb.prym_shape == (g, n)
    assert emb.violations == ()


@mark.parametrize("phi p".split(), [
    ([[Fraction(1, 3)], [Fraction(1, 3)], [Fraction(1, 3)]], [[1], [1], [1]]),
    ([[Fraction(1, 2), 0], [Fraction(1, 2), 0], [0, Fraction(1, 3)], [0, Fraction(1, 3)], [0, Fraction(1, 3)]],
     [[1, 0], [1, 0], [0, 1], [0, 1], [0, 1]]),
])
def test_generic_instance_with_rational_phi(phi, p):
    n, g_tilde = len(phi[0]), len(phi)
    emb = generate_instance(n, g_tilde=g_tilde, kind='generic', seed=4, phi=phi, p=p)
    assert emb.delta == minimal_delta(phi)
    assert emb.delta != (1,) * n
    for z, gamma in random_samples(emb, 2, seed=4):
        assert verify_expansion(emb, gamma, z).passed(1e-8)


def test_instance_json_round_trip(prym11):
    obj = instance_to_json(prym11)
    assert obj['g'] == 1 and obj['n'] == 1
    back = instance_from_json(obj)
    assert np.array_equal(back.big_omega.omega, prym11.big_omega.omega)
    assert back.phi == prym11.phi
    assert back.delta == prym11.delta
    assert back.prym_shape == (1, 1)


def test_instance_json_missing_field(prym11):
    obj = instance_to_json(prym11)
    del obj['delta']
    with raises(ValueError, match='delta'):
        instance_from_json(obj)


# Coefficients

def test_prym_coefficient_direct_sum(prym11):
    spec = as_prym_spec(prym11)
    om = spec.big_omega.omega
    c0 = prym_coefficient(spec, np.zeros(3), (0, 0), tol=1e-13)
    direct = 0j
    for m in range(-10, 11):
        v = np.array([m, 0, -m], dtype=float)
        direct += np.exp(1j * math.pi * (v @ om @ v))
    assert abs(c0.value - direct) <= 1e-11 * abs(direct)


def test_prym_coefficient_rejects_index():
    spec = as_prym_spec(generate_instance(1, kind='prym', g=1, seed=0))
    with raises(InvalidCoset):
        prym_coefficient(spec, np.zeros(3), (0, 1))
    with raises(InvalidCoset):
        prym_coefficient(spec, np.zeros(3), (1,))


@mark.parametrize("g n seed".split(), [(1, 1, 0), (1, 2, 1), (2, 1, 2), (2, 2, 3)])
def test_coefficient_paths_agree(g, n, seed):
    emb = generate_instance(n, kind='prym', g=g, seed=seed)
    gamma = random_shift(np.random.default_rng(seed), 2 * g + n)
    general = coeffs_thm2(emb, gamma, tol=1e-12)
    direct = coeffs_prym_eq6(as_prym_spec(emb), gamma, tol=1e-12)
    assert len(direct) == 2 ** g
    for eps, c in direct.items():
        ref = general[eps].value
        assert abs(c.value - ref) <= 1e-9 * max(abs(ref), general[eps].scale)


def test_coefficients_under_lattice_shift(prym11):
    rng = np.random.default_rng(11)
    gamma = random_shift(rng, 3)
    lam = np.array([1, -2, 1])
    base = coeffs_thm2(prym11, gamma, tol=1e-12)
    shifted = coeffs_thm2(prym11, gamma + lam, tol=1e-12)
    pt_lam = prym11.p.T @ lam
    for eps, c in base.items():
        e = np.array([float(x) for x in eps.fraction])
        factor = np.exp(2j * math.pi * (e @ pt_lam))
        assert abs(shifted[eps].value - factor * c.value) <= 1e-10 * c.scale

    z = random_shift(rng, 2)
    assert verify_expansion(prym11, gamma + lam, z, coeffs=shifted).rel_err <= 1e-8


@mark.parametrize("lam", [[1, 0, 0], [0, -1, 1], [1, 1, -1]])
def test_expansion_under_period_shift(prym11, lam):
    rng = np.random.default_rng(12)
    gamma = random_shift(rng, 3)
    z = random_shift(rng, 2)
    lam = np.array(lam)
    big = prym11.big_omega.omega
    base = verify_expansion(prym11, gamma, z)
    shifted = verify_expansion(prym11, gamma + big @ lam, z)
    assert shifted.rel_err <= 1e-8
    # theta(w - Omega lam) = exp(-pi i lam Omega lam + 2 pi i lam w) theta(w)
    w = prym11.phi_float @ z - gamma
    factor = np.exp(-1j * math.pi * (lam @ big @ lam) + 2j * math.pi * (lam @ w))
    assert abs(shifted.lhs.value - factor * base.lhs.value) <= 1e-9 * abs(factor) * base.lhs.scale


def test_coefficient_of_empty_lattice_is_zero():
    # Delta Phi^T = (2, 0) never reaches eps = 1
    omega = np.array([[1.2j, 0.0], [0.0, 1.1j]])
    emb = build_embedding(omega, [[1], [0]], [[1], [0]], [2])
    c = coeffs_thm2(emb, np.zeros(2), tol=1e-13)
    assert c[(1,)].value == 0
    assert c[(1,)].tail_bound == 0
    direct = math.fsum(math.exp(-1.1 * math.pi * m * m) for m in range(-10, 11))
    assert abs(c[(0,)].value - direct) <= 1e-11 * direct


def test_coeffs_json(prym11):
    coeffs = coeffs_thm2(prym11, np.zeros(3))
    obj = coeffs_to_json(coeffs)
    assert obj['delta'] == [2, 1]
    assert set(obj['coeffs']) == {'0,0', '1,0'}
    assert all(len(v) == 3 for v in obj['coeffs'].values())


def test_coeff_vector_lookup(prym11):
    coeffs = coeffs_thm2(prym11, np.zeros(3))
    eps = CosetIndex(delta=(2, 1), rep=(1, 0))
    assert coeffs[eps] is coeffs[(1, 0)]


# The expansion identity

@mark.parametrize("params", INSTANCES)
def test_expansion_identity(params):
    emb = make_instance(params, seed=2)
    for z, gamma in random_samples(emb, 3, seed=2):
        check = verify_expansion(emb, gamma, z)
        assert check.passed(1e-8), check.rel_err


def test_expansion_negative_control(prym11):
    big = prym11.big_omega.omega.copy()
    big[0, 0] += 1e-3
    phi, p, delta = prym_matrices(1, 1)
    emb = build_embedding(big, phi, p, delta, strict=False, prym_shape=(1, 1))
    rng = np.random.default_rng(4)
    check = verify_expansion(emb, random_shift(rng, 3), random_shift(rng, 2))
    assert check.rel_err > 1e-5


def test_expand_sum_matches_single_theta():
    omega = np.array([[1.1j, 0.2], [0.2, 0.9j]])
    emb = build_embedding(omega, np.eye(2, dtype=int), np.eye(2, dtype=int), [1, 1])
    coeffs = coeffs_thm2(emb, np.zeros(2))
    z = np.array([0.1, 0.2j])
    total = expand_sum(coeffs, emb.small_omega, z)
    assert total.value == theta(Characteristic.zero(2), z, emb.small_omega).value


def test_verify_expansion_dimension_checks(prym11):
    with raises(DimensionMismatch):
        verify_expansion(prym11, np.zeros(2), np.zeros(2))
    with raises(DimensionMismatch):
        verify_expansion(prym11, np.zeros(3), np.zeros(3))


@mark.slow
@mark.parametrize("params", INSTANCES)
@mark.parametrize("seed", range(10))
def test_expansion_identity_acceptance(params, seed):
    emb = make_instance(params, seed=seed)
    for z, gamma in random_samples(emb, 5, seed=seed):
        assert verify_expansion(emb, gamma, z).passed(1e-8)
