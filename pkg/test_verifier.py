import numpy as np
from pytest import fixture

import verifier
from errors import NearThetaZero
from restriction import build_embedding, generate_instance, prym_matrices
from verifier import (random_samples, results_frame, run_ckp_comparison, run_coefficient_crosscheck,
                      run_expansion_check, seeded_flow_data)


@fixture
def prym11():
    return generate_instance(1, kind='prym', g=1, seed=7)


def test_random_samples(prym11):
    first = random_samples(prym11, 4, seed=1)
    second = random_samples(prym11, 4, seed=1)
    assert len(first) == 4
    for (z1, g1), (z2, g2) in zip(first, second):
        assert np.array_equal(z1, z2) and np.array_equal(g1, g2)
    z, gamma = first[0]
    assert z.shape == (2,) and gamma.shape == (3,)
    assert np.all(np.abs(gamma.real) <= 0.5) and np.all(np.abs(gamma.imag) <= 0.2)


def test_expansion_check_passes(prym11):
    results = run_expansion_check(prym11, samples=3, seed=2)
    summary = results['summary']
    assert len(results['rows']) == 3
    assert summary['passed'] and summary['failures'] == 0
    assert summary['max_rel_err'] <= 1e-8
    assert summary['kind'] == 'prym' and summary['n'] == 2 and summary['g_tilde'] == 3
    assert summary['coefficient_max_rel_err'] <= 1e-9


def test_expansion_check_detects_perturbation(prym11):
    big = prym11.big_omega.omega.copy()
    big[0, 0] += 1e-3
    phi, p, delta = prym_matrices(1, 1)
    emb = build_embedding(big, phi, p, delta, strict=False)
    summary = run_expansion_check(emb, samples=3, seed=2)['summary']
    assert not summary['passed']
    assert summary['failures'] > 0
    assert 'coefficient_max_rel_err' not in summary


def test_coefficient_crosscheck(prym11):
    results = run_coefficient_crosscheck(prym11, np.array([0.1 + 0.05j, -0.2, 0.3 - 0.1j]))
    assert results['summary']['cosets'] == 2
    assert results['summary']['max_rel_err'] <= 1e-9
    assert [r['eps'] for r in results['rows']] == [[0, 0], [1, 0]]


def test_ckp_comparison():
    data = seeded_flow_data(1, 1, seed=0, instances=2)
    summary = run_ckp_comparison(data)['summary']
    assert summary['instances'] == 2
    assert summary['evaluated'] + summary['skipped'] == 2
    assert summary['failures'] == 0
    assert summary['max_rel_err'] <= 1e-7


def test_ckp_comparison_skips_theta_zeros(monkeypatch):
    def at_zero(data, tol=None):
        raise NearThetaZero("theta vanishes")

    monkeypatch.setattr(verifier, 'ckp_v_jacobi', at_zero)
    results = run_ckp_comparison(seeded_flow_data(1, 1, instances=1))
    summary = results['summary']
    assert summary['skipped'] == 1 and summary['skip_rate'] == 1.0
    assert not summary['passed']
    assert results['rows'][0]['skipped'] == 'NearThetaZero'


def test_results_frame(prym11):
    rows = run_expansion_check(prym11, samples=2)['rows']
    frame = results_frame(rows)
    assert len(frame) == 2
    assert {'lhs_re', 'lhs_im', 'rhs_re', 'rhs_im', 'rel_err', 'passed'} <= set(frame.columns)
    assert isinstance(frame['z'][0], str)
