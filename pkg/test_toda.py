import numpy as np
from pytest import fixture, mark, raises, warns

from config import DEFAULT_SETTINGS
from errors import DegenerateDiscriminant, InvalidState, MuZero, TrajectoryBlowUp
from toda import (CARTAN, TRAJECTORY_COLUMNS, TodaState, build_lax, characteristic_fit, eigenvalue_drift,
                  integrate_lax_matrix, lax_parameters, lax_self_test, simulate, spectral_coeffs,
                  spectral_coeffs_from_matrices, spectral_curve_fixed_points, spectral_invariants, toda_integrate,
                  toda_rhs, trajectory_frame)


@fixture
def s0():
    return TodaState(x=DEFAULT_SETTINGS['toda_x0'], y=DEFAULT_SETTINGS['toda_y0'])


def random_state(seed):
    rng = np.random.default_rng(seed)
    return TodaState(x=rng.uniform(0.5, 2.0, 3), y=rng.uniform(-1.0, 1.0, 3))


# State and right-hand side

def test_rhs_at_rest():
    dx, dy = toda_rhs(TodaState(x=[1, 1, 1], y=[0, 0, 0]))
    assert dx.tolist() == [0, 0, 0]
    assert dy.tolist() == [1, -2, 1]


def test_rhs_unit_velocity():
    dx, dy = toda_rhs(TodaState(x=[1, 2, 3], y=[1, 1, 1]))
    assert dx.tolist() == [1, 2, 3]
    assert dy.tolist() == (CARTAN @ [1, 2, 3]).tolist()


@mark.parametrize("x y".split(), [
    ([0, 1, 1], [0, 0, 0]),
    ([-1, 1, 1], [0, 0, 0]),
    ([1, 1], [0, 0, 0]),
    ([1, 1, 1], [0, np.nan, 0]),
])
def test_invalid_state(x, y):
    with raises(InvalidState):
        TodaState(x=x, y=y)


def test_state_vector_round_trip():
    s = TodaState(x=[1, 2, 3], y=[-1, 0, 1], t=0.5)
    back = TodaState.from_vector(s.vector(), t=s.t)
    assert np.array_equal(back.x, s.x) and np.array_equal(back.y, s.y)


# Lax matrices

def test_lax_parameters_at_unit_state():
    a1, a2, a3, b1, b2, b3 = lax_parameters([1, 1, 1], [0, 0, 0])
    assert a1 == a2 == a3 == 0.5j
    assert b1 == b2 == b3 == 0


def test_lax_entries():
    s = TodaState(x=[1, 4, 9], y=[1, 2, 3])
    a, b = build_lax(s, 2.0)
    assert a[0, 1] == 0.5j * 2
    assert a[2, 0] == 2.0 * 0.5j * 1
    assert a[0, 4] == 0.5j * 3
    assert a[6, 6] == -(1 + 3) / 4
    assert b.shape == (7, 7)
    assert np.allclose(np.diag(b), 0)


def test_lax_mu_zero():
    with raises(MuZero):
        build_lax(TodaState(x=[1, 1, 1], y=[0, 0, 0]), 0)


@mark.parametrize("seed", range(5))
def test_spectrum_is_symmetric(seed):
    a, _ = build_lax(random_state(seed), 1.3)
    eig = np.linalg.eigvals(a)
    assert eigenvalue_drift(eig, -eig) < 1e-8
    assert np.min(np.abs(eig)) < 1e-8


def test_characteristic_fit_leading_term():
    a, _ = build_lax(random_state(1), 1.0)
    coeffs, residual = characteristic_fit(a)
    assert abs(coeffs[6] + 1) < 1e-10
    assert residual < 1e-10
    assert np.max(np.abs(coeffs[[1, 3, 5]])) < 1e-9


def test_lax_self_test_reports():
    result = lax_self_test((1.0, -1.0), seed=3, samples=2)
    assert len(result.residuals) == 4
    assert result.max_residual == max(result.residuals)
    assert result.passed == (result.max_residual <= 1e-6)


# Spectral invariants

@mark.parametrize("seed", range(3))
def test_invariants_do_not_depend_on_mu_pair(seed):
    s = random_state(seed)
    h1 = spectral_coeffs(s, (1.0, -1.0)).h
    h2 = spectral_coeffs(s, (2.0, -1.0)).h
    assert np.allclose(h1, h2, rtol=1e-7, atol=1e-9)


def test_characteristic_polynomial_depends_on_mu_plus_inverse():
    s = random_state(4)
    two, _ = characteristic_fit(build_lax(s, 2.0)[0])
    half, _ = characteristic_fit(build_lax(s, 0.5)[0])
    assert np.allclose(two, half, rtol=0, atol=1e-8 * max(1.0, np.max(np.abs(two))))


def test_spectral_coeffs_need_distinct_mu():
    s = random_state(0)
    with raises(ValueError):
        spectral_coeffs(s, (2.0, 0.5))
    with raises(ValueError):
        spectral_coeffs_from_matrices([build_lax(s, 1.0)[0]], (1.0,))


def test_spectral_invariants_length():
    assert spectral_invariants([1, 2, 3, 4]) == (1.0, 2.0, 3.0, 4.0)
    with raises(ValueError):
        spectral_invariants([1, 2, 3])


@mark.parametrize("seed", range(3))
def test_fixed_points(seed):
    c = spectral_coeffs(random_state(seed))
    report = spectral_curve_fixed_points(c)
    assert len(report.tau_plus) == 6 and len(report.tau_minus) == 6
    assert all(r <= 1e-10 for r in report.residuals.values())
    if len(report.sigma_mu) == 2:
        assert abs(report.sigma_mu[0] * report.sigma_mu[1] - 1) < 1e-9
    obj = report.to_json()
    assert set(obj) == {'tau_plus', 'tau_minus', 'sigma_mu', 'residuals', 'degenerate'}


def test_fixed_points_tau_polynomials():
    c1, c2, c3, c4 = 0.7, -1.2, 0.4, 0.3
    report = spectral_curve_fixed_points((c1, c2, c3, c4))
    for lam in report.tau_plus:
        assert abs(lam ** 6 + c2 * lam ** 4 + c3 * lam ** 2 + c4 - 2 * c1) < 1e-9
    for lam in report.tau_minus:
        assert abs(lam ** 6 + c2 * lam ** 4 + c3 * lam ** 2 + c4 + 2 * c1) < 1e-9
    assert np.allclose(sorted(abs(m) for m in report.sigma_mu), sorted(abs(np.roots([c1, -c4, c1]))), rtol=0,
                       atol=1e-12)


def test_degenerate_curve_warns():
    with warns(DegenerateDiscriminant):
        report = spectral_curve_fixed_points((0.0, -1.0, 0.5, 0.2))
    assert report.degenerate
    assert len(report.sigma_mu) == 0


# Integration

def test_taylor_start(s0):
    t = 1e-3
    end = toda_integrate(s0, t, rtol=1e-12, samples=2)[-1]
    assert np.allclose(end.y, s0.y + CARTAN @ s0.x * t, atol=1e-5)
    assert np.allclose(end.x, s0.x + s0.x * s0.y * t, atol=1e-5)


def test_time_reversal(s0):
    forward = toda_integrate(s0, 0.5, rtol=1e-12, samples=3)
    back = toda_integrate(forward[-1], 0.0, rtol=1e-12, samples=3)
    assert back[-1].t == 0.0
    assert np.allclose(back[-1].vector(), s0.vector(), atol=1e-8)


def test_integrate_samples(s0):
    states = toda_integrate(s0, 1.0, samples=11)
    assert len(states) == 11
    assert states[0].t == 0.0 and states[-1].t == 1.0
    assert all(np.all(s.x > 0) for s in states)


def test_integrate_rtol_range(s0):
    with raises(ValueError):
        toda_integrate(s0, 1.0, rtol=1e-2)
    with raises(ValueError):
        toda_integrate(s0, 1.0, rtol=1e-15)


def test_blow_up(s0):
    # x reaches the positivity floor just before y escapes
    with raises(TrajectoryBlowUp, match=r"t = 1\.7"):
        toda_integrate(s0, 10.0, rtol=1e-8)


def test_regular_stretch_before_blow_up(s0):
    end = toda_integrate(s0, 1.7, rtol=1e-10, samples=2)[-1]
    assert np.all(end.x > 0)


def test_matrix_flow_is_isospectral(s0):
    mu = complex(*DEFAULT_SETTINGS['isospectral_mu'])
    times, mats = integrate_lax_matrix(s0, (mu,), 0.5, rtol=1e-11, samples=6)
    assert len(times) == len(mats) == 6
    reference = np.linalg.eigvals(mats[0][0])
    assert np.allclose(mats[0][0], build_lax(s0, mu)[0])
    assert max(eigenvalue_drift(reference, np.linalg.eigvals(m[0])) for m in mats) < 1e-7


def test_eigenvalue_drift_matches_permutation():
    values = np.array([1.0, -2.0 + 1j, 0.5j])
    assert eigenvalue_drift(values, values[[2, 0, 1]]) == 0


# Simulation

def test_simulate_matrix_mode(s0):
    run = simulate(s0, 1.0, rtol=1e-10, samples=11, mode='matrix')
    assert run.report['mode'] == 'matrix'
    assert len(run.trajectory) == 11
    assert run.passed()
    assert run.report['isospectral_drift'] < 1e-6
    assert run.report['max_drift'] == run.report['matrix_drift']


def test_simulate_auto_mode_follows_self_test(s0):
    run = simulate(s0, 0.5, rtol=1e-10, samples=5)
    expected = 'state' if lax_self_test(tuple(DEFAULT_SETTINGS['lax_mus'])).passed else 'matrix'
    assert run.report['mode'] == expected


def test_simulate_unknown_mode(s0):
    with raises(ValueError):
        simulate(s0, 0.5, mode='other')


def test_trajectory_frame(s0):
    run = simulate(s0, 0.5, rtol=1e-10, samples=4, mode='matrix')
    frame = trajectory_frame(run.trajectory)
    assert list(frame.columns) == TRAJECTORY_COLUMNS
    assert len(frame) == 4
    assert not frame.isna().any().any()


def test_trajectory_frame_without_h(s0):
    frame = trajectory_frame(toda_integrate(s0, 0.5, samples=3))
    assert frame['H1'].isna().all()


@mark.slow
@mark.parametrize("rtol", [1e-10, 1e-12])
def test_conservation_acceptance(s0, rtol):
    run = simulate(s0, 1.0, rtol=rtol, samples=101, mode='matrix')
    assert run.passed()
