"""Toda chain of type g2(1).

State (X, Y) in R^3 x R^3 with x > 0 evolving by

    dY/dt = C X,    dx_i/dt = x_i y_i,

C the Cartan matrix [[2, -1, 0], [-1, 2, -3], [0, -1, 2]]. The 7x7 Lax matrices A_mu, B_mu are built
from a_1 = (i/2) sqrt(x_3), a_2 = (i/2) sqrt(x_2), a_3 = (i/2) sqrt(x_1) and
b_1 = (y_1 + y_3)/4, b_2 = (y_1 - 2 y_2 + y_3)/4, b_3 = (3 y_1 + y_3)/4. The characteristic polynomial

    det(A_mu - lambda I) = lambda (H_1 (mu + 1/mu) - lambda^6 - H_2 lambda^4 - H_3 lambda^2 - H_4)

supplies the spectral invariants H_1..H_4.
"""

import functools
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp
from scipy.optimize import linear_sum_assignment

from config import DEFAULT_SETTINGS, RTOL_RANGE
from errors import (DegenerateDiscriminant, FitResidualTooLarge, InvalidState, MuZero, PositivityLost,
                    TrajectoryBlowUp)

logger = logging.getLogger(__name__)

CARTAN = np.array([[2.0, -1.0, 0.0],
                   [-1.0, 2.0, -3.0],
                   [0.0, -1.0, 2.0]])

SQRT2 = math.sqrt(2.0)
POSITIVITY_FLOOR = 1e-12
BLOW_UP_LEVEL = 1e8
FIT_RESIDUAL_LIMIT = 1e-8
LAX_RESIDUAL_LIMIT = 1e-6
ROOT_SEPARATION = 1e-8
TRAJECTORY_COLUMNS = ['t', 'x1', 'x2', 'x3', 'y1', 'y2', 'y3', 'H1', 'H2', 'H3', 'H4']


@dataclass(frozen=True)
class TodaState:
    """Point (X, Y) of the chain at time t

    Attributes:
        x (numpy.ndarray): Positive 3-vector
        y (numpy.ndarray): Real 3-vector
        t (float): Time
        h (numpy.ndarray): Spectral invariants H_1..H_4 at this state, when computed
    """
    x: np.ndarray
    y: np.ndarray
    t: float = 0.0
    h: object = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != (3,) or y.shape != (3,):
            raise InvalidState(f"X and Y must have three entries, got {x.shape[0]} and {y.shape[0]}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidState("State must be finite")
        if np.any(x <= 0):
            raise InvalidState(f"X must be componentwise positive, got {x.tolist()}")
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'y', y)
        object.__setattr__(self, 't', float(self.t))

    @classmethod
    def from_vector(cls, u, t=0.0, h=None):
        u = np.asarray(u, dtype=float)
        return cls(x=u[:3], y=u[3:6], t=t, h=h)

    def vector(self):
        return np.concatenate([self.x, self.y])

    def with_h(self, h):
        return TodaState(x=self.x, y=self.y, t=self.t, h=np.asarray(h, dtype=float))


@dataclass(frozen=True)
class SpectralCoeffs:
    """H_1..H_4 with the structure residual of the characteristic polynomial fit

    Attributes:
        h (numpy.ndarray): (H_1, H_2, H_3, H_4)
        residual (float): Relative fit residual including the odd-power and leading-term checks
        odd_max (float): Largest odd-power coefficient of det(A - lambda I)
    """
    h: np.ndarray
    residual: float = 0.0
    odd_max: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).ravel()
        if h.shape != (4,) or not np.all(np.isfinite(h)):
            raise ValueError("Spectral coefficients must be four finite numbers")
        object.__setattr__(self, 'h', h)

    @property
    def c1(self):
        return self.h[0]


def toda_rhs(s):
    """
    Right-hand side of the chain

    Args:
        s (TodaState): State

    Returns:
        tuple: (dx, dy)
    """
    return s.x * s.y, CARTAN @ s.x


def _rhs_vector(t, u):
    x = u[:3]
    return np.concatenate([x * u[3:6], CARTAN @ x])


def lax_parameters(x, y):
    """(a_1, a_2, a_3, b_1, b_2, b_3) for a state"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a1 = 0.5j * math.sqrt(x[2])
    a2 = 0.5j * math.sqrt(x[1])
    a3 = 0.5j * math.sqrt(x[0])
    b1 = (y[0] + y[2]) / 4
    b2 = (y[0] - 2 * y[1] + y[2]) / 4
    b3 = (3 * y[0] + y[2]) / 4
    return a1, a2, a3, b1, b2, b3


def lax_a(a1, a2, a3, b1, b2, b3, mu):
    """A_mu from its parameters (linear in them for fixed mu)"""
    if mu == 0:
        raise MuZero("mu must be nonzero")
    m = np.zeros((7, 7), dtype=complex)
    m[0, 0], m[0, 1], m[0, 2], m[0, 4] = b1, a2, a3 / mu, a1
    m[1, 0], m[1, 1], m[1, 3] = a2, b2, SQRT2 * a1
    m[2, 0], m[2, 2], m[2, 6] = mu * a3, b3, -a1
    m[3, 1], m[3, 5] = SQRT2 * a1, -SQRT2 * a1
    m[4, 0], m[4, 4], m[4, 6] = a1, -b3, -a3 / mu
    m[5, 3], m[5, 5], m[5, 6] = -SQRT2 * a1, -b2, -a2
    m[6, 2], m[6, 4], m[6, 5], m[6, 6] = -a1, -mu * a3, -a2, -b1
    return m


def lax_b(a1, a2, a3, mu):
    """B_mu from its parameters"""
    if mu == 0:
        raise MuZero("mu must be nonzero")
    m = np.zeros((7, 7), dtype=complex)
    m[0, 1], m[0, 2], m[0, 4] = a2, -a3 / mu, -a1
    m[1, 0], m[1, 3] = -a2, SQRT2 * a1
    m[2, 0], m[2, 6] = mu * a3, a1
    m[3, 1], m[3, 5] = -SQRT2 * a1, -SQRT2 * a1
    m[4, 0], m[4, 6] = a1, a3 / mu
    m[5, 3], m[5, 6] = SQRT2 * a1, -a2
    m[6, 2], m[6, 4], m[6, 5] = -a1, -mu * a3, a2
    return m


def build_lax(s, mu):
    """
    Lax matrices of a state

    Args:
        s (TodaState): State
        mu (complex): Spectral parameter, nonzero

    Returns:
        tuple: (A_mu, B_mu) as 7x7 complex arrays
    """
    if mu == 0:
        raise MuZero("mu must be nonzero")
    a1, a2, a3, b1, b2, b3 = lax_parameters(s.x, s.y)
    return lax_a(a1, a2, a3, b1, b2, b3, mu), lax_b(a1, a2, a3, mu)


def lax_derivative(s, mu):
    """dA_mu/dt along the chain, by the chain rule through the parameters"""
    a1, a2, a3, _, _, _ = lax_parameters(s.x, s.y)
    dy = CARTAN @ s.x
    # a_k ~ sqrt(x_j) and dx_j/dt = x_j y_j give da_k/dt = a_k y_j / 2
    da1, da2, da3 = a1 * s.y[2] / 2, a2 * s.y[1] / 2, a3 * s.y[0] / 2
    db1 = (dy[0] + dy[2]) / 4
    db2 = (dy[0] - 2 * dy[1] + dy[2]) / 4
    db3 = (3 * dy[0] + dy[2]) / 4
    return lax_a(da1, da2, da3, db1, db2, db3, mu)


def lax_residual(s, mu):
    """
    ||dA_mu/dt - [A_mu, B_mu]||_F / ||A_mu||_F along the chain

    Args:
        s (TodaState): State
        mu (complex): Spectral parameter

    Returns:
        float: Relative residual of the Lax equation
    """
    a, b = build_lax(s, mu)
    commutator = a @ b - b @ a
    return float(np.linalg.norm(lax_derivative(s, mu) - commutator) / np.linalg.norm(a))


@dataclass(frozen=True)
class LaxSelfTest:
    """Outcome of the Lax equation check on sample states"""
    passed: bool
    max_residual: float
    residuals: tuple = field(default=())


@functools.lru_cache(maxsize=16)
def lax_self_test(mus=(1.0, -1.0, 2.0), seed=0, samples=5, limit=LAX_RESIDUAL_LIMIT):
    """
    Compare [A_mu, B_mu] with the chain-rule derivative of A_mu on random states

    Args:
        mus (tuple): Spectral parameters
        seed (int): Random seed for the sample states
        samples (int): Number of states
        limit (float): Largest acceptable relative residual

    Returns:
        LaxSelfTest: Pass flag and residuals
    """
    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(samples):
        s = TodaState(x=rng.uniform(0.5, 2.0, size=3), y=rng.uniform(-1.0, 1.0, size=3))
        residuals.extend(lax_residual(s, mu) for mu in mus)
    worst = max(residuals)
    passed = worst <= limit
    if not passed:
        logger.warning("Lax pair does not reproduce the chain: residual %.3e above %.1e; "
                       "the matrix flow dA/dt = [A, B(A)] is used for spectral invariants", worst, limit)
    return LaxSelfTest(passed=passed, max_residual=worst, residuals=tuple(residuals))


def characteristic_fit(a_mat, samples=12, radius=2.0):
    """
    Fit det(A - lambda I) / lambda by a degree-6 polynomial in lambda

    Args:
        a_mat (numpy.ndarray): 7x7 matrix
        samples (int): Number of lambda samples on the circle
        radius (float): Circle radius

    Returns:
        tuple: (coefficients of lambda^0..lambda^6, relative least-squares residual)
    """
    lam = radius * np.exp(2j * np.pi * np.arange(samples) / samples)
    eye = np.eye(a_mat.shape[0])
    values = np.array([np.linalg.det(a_mat - l * eye) / l for l in lam])
    vander = np.vander(lam, 7, increasing=True)
    coeffs, *_ = np.linalg.lstsq(vander, values, rcond=None)
    residual = float(np.linalg.norm(vander @ coeffs - values) / max(np.linalg.norm(values), 1e-300))
    return coeffs, residual


def spectral_coeffs_from_matrices(matrices, mus, limit=FIT_RESIDUAL_LIMIT):
    """
    H_1..H_4 from A_mu at two spectral parameters with distinct mu + 1/mu

    Args:
        matrices (list): A_mu for each mu
        mus (tuple): The two spectral parameters
        limit (float): Largest acceptable structure residual

    Returns:
        SpectralCoeffs: Invariants and residual
    """
    if len(mus) != 2 or len(matrices) != 2:
        raise ValueError("Exactly two spectral parameters are needed")
    s = [mu + 1 / mu for mu in mus]
    if abs(s[0] - s[1]) < 1e-12:
        raise ValueError(f"mu + 1/mu must differ between {mus}")

    fits = [characteristic_fit(m) for m in matrices]
    c = [f[0] for f in fits]
    scale = max(1.0, max(float(np.max(np.abs(ci))) for ci in c))

    # p0 = H1 s - H4, p2 = -H3, p4 = -H2, p6 = -1
    h1 = (c[0][0] - c[1][0]) / (s[0] - s[1])
    h4 = h1 * s[0] - c[0][0]
    h2 = -(c[0][4] + c[1][4]) / 2
    h3 = -(c[0][2] + c[1][2]) / 2
    h = np.array([h1, h2, h3, h4])

    odd_max = max(float(np.max(np.abs(ci[[1, 3, 5]]))) for ci in c)
    checks = [
        odd_max,
        max(abs(ci[6] + 1) for ci in c),
        abs(c[0][4] - c[1][4]),
        abs(c[0][2] - c[1][2]),
        float(np.max(np.abs(h.imag))),
    ]
    residual = max(max(checks) / scale, max(f[1] for f in fits))
    if residual > limit:
        raise FitResidualTooLarge(f"Characteristic polynomial fit residual {residual:.3e} exceeds {limit:.1e}")
    return SpectralCoeffs(h=h.real, residual=residual, odd_max=odd_max / scale)


def spectral_coeffs(s, mus=(1.0, -1.0)):
    """
    Spectral invariants of a state from det(A_mu - lambda I)

    Args:
        s (TodaState): State
        mus (tuple): Two spectral parameters with distinct mu + 1/mu

    Returns:
        SpectralCoeffs: H_1..H_4
    """
    return spectral_coeffs_from_matrices([build_lax(s, mu)[0] for mu in mus], mus)


def spectral_invariants(c):
    """(c_1, c_2, c_3, c_4) from SpectralCoeffs or a plain 4-vector"""
    if isinstance(c, SpectralCoeffs):
        return tuple(float(v) for v in c.h)
    values = tuple(float(v) for v in np.asarray(c, dtype=float).ravel())
    if len(values) != 4:
        raise ValueError("Four spectral coefficients are needed")
    return values


def _refine_roots(coeffs, roots, steps=3):
    # Newton polish on the numpy roots
    deriv = np.polyder(coeffs)
    out = []
    for r in roots:
        for _ in range(steps):
            d = np.polyval(deriv, r)
            if d == 0:
                break
            r = r - np.polyval(coeffs, r) / d
        out.append(complex(r))
    return np.array(out)


def _min_separation(roots):
    if len(roots) < 2:
        return math.inf
    diffs = np.abs(roots[:, None] - roots[None, :])
    return float(np.min(diffs[~np.eye(len(roots), dtype=bool)]))


@dataclass(frozen=True)
class FixedPointReport:
    """Fixed points of the two involutions of the spectral curve

    Attributes:
        tau_plus (numpy.ndarray): lambda over mu = 1
        tau_minus (numpy.ndarray): lambda over mu = -1
        sigma_mu (numpy.ndarray): mu with lambda = 0 (roots of c1 mu^2 - c4 mu + c1)
        residuals (dict): Largest scaled residual per root set
        degenerate (bool): Roots closer than the separation threshold
    """
    tau_plus: np.ndarray
    tau_minus: np.ndarray
    sigma_mu: np.ndarray
    residuals: dict
    degenerate: bool

    def to_json(self):
        def pairs(v):
            return [[complex(r).real, complex(r).imag] for r in v]
        return {'tau_plus': pairs(self.tau_plus), 'tau_minus': pairs(self.tau_minus),
                'sigma_mu': pairs(self.sigma_mu), 'residuals': self.residuals, 'degenerate': self.degenerate}


def spectral_curve_fixed_points(c):
    """
    Fixed points of tau (mu, lambda) -> (1/mu, lambda) and sigma (mu, lambda) -> (mu, -lambda)

    Args:
        c: SpectralCoeffs or (c_1, c_2, c_3, c_4)

    Returns:
        FixedPointReport: Roots with residual certificates
    """
    c1, c2, c3, c4 = spectral_invariants(c)
    residuals = {}
    sets = {}
    for name, sign in (('tau_plus', -1.0), ('tau_minus', 1.0)):
        poly = np.array([1.0, 0.0, c2, 0.0, c3, 0.0, c4 + 2 * sign * c1])
        roots = _refine_roots(poly, np.roots(poly))
        scale = float(np.sum(np.abs(poly))) * max(1.0, float(np.max(np.abs(roots)))) ** 6
        residuals[name] = float(np.max(np.abs(np.polyval(poly, roots)))) / scale
        sets[name] = roots

    if c1 != 0:
        mu_poly = np.array([c1, -c4, c1])
        mu_roots = _refine_roots(mu_poly, np.roots(mu_poly))
        mu_scale = float(np.sum(np.abs(mu_poly))) * max(1.0, float(np.max(np.abs(mu_roots)))) ** 2
        residuals['sigma_mu'] = float(np.max(np.abs(np.polyval(mu_poly, mu_roots)))) / mu_scale
    else:
        mu_roots = np.array([], dtype=complex)
        residuals['sigma_mu'] = 0.0

    separation = min(_min_separation(sets['tau_plus']), _min_separation(sets['tau_minus']),
                     _min_separation(mu_roots))
    degenerate = c1 == 0 or separation < ROOT_SEPARATION
    if degenerate:
        warnings.warn(DegenerateDiscriminant(f"Spectral curve is singular (root separation {separation:.3e})"))
        logger.warning("Degenerate spectral curve: c1=%g, root separation %.3e", c1, separation)
    return FixedPointReport(tau_plus=sets['tau_plus'], tau_minus=sets['tau_minus'], sigma_mu=mu_roots,
                            residuals=residuals, degenerate=degenerate)


# Integration

def _check_rtol(rtol):
    if not RTOL_RANGE[0] <= rtol <= RTOL_RANGE[1]:
        raise ValueError(f"rtol must lie in [{RTOL_RANGE[0]:.0e}, {RTOL_RANGE[1]:.0e}], got {rtol}")


def _sample_times(t0, t_end, times, samples):
    if times is not None:
        return np.asarray(times, dtype=float)
    if samples is None:
        samples = DEFAULT_SETTINGS['toda_samples']
    return np.linspace(t0, t_end, max(int(samples), 2))


def _solve(fun, t0, t_end, u0, rtol, events):
    atol = rtol * 1e-2
    sol = solve_ivp(fun, (t0, t_end), u0, method='DOP853', rtol=rtol, atol=atol, dense_output=True,
                    events=events)
    return sol


def _escape_time(sol, event):
    if sol.t_events[event].size:
        return sol.t_events[event][0]
    if sol.status == -1:
        return sol.t[-1]
    return None


def toda_integrate(s0, t_end, rtol=None, times=None, samples=None, with_h=False):
    """
    Integrate the chain with an adaptive embedded Runge-Kutta method and dense output

    Args:
        s0 (TodaState): Initial state
        t_end (float): Final time (may be before s0.t)
        rtol (float): Relative tolerance in RTOL_RANGE
        times: Sample times, default an even grid of `samples` points
        samples (int): Number of samples when times is None
        with_h (bool): Attach spectral invariants from A(X(t), Y(t)) to every state

    Returns:
        list: TodaState at each sample time
    """
    if rtol is None:
        rtol = DEFAULT_SETTINGS['toda_rtol']
    _check_rtol(rtol)
    t_eval = _sample_times(s0.t, t_end, times, samples)

    def positivity(t, u):
        return float(np.min(u[:3])) - POSITIVITY_FLOOR
    positivity.terminal = True

    def blow_up(t, u):
        return BLOW_UP_LEVEL - float(np.max(np.abs(u)))
    blow_up.terminal = True

    sol = _solve(_rhs_vector, s0.t, t_end, s0.vector(), rtol, [positivity, blow_up])
    escape = _escape_time(sol, 1)
    if escape is None and sol.t_events[0].size:
        # x = x0 exp(int y) only reaches the floor when y runs off to -infinity
        t_hit = sol.t_events[0][0]
        rest = _solve(_rhs_vector, t_hit, t_end, sol.y_events[0][0], rtol, [blow_up])
        escape = _escape_time(rest, 0)
        if escape is None:
            raise PositivityLost(f"x left the positive orthant at t = {t_hit:.6g}")
    if escape is not None:
        raise TrajectoryBlowUp(f"Trajectory escapes to infinity near t = {escape:.6g}")

    states = []
    for t, u in zip(t_eval, sol.sol(t_eval).T):
        state = TodaState.from_vector(u, t=t)
        if with_h:
            state = state.with_h(spectral_coeffs(state).h)
        states.append(state)
    logger.debug("Integrated chain to t=%g with %d steps", t_end, sol.t.size)
    return states


def _b_from_a(a_mat, mu):
    # A_12 = a_2, A_15 = a_1, A_13 = a_3 / mu
    return lax_b(a_mat[0, 4], a_mat[0, 1], mu * a_mat[0, 2], mu)


def integrate_lax_matrix(s0, mus, t_end, rtol=None, times=None, samples=None):
    """
    Integrate dA_mu/dt = [A_mu, B(A_mu)] from A_mu(s0), with B read off the entries of A

    Args:
        s0 (TodaState): Initial state
        mus (tuple): Spectral parameters, one matrix flow each
        t_end (float): Final time
        rtol (float): Relative tolerance
        times: Sample times
        samples (int): Number of samples when times is None

    Returns:
        tuple: (sample times, list of lists of A_mu per sample)
    """
    if rtol is None:
        rtol = DEFAULT_SETTINGS['toda_rtol']
    _check_rtol(rtol)
    mus = tuple(mus)
    t_eval = _sample_times(s0.t, t_end, times, samples)
    u0 = np.concatenate([build_lax(s0, mu)[0].ravel() for mu in mus])

    def rhs(t, u):
        out = []
        for k, mu in enumerate(mus):
            a = u[49 * k:49 * (k + 1)].reshape(7, 7)
            b = _b_from_a(a, mu)
            out.append((a @ b - b @ a).ravel())
        return np.concatenate(out)

    def blow_up(t, u):
        return BLOW_UP_LEVEL - float(np.max(np.abs(u)))
    blow_up.terminal = True

    sol = _solve(rhs, s0.t, t_end, u0, rtol, [blow_up])
    if sol.t_events[0].size or sol.status == -1:
        raise TrajectoryBlowUp(f"Matrix flow escapes to infinity: {sol.message}")
    values = sol.sol(t_eval)
    mats = [[values[49 * k:49 * (k + 1), i].reshape(7, 7) for k in range(len(mus))] for i in range(len(t_eval))]
    return t_eval, mats


def eigenvalue_drift(reference, current):
    """Largest distance between matched eigenvalues (optimal assignment)"""
    cost = np.abs(np.asarray(current)[:, None] - np.asarray(reference)[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


def h_drift(h_rows):
    h = np.asarray(h_rows, dtype=float)
    return np.max(np.abs(h - h[0]), axis=0)


@dataclass(frozen=True)
class TodaRun:
    """Trajectory with its conservation report

    Attributes:
        trajectory (list): TodaState samples with H attached
        report (dict): Drift figures and the mode that produced H
    """
    trajectory: list
    report: dict

    def passed(self, drift_factor=None):
        if drift_factor is None:
            drift_factor = DEFAULT_SETTINGS['drift_factor']
        return self.report['max_drift'] <= drift_factor * self.report['rtol']


def conservation_report(trajectory, rtol, mode, lax_test=None, matrix_h=None, isospectral=None):
    """
    Summarize drift of H along a trajectory

    Args:
        trajectory (list): TodaState samples with H attached
        rtol (float): Integrator tolerance
        mode (str): 'state' or 'matrix', the source of H
        lax_test (LaxSelfTest): Lax check outcome
        matrix_h (numpy.ndarray): H rows from the matrix flow, for comparison
        isospectral (float): Eigenvalue drift of A at the isospectral mu

    Returns:
        dict: Report
    """
    h_rows = np.array([s.h for s in trajectory])
    drift = h_drift(h_rows)
    report = {
        'mode': mode,
        'rtol': rtol,
        'h0': h_rows[0].tolist(),
        'drift': drift.tolist(),
        'max_drift': float(np.max(drift)),
        'lax_self_test': None if lax_test is None else {'passed': lax_test.passed,
                                                        'max_residual': lax_test.max_residual},
    }
    if matrix_h is not None:
        report['matrix_drift'] = float(np.max(h_drift(matrix_h)))
    if isospectral is not None:
        report['isospectral_drift'] = isospectral
    return report


def simulate(s0, t_end, rtol=None, samples=None, mode='auto', mus=None, isospectral_mu=None):
    """
    Integrate the chain and measure conservation of the spectral invariants

    In 'state' mode H is read from A(X(t), Y(t)); in 'matrix' mode from the isospectral flow
    dA/dt = [A, B(A)]. 'auto' picks 'state' when the Lax self-test passes.

    Args:
        s0 (TodaState): Initial state
        t_end (float): Final time
        rtol (float): Relative tolerance
        samples (int): Number of sample times
        mode (str): 'auto', 'state' or 'matrix'
        mus (tuple): Spectral parameters of the Lax self-test
        isospectral_mu (complex): Spectral parameter of the eigenvalue check

    Returns:
        TodaRun: Trajectory and report
    """
    if rtol is None:
        rtol = DEFAULT_SETTINGS['toda_rtol']
    if mus is None:
        mus = tuple(DEFAULT_SETTINGS['lax_mus'])
    if isospectral_mu is None:
        re, im = DEFAULT_SETTINGS['isospectral_mu']
        isospectral_mu = complex(re, im)

    lax_test = lax_self_test(tuple(mus))
    if mode == 'auto':
        mode = 'state' if lax_test.passed else 'matrix'
    if mode not in ('state', 'matrix'):
        raise ValueError(f"Unknown mode {mode!r}")

    trajectory = toda_integrate(s0, t_end, rtol, samples=samples)
    times = [s.t for s in trajectory]
    fit_mus = (1.0, -1.0)
    _, mats = integrate_lax_matrix(s0, fit_mus + (isospectral_mu,), t_end, rtol, times=times)
    matrix_h = np.array([spectral_coeffs_from_matrices(m[:2], fit_mus).h for m in mats])
    reference = np.linalg.eigvals(mats[0][2])

    if mode == 'state':
        trajectory = [s.with_h(spectral_coeffs(s, fit_mus).h) for s in trajectory]
        iso = max(eigenvalue_drift(reference, np.linalg.eigvals(build_lax(s, isospectral_mu)[0]))
                  for s in trajectory)
    else:
        trajectory = [s.with_h(h) for s, h in zip(trajectory, matrix_h)]
        iso = max(eigenvalue_drift(reference, np.linalg.eigvals(m[2])) for m in mats)

    report = conservation_report(trajectory, rtol, mode, lax_test, matrix_h=matrix_h, isospectral=iso)
    logger.info("Toda run to t=%g in %s mode: max drift %.3e", t_end, mode, report['max_drift'])
    return TodaRun(trajectory=trajectory, report=report)


def trajectory_frame(trajectory):
    """
    Trajectory as a DataFrame with columns t, x1..x3, y1..y3, H1..H4

    Args:
        trajectory (list): TodaState samples

    Returns:
        pandas.DataFrame: One row per sample
    """
    rows = []
    for s in trajectory:
        h = s.h if s.h is not None else [np.nan] * 4
        rows.append([s.t, *s.x, *s.y, *h])
    return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)
