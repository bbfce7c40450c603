"""Finite-gap CKP solutions and Prym theta ratios.

V = 2 d^2/dx^2 log theta(x U_1 + t_3 U_3 + ... - gamma | Omega~) on the ambient Jacobian, and the
same quantity written through the Prym expansion with directions U~_s and shift gamma~ = P^T gamma.
"""

import logging
from dataclasses import dataclass

import numpy as np

from config import DEFAULT_SETTINGS
from errors import DenominatorNearZero, InvalidFlowData, NearThetaZero
from lattice import CosetIndex
from restriction import (PrymSpec, as_prym_spec, coeffs_prym_eq6, expand_sum, generate_instance, instance_from_json,
                         instance_to_json)
from theta import Characteristic, theta, theta_dderiv
from utils import complex_vector_from_json, complex_vector_to_json

logger = logging.getLogger(__name__)

THETA_ZERO_RATIO = 1e-14


@dataclass(frozen=True)
class FlowData:
    """Synthetic flow data on a Prym instance

    Attributes:
        prym (PrymSpec): Prym instance
        u_vecs (tuple): Directions U_s of length 2g + n with the first and last g entries equal
        gamma (numpy.ndarray): Shift, length 2g + n
        times (tuple): (x, t_3, t_5, ...), one per direction
    """
    prym: PrymSpec
    u_vecs: tuple
    gamma: np.ndarray
    times: tuple

    def __post_init__(self):
        g, n = self.prym.g, self.prym.n
        size = 2 * g + n
        vecs = tuple(np.asarray(u, dtype=complex).ravel() for u in self.u_vecs)
        if not vecs:
            raise InvalidFlowData("At least one flow direction is required")
        if len(vecs) != len(self.times):
            raise InvalidFlowData(f"{len(vecs)} directions but {len(self.times)} times")
        for s, u in enumerate(vecs):
            if u.shape[0] != size:
                raise InvalidFlowData(f"U_{s} has length {u.shape[0]}, expected {size}")
            if not np.array_equal(u[:g], u[g + n:]):
                raise InvalidFlowData(f"U_{s} does not repeat its first {g} entries at the end")
        gamma = np.asarray(self.gamma, dtype=complex).ravel()
        if gamma.shape[0] != size:
            raise InvalidFlowData(f"gamma has length {gamma.shape[0]}, expected {size}")
        object.__setattr__(self, 'u_vecs', vecs)
        object.__setattr__(self, 'gamma', gamma)
        object.__setattr__(self, 'times', tuple(float(t) for t in self.times))

    @property
    def big_omega(self):
        return self.prym.big_omega

    def argument(self):
        """sum t_s U_s - gamma"""
        return sum(t * u for t, u in zip(self.times, self.u_vecs)) - self.gamma

    def prym_argument(self):
        """sum t_s U~_s - gamma~"""
        return (sum(t * self.prym.u_tilde(u) for t, u in zip(self.times, self.u_vecs))
                - self.prym.gamma_tilde(self.gamma))


def _log_second_derivative(f, f1, f2):
    # 2 (f'' f - f'^2) / f^2
    return 2.0 * (f2 * f - f1 * f1) / (f * f)


def _check_not_zero(f, f1, f2, scale):
    reference = max(abs(f1), abs(f2), scale)
    if abs(f) < THETA_ZERO_RATIO * reference:
        raise NearThetaZero(f"|theta| = {abs(f):.3e} against derivative scale {reference:.3e}")


def ckp_v_jacobi(data, tol=None):
    """
    V from the ambient theta function

    Args:
        data (FlowData): Flow data
        tol (float): Relative tolerance of the series

    Returns:
        complex: 2 d^2/dx^2 log theta along U_1
    """
    if tol is None:
        tol = DEFAULT_SETTINGS['tol']
    big = data.big_omega
    ch = Characteristic.zero(big.dim)
    z = data.argument()
    u1 = data.u_vecs[0]
    th = theta(ch, z, big, tol)
    d1 = theta_dderiv(ch, z, big, [u1], tol)
    d2 = theta_dderiv(ch, z, big, [u1, u1], tol)
    _check_not_zero(th.value, d1.value, d2.value, th.scale)
    return complex(_log_second_derivative(th.value, d1.value, d2.value))


def ckp_v_prym(data, tol=None, coeffs=None):
    """
    V from the Prym expansion sum c_eps theta[Delta^-1 eps, 0](sum t_s U~_s - gamma~ | Pi)

    Args:
        data (FlowData): Flow data
        tol (float): Relative tolerance of the series
        coeffs (CoeffVector): Precomputed Prym coefficients for data.gamma

    Returns:
        complex: 2 d^2/dx^2 log of the expansion along U~_1
    """
    if tol is None:
        tol = DEFAULT_SETTINGS['tol']
    spec = data.prym
    if coeffs is None:
        coeffs = coeffs_prym_eq6(spec, data.gamma, tol)
    w = data.prym_argument()
    u1 = spec.u_tilde(data.u_vecs[0])
    f = expand_sum(coeffs, spec.pi, w, tol)
    f1 = expand_sum(coeffs, spec.pi, w, tol, dirs=[u1])
    f2 = expand_sum(coeffs, spec.pi, w, tol, dirs=[u1, u1])
    _check_not_zero(f.value, f1.value, f2.value, f.scale)
    return complex(_log_second_derivative(f.value, f1.value, f2.value))


def theta_ratio_thm5(spec, u, z_num, z_den, c_num, c_den, t, prefactor=(1.0, 0.0), tol=None):
    """
    Two-term Prym theta ratio

    amp exp(t xi) [c_num0 theta(t U~ + z_num | Pi) + c_num1 theta[Delta^-1 eps_1, 0](t U~ + z_num | Pi)]
                / [c_den0 theta(t U~ + z_den | Pi) + c_den1 theta[Delta^-1 eps_1, 0](t U~ + z_den | Pi)]

    with eps_1 = (1, 0, ..., 0).

    Args:
        spec (PrymSpec): Prym instance
        u: Direction, either U~ (length g + n) or a Prym-shaped U (length 2g + n)
        z_num, z_den: Shifts, length g + n
        c_num, c_den: Coefficient pairs
        t (float): Time
        prefactor (tuple): (amp, xi)
        tol (float): Relative tolerance

    Returns:
        complex: Ratio
    """
    if tol is None:
        tol = DEFAULT_SETTINGS['tol']
    spec = as_prym_spec(spec)
    size = spec.g + spec.n
    u = np.asarray(u, dtype=complex).ravel()
    if u.shape[0] == 2 * spec.g + spec.n:
        u = spec.u_tilde(u)
    if u.shape[0] != size:
        raise InvalidFlowData(f"Direction has length {u.shape[0]}, expected {size}")

    eps1 = CosetIndex(delta=spec.delta, rep=(1,) + (0,) * (size - 1))
    chars = (Characteristic.zero(size), Characteristic.from_coset(eps1))

    def combination(z, coeffs):
        w = t * u + np.asarray(z, dtype=complex).ravel()
        values = [theta(ch, w, spec.pi, tol) for ch in chars]
        total = sum(c * v.value for c, v in zip(coeffs, values))
        scale = sum(abs(c) * v.scale for c, v in zip(coeffs, values))
        return total, scale

    num, _ = combination(z_num, c_num)
    den, den_scale = combination(z_den, c_den)
    if abs(den) < THETA_ZERO_RATIO * max(den_scale, 1e-300):
        raise DenominatorNearZero(f"|denominator| = {abs(den):.3e}")
    amp, xi = prefactor
    return complex(amp * np.exp(t * xi) * num / den)


def generate_flow_data(g, n, seed=0, flows=2):
    """
    Random Prym-shaped flow data on a generated Prym instance

    Args:
        g (int): Base genus
        n (int): Number of additional dimensions
        seed (int): Random seed
        flows (int): Number of flow directions

    Returns:
        FlowData: Flow data
    """
    emb = generate_instance(n, kind='prym', g=g, seed=seed)
    spec = as_prym_spec(emb)
    rng = np.random.default_rng([seed, 1])
    size = 2 * g + n

    def random_complex(count, re, im):
        return rng.uniform(-re, re, size=count) + 1j * rng.uniform(-im, im, size=count)

    u_vecs = []
    for _ in range(flows):
        first = random_complex(g, 1.0, 0.2)
        middle = random_complex(n, 1.0, 0.2)
        u_vecs.append(np.concatenate([first, middle, first]))
    gamma = random_complex(size, 0.5, 0.2)
    times = tuple(rng.uniform(-0.5, 0.5, size=flows))
    return FlowData(prym=spec, u_vecs=tuple(u_vecs), gamma=gamma, times=times)


def flow_data_to_json(data):
    return {
        'instance': instance_to_json(data.prym.embedding),
        'u_vecs': [complex_vector_to_json(u) for u in data.u_vecs],
        'gamma': complex_vector_to_json(data.gamma),
        'times': list(data.times),
    }


def flow_data_from_json(obj):
    """
    Read FlowData from {instance, u_vecs, gamma, times}

    Args:
        obj (dict): JSON object

    Returns:
        FlowData: Validated flow data
    """
    if not isinstance(obj, dict):
        raise InvalidFlowData("Flow data must be a JSON object")
    for key in ('instance', 'u_vecs', 'gamma', 'times'):
        if key not in obj:
            raise InvalidFlowData(f"Flow data is missing the {key!r} field")
    emb = instance_from_json(obj['instance'])
    if emb.prym_shape is None:
        raise InvalidFlowData("Flow data needs a Prym instance")
    return FlowData(prym=as_prym_spec(emb),
                    u_vecs=tuple(np.array(complex_vector_from_json(u)) for u in obj['u_vecs']),
                    gamma=np.array(complex_vector_from_json(obj['gamma'])),
                    times=tuple(float(t) for t in obj['times']))


def relative_difference(a, b, floor=1e-30):
    return abs(a - b) / max(abs(a), abs(b), floor)
