"""Riemann theta functions with rational characteristics.

theta[a, b](z | Omega) = sum over n in Z^g of
    exp(pi i <n + a, Omega (n + a)> + 2 pi i <n + a, z + b>)

Evaluation reduces z modulo the period lattice first (integer translations and Omega columns),
so the dominant terms sit near the origin. The sum is then truncated to an ellipsoid built from the
Cholesky factor of Im(Omega), and a rigorous bound on the discarded tail is returned with every value.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from config import DEFAULT_SETTINGS
from errors import DimensionMismatch
from lattice import CosetIndex, EllipsoidSpec, delta_diagonal, ellipsoid_point_bound, enum_cosets, enum_ellipsoid
from linalg import PeriodMatrix, validate_period_matrix

logger = logging.getLogger(__name__)

TWO_PI_I = 2j * math.pi

# Shells are summed until a term is below this fraction of the running total
TAIL_SHELL_CUTOFF = 1e-17
MAX_RADIUS_STEPS = 200


def to_fraction(value):
    """
    Read a rational from a number, a 'p/q' string or a [p, q] pair

    Args:
        value: Rational in any of the accepted forms

    Returns:
        fractions.Fraction: Value in lowest terms
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"Expected [numerator, denominator], got {value!r}")
        return Fraction(int(value[0]), int(value[1]))
    if isinstance(value, (float, np.floating)):
        return Fraction(repr(float(value)))
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    return Fraction(str(value).strip())


@dataclass(frozen=True)
class Characteristic:
    """Rational characteristic [a, b]

    Attributes:
        a (tuple): Fractions, length g
        b (tuple): Fractions, length g
    """
    a: tuple
    b: tuple

    def __post_init__(self):
        a = tuple(to_fraction(x) for x in self.a)
        b = tuple(to_fraction(x) for x in self.b)
        if len(a) != len(b):
            raise DimensionMismatch(f"Characteristic halves differ in length: {len(a)} and {len(b)}")
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'b', b)

    @classmethod
    def zero(cls, g):
        return cls(a=(0,) * g, b=(0,) * g)

    @classmethod
    def from_coset(cls, eps):
        """[Delta^-1 eps, 0] for a coset representative"""
        return cls(a=eps.fraction, b=(0,) * len(eps.rep))

    @property
    def dim(self):
        return len(self.a)

    @property
    def a_float(self):
        return np.array([float(x) for x in self.a], dtype=float)

    @property
    def b_float(self):
        return np.array([float(x) for x in self.b], dtype=float)

    def negate(self):
        return Characteristic(a=tuple(-x for x in self.a), b=tuple(-x for x in self.b))

    def to_json(self):
        return {'a': [str(x) for x in self.a], 'b': [str(x) for x in self.b]}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, dict):
            return cls(a=tuple(obj['a']), b=tuple(obj['b']))
        a, b = obj
        return cls(a=tuple(a), b=tuple(b))


@dataclass(frozen=True)
class ThetaValue:
    """Series value with a rigorous bound on the truncation error

    Attributes:
        value (complex): Truncated sum
        tail_bound (float): Bound on |value - exact sum|
        scale (float): Magnitude of the leading term, the unit in which tol is measured
    """
    value: complex
    tail_bound: float
    scale: float = 1.0

    def __abs__(self):
        return abs(self.value)

    def to_json(self):
        return {'value': [self.value.real, self.value.imag], 'tail_bound': self.tail_bound}


@dataclass(frozen=True)
class ThetaBasis:
    """Basis theta[Delta^-1 eps, 0](z | Omega) of the sections of a polarization of type Delta

    Attributes:
        delta (tuple): Polarization type
        omega (PeriodMatrix): Period matrix
        cosets (list): CosetIndex objects in lexicographic order
        elements (list): Matching characteristics
    """
    delta: tuple
    omega: PeriodMatrix
    cosets: list
    elements: list

    def __len__(self):
        return len(self.elements)

    def evaluate(self, z, tol=None):
        """Evaluate every basis element at z"""
        return [theta(ch, z, self.omega, tol) for ch in self.elements]


def gaussian_tail_bound(diag_t, radius, poly=None):
    """
    Bound sum exp(-pi q(n)) * poly(sqrt q(n)) over the lattice points outside radius R

    Shells [R + j, R + j + 1] are summed with the point count bounded by
    ellipsoid_point_bound. Summation stops once the shell terms fall by half per step and are
    negligible; the last term is counted once more as the remainder.

    Args:
        diag_t: Diagonal of the Cholesky factor of the quadratic form
        radius (float): Truncation radius R in the quadratic-form norm
        poly (callable): Nondecreasing polynomial weight of the radius, or None

    Returns:
        float: Tail bound relative to the peak term
    """
    total = 0.0
    prev = math.inf
    j = 0
    while True:
        r_in = radius + j
        r_out = r_in + 1.0
        term = ellipsoid_point_bound(diag_t, r_out) * math.exp(-math.pi * r_in * r_in)
        if poly is not None:
            term *= poly(r_out)
        if term == 0.0:
            break
        total += term
        if term <= 0.5 * prev and term <= TAIL_SHELL_CUTOFF * total:
            total += term
            break
        prev = term
        j += 1
    return total


def initial_radius(g, tol):
    """Truncation radius in the quadratic-form norm for a given tolerance"""
    return math.sqrt((math.log(1.0 / tol) + g * math.log(10.0) + 5.0) / math.pi)


def _as_vector(z, g, name="z"):
    z = np.asarray(z, dtype=complex).ravel()
    if z.shape[0] != g:
        raise DimensionMismatch(f"{name} has length {z.shape[0]}, expected {g}")
    return z


def _direction_matrix(dirs, g):
    d = np.array([_as_vector(v, g, "direction") for v in dirs], dtype=complex).reshape(len(dirs), g)
    if not 1 <= d.shape[0] <= 3:
        raise ValueError(f"Between one and three directions are supported, got {d.shape[0]}")
    return d


def _sum_chunks(chunks):
    # Per-chunk numpy sums, combined in a fixed order with exact float summation
    re = math.fsum(c.real for c in chunks)
    im = math.fsum(c.imag for c in chunks)
    return complex(re, im)


def theta_series(ch, z, omega, tol=None, dirs=None, radius_pad=0.0, capacity=None, chunk_size=None):
    """
    Evaluate theta[a, b](z | Omega) or a mixed directional derivative of it

    Args:
        ch (Characteristic): Characteristic
        z: Complex vector of length g
        omega: PeriodMatrix or square complex matrix
        tol (float): Tolerance relative to the leading-term magnitude
        dirs (list): Up to three complex direction vectors, or None
        radius_pad (float): Extra radius added after the tolerance is met
        capacity (int): Enumeration capacity
        chunk_size (int): Enumeration chunk size

    Returns:
        ThetaValue: Value and absolute tail bound
    """
    if tol is None:
        tol = DEFAULT_SETTINGS['tol']
    if not tol > 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    pm = validate_period_matrix(omega)
    g = pm.dim
    if ch.dim != g:
        raise DimensionMismatch(f"Characteristic has length {ch.dim}, period matrix is {g}x{g}")
    z = _as_vector(z, g)
    a = ch.a_float
    b = ch.b_float
    om = pm.omega

    # z = w' + m + Omega k with w' in the fundamental cell around the origin
    k = np.rint(pm.solve_imag(z.imag))
    w = z - om @ k
    m = np.rint(w.real)
    w_red = w - m
    log_pref = (-TWO_PI_I * np.dot(b, k) - 1j * math.pi * (k @ om @ k)
                - TWO_PI_I * np.dot(k, w) + TWO_PI_I * np.dot(a, m))

    y_red = w_red.imag
    y_inv_y = pm.solve_imag(y_red)
    center = -a - y_inv_y
    log_peak = math.pi * float(y_red @ y_inv_y)
    diag_t = np.diag(pm.chol_im)

    poly = None
    poly_scale = 1.0
    d = None
    if dirs is not None:
        d = _direction_matrix(dirs, g)
        # |<n + a - k, d>| <= ||d|| (||n - c|| + ||c + a - k||) and ||n - c|| <= q / s_min
        s_min = math.sqrt(pm.lambda_min)
        offset = float(np.linalg.norm(center + a - k))
        norms = [2 * math.pi * float(np.linalg.norm(v)) for v in d]

        def poly(q):
            return float(np.prod([nv * (q / s_min + offset) for nv in norms]))

        poly_scale = poly(1.0)

    radius = initial_radius(g, tol)
    tail = gaussian_tail_bound(diag_t, radius, poly)
    steps = 0
    while tail > tol * poly_scale:
        radius += 0.5
        tail = gaussian_tail_bound(diag_t, radius, poly)
        steps += 1
        if steps > MAX_RADIUS_STEPS:
            raise ArithmeticError(f"Tail bound did not reach {tol:.1e} (radius {radius:.2f})")
    if radius_pad:
        radius += radius_pad
        tail = gaussian_tail_bound(diag_t, radius, poly)

    spec = EllipsoidSpec(gram_chol=pm.chol_im, center=center, radius=radius)
    sums = []
    count = 0
    for pts in enum_ellipsoid(spec, capacity=capacity, chunk_size=chunk_size):
        v = pts + a
        exponent = (1j * math.pi * np.einsum('ij,jk,ik->i', v, om, v)
                    + TWO_PI_I * (v @ (w_red + b)) - log_peak)
        terms = np.exp(exponent)
        if d is not None:
            shifted = v - k
            for direction in d:
                terms = terms * (TWO_PI_I * (shifted @ direction))
        sums.append(complex(np.sum(terms)))
        count += pts.shape[0]

    factor = np.exp(log_pref + log_peak)
    scale = float(abs(factor))
    value = complex(factor * _sum_chunks(sums))
    tail_bound = scale * tail
    logger.debug("theta g=%d: %d terms, radius %.3f, tail %.3e", g, count, radius, tail_bound)
    return ThetaValue(value=value, tail_bound=tail_bound, scale=scale * poly_scale)


def theta(ch, z, omega, tol=None, **kwargs):
    """
    Theta function with characteristic

    Args:
        ch (Characteristic): Characteristic [a, b]
        z: Complex vector
        omega: PeriodMatrix or square complex matrix
        tol (float): Relative tolerance

    Returns:
        ThetaValue: Value and tail bound
    """
    return theta_series(ch, z, omega, tol=tol, **kwargs)


def theta_dderiv(ch, z, omega, dirs, tol=None, **kwargs):
    """
    Mixed directional derivative of theta[a, b] along one to three directions

    Args:
        ch (Characteristic): Characteristic
        z: Complex vector
        omega: PeriodMatrix or square complex matrix
        dirs (list): Direction vectors
        tol (float): Relative tolerance

    Returns:
        ThetaValue: Derivative and tail bound
    """
    return theta_series(ch, z, omega, tol=tol, dirs=list(dirs), **kwargs)


def basis_thm1(delta, omega):
    """
    Basis theta[Delta^-1 eps, 0], eps in Z^g / Delta Z^g, of the sections for polarization Delta

    Args:
        delta: Polarization type
        omega: PeriodMatrix or square complex matrix

    Returns:
        ThetaBasis: Basis in lexicographic coset order
    """
    diag = delta_diagonal(delta)
    pm = validate_period_matrix(omega)
    if len(diag) != pm.dim:
        raise DimensionMismatch(f"Delta has size {len(diag)}, period matrix is {pm.dim}x{pm.dim}")
    cosets = enum_cosets(diag)
    elements = [Characteristic.from_coset(eps) for eps in cosets]
    return ThetaBasis(delta=diag, omega=pm, cosets=cosets, elements=elements)


def _coset(eps, delta):
    diag = delta_diagonal(delta)
    if isinstance(eps, CosetIndex):
        if eps.delta != diag:
            raise DimensionMismatch(f"Coset belongs to Delta {eps.delta}, not {diag}")
        return eps
    return CosetIndex(delta=diag, rep=tuple(eps))


def coefficient_exponent(m, eps, omega):
    """
    Exponent of a_{eps + Delta m} in closed form

    pi i <m, Omega m> + 2 pi i <Delta^-1 eps, Omega m> + pi i <Delta^-1 eps, Omega Delta^-1 eps>,
    vectorized over the rows of m.
    """
    om = omega.omega if isinstance(omega, PeriodMatrix) else np.asarray(omega, dtype=complex)
    e = np.array([float(x) for x in eps.fraction])
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return (1j * math.pi * np.einsum('ij,jk,ik->i', m, om, m)
            + TWO_PI_I * (m @ om @ e) + 1j * math.pi * (e @ om @ e))


def recurrence_coefficients(eps, delta, omega, box=2):
    """
    Fourier coefficients a_{eps + Delta m}, |m_j| <= box, generated step by step from
    a_{M + Delta e_j} = exp(pi i Omega_jj + 2 pi i <M, Delta^-1 Omega e_j>) a_M

    Args:
        eps: CosetIndex or representative
        delta: Polarization type
        omega: PeriodMatrix or square complex matrix
        box (int): Half-width of the index box

    Returns:
        dict: m (tuple) -> complex coefficient
    """
    eps = _coset(eps, delta)
    pm = validate_period_matrix(omega)
    om = pm.omega
    g = pm.dim
    dvec = np.array(eps.delta, dtype=float)

    def step(m_tuple, j):
        big_m = np.array(eps.rep, dtype=float) + dvec * np.array(m_tuple, dtype=float)
        return 1j * math.pi * om[j, j] + TWO_PI_I * np.dot(big_m / dvec, om[:, j])

    e = np.array([float(x) for x in eps.fraction])
    exponents = {(0,) * g: 1j * math.pi * (e @ om @ e)}
    # Visit indices by increasing L1 norm so a neighbour one step closer to the origin is known
    order = sorted(itertools.product(range(-box, box + 1), repeat=g), key=lambda t: (sum(map(abs, t)), t))
    for m_tuple in order:
        if m_tuple in exponents:
            continue
        j = next(i for i, x in enumerate(m_tuple) if x != 0)
        if m_tuple[j] > 0:
            prev = tuple(x - (i == j) for i, x in enumerate(m_tuple))
            exponents[m_tuple] = exponents[prev] + step(prev, j)
        else:
            # a_M = a_{M + Delta e_j} / exp(step(M))
            exponents[m_tuple] = exponents[tuple(x + (i == j) for i, x in enumerate(m_tuple))] - step(m_tuple, j)
    return {m: complex(np.exp(v)) for m, v in exponents.items()}


def theta_recursion_oracle(eps, delta, omega, z, tol=None, capacity=None, chunk_size=None):
    """
    Evaluate the basis function theta_eps(z) from its Fourier series
    sum over m of a_{eps + Delta m} exp(2 pi i <eps + Delta m, Delta^-1 z>)

    The coefficients come from the closed-form solution of the recursion. No argument reduction
    is applied, so this is a separate evaluation path from theta().

    Args:
        eps: CosetIndex or representative
        delta: Polarization type
        omega: PeriodMatrix or square complex matrix
        z: Complex vector
        tol (float): Relative tolerance

    Returns:
        ThetaValue: Value and tail bound
    """
    if tol is None:
        tol = DEFAULT_SETTINGS['tol']
    eps = _coset(eps, delta)
    pm = validate_period_matrix(omega)
    g = pm.dim
    if len(eps.rep) != g:
        raise DimensionMismatch(f"Coset has length {len(eps.rep)}, period matrix is {g}x{g}")
    z = _as_vector(z, g)
    dvec = np.array(eps.delta, dtype=float)
    rep = np.array(eps.rep, dtype=float)
    e = rep / dvec

    # |term| = exp(-pi (m + e)^T Y (m + e) - 2 pi (m + e) . Im z)
    y_inv_y = pm.solve_imag(z.imag)
    center = -e - y_inv_y
    log_peak = math.pi * float(z.imag @ y_inv_y)
    diag_t = np.diag(pm.chol_im)

    radius = initial_radius(g, tol)
    while gaussian_tail_bound(diag_t, radius) > tol:
        radius += 0.5
    tail = gaussian_tail_bound(diag_t, radius)

    spec = EllipsoidSpec(gram_chol=pm.chol_im, center=center, radius=radius)
    z_scaled = z / dvec
    sums = []
    for pts in enum_ellipsoid(spec, capacity=capacity, chunk_size=chunk_size):
        index = rep + dvec * pts
        exponent = coefficient_exponent(pts, eps, pm) + TWO_PI_I * (index @ z_scaled) - log_peak
        sums.append(complex(np.sum(np.exp(exponent))))

    scale = math.exp(log_peak)
    return ThetaValue(value=scale * _sum_chunks(sums), tail_bound=scale * tail, scale=scale)
