"""Lattice point enumeration for theta series truncation.

Integer points inside ellipsoids (Fincke-Pohst depth-first search on the Cholesky factor),
coset representatives of Z^g / Delta Z^g and points of affine sublattices inside ellipsoids.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import linalg as sla
from scipy.special import gammaln

from config import DEFAULT_SETTINGS
from errors import CapacityExceeded, DimensionMismatch, InvalidCoset

logger = logging.getLogger(__name__)

# Slack on the per-coordinate interval bounds; the exact filter runs afterwards
BOUND_SLACK = 1e-9
# Relative slack of the final membership test q(n) <= R^2
FILTER_SLACK = 1e-12


@dataclass(frozen=True)
class EllipsoidSpec:
    """Ellipsoid {x : ||T^T (x - c)|| <= R}

    Attributes:
        gram_chol (numpy.ndarray): Lower triangular T with positive diagonal
        center (numpy.ndarray): Real center c
        radius (float): Radius R > 0
    """
    gram_chol: np.ndarray
    center: np.ndarray
    radius: float

    def __post_init__(self):
        t = np.asarray(self.gram_chol, dtype=float)
        c = np.asarray(self.center, dtype=float).ravel()
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise DimensionMismatch(f"Gram factor must be square, got {t.shape}")
        if c.shape[0] != t.shape[0]:
            raise DimensionMismatch(f"Center has length {c.shape[0]}, expected {t.shape[0]}")
        if not np.all(np.diag(t) > 0):
            raise ValueError("Gram factor must have a strictly positive diagonal")
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"Radius must be finite and positive, got {self.radius}")
        object.__setattr__(self, 'gram_chol', np.tril(t))
        object.__setattr__(self, 'center', c)
        object.__setattr__(self, 'radius', float(self.radius))

    @property
    def dim(self):
        return self.gram_chol.shape[0]

    def quadratic_form(self, points):
        """||T^T (n - c)||^2 for each row of points"""
        diff = np.atleast_2d(np.asarray(points, dtype=float)) - self.center
        return np.sum((diff @ self.gram_chol) ** 2, axis=1)


@dataclass(frozen=True)
class CosetIndex:
    """Representative eps of Z^g / Delta Z^g with 0 <= eps_s < delta_s

    Attributes:
        delta (tuple): Diagonal of Delta
        rep (tuple): Representative eps
    """
    delta: tuple
    rep: tuple

    def __post_init__(self):
        delta = tuple(int(d) for d in self.delta)
        rep = tuple(int(e) for e in self.rep)
        if len(delta) != len(rep):
            raise InvalidCoset(f"Representative {rep} does not match Delta {delta}")
        if any(not 0 <= e < d for e, d in zip(rep, delta)):
            raise InvalidCoset(f"Representative {rep} out of range for Delta {delta}")
        object.__setattr__(self, 'delta', delta)
        object.__setattr__(self, 'rep', rep)

    @property
    def fraction(self):
        """Delta^-1 eps as exact rationals"""
        return tuple(Fraction(e, d) for e, d in zip(self.rep, self.delta))

    def to_json(self):
        return list(self.rep)


def delta_diagonal(delta):
    """
    Read and validate a polarization type

    The divisibility chain delta_s | delta_{s+1} is not required: Prym data use (2, ..., 2, 1, ..., 1).

    Args:
        delta: Diagonal integer matrix or sequence of its diagonal entries

    Returns:
        tuple: (delta_1, ..., delta_g) with delta_s >= 1
    """
    arr = np.asarray(delta, dtype=object)
    if arr.ndim == 2:
        if arr.shape[0] != arr.shape[1]:
            raise DimensionMismatch(f"Delta must be square, got {arr.shape}")
        off = [arr[i, j] for i in range(arr.shape[0]) for j in range(arr.shape[1]) if i != j]
        if any(int(x) != 0 for x in off):
            raise ValueError("Delta must be diagonal")
        diag = [arr[i, i] for i in range(arr.shape[0])]
    elif arr.ndim == 1:
        diag = list(arr)
    else:
        raise DimensionMismatch(f"Cannot read a polarization from shape {arr.shape}")

    out = []
    for x in diag:
        if int(x) != x:
            raise ValueError(f"Delta entry {x} is not an integer")
        out.append(int(x))
    if any(d < 1 for d in out):
        raise ValueError(f"Delta entries must be positive, got {out}")
    return tuple(out)


def is_divisibility_chain(delta):
    """True when delta_s divides delta_{s+1} for every s"""
    diag = delta_diagonal(delta)
    return all(b % a == 0 for a, b in zip(diag, diag[1:]))


def enum_cosets(delta):
    """
    Representatives of Z^g / Delta Z^g in lexicographic order

    Args:
        delta: Polarization type (matrix or diagonal)

    Returns:
        list: CosetIndex objects, delta_1 * ... * delta_g of them
    """
    diag = delta_diagonal(delta)
    return [CosetIndex(delta=diag, rep=rep) for rep in itertools.product(*(range(d) for d in diag))]


def ellipsoid_volume_estimate(spec):
    """Gaussian-heuristic point count: volume of the ellipsoid"""
    g = spec.dim
    log_ball = (g / 2) * math.log(math.pi) - gammaln(g / 2 + 1) + g * math.log(spec.radius)
    log_det = float(np.sum(np.log(np.diag(spec.gram_chol))))
    return math.exp(min(log_ball - log_det, 700.0))


def ellipsoid_point_bound(diag_t, radius):
    """
    Rigorous upper bound on the number of integer points in an ellipsoid

    Every point satisfies |n_i - c_i| <= R / T_ii along the i-th triangular coordinate,
    so the count is at most prod(1 + 2R / T_ii).

    Args:
        diag_t: Diagonal of the Cholesky factor
        radius (float): Radius

    Returns:
        float: Bound on the point count
    """
    diag_t = np.asarray(diag_t, dtype=float)
    return float(np.prod(1.0 + 2.0 * radius / diag_t))


def _interval(center, radius):
    lo = math.ceil(center - radius - BOUND_SLACK)
    hi = math.floor(center + radius + BOUND_SLACK)
    return lo, hi


def enum_ellipsoid(spec, capacity=None, chunk_size=None):
    """
    Integer points of an ellipsoid, depth-first over the coordinates g-1 down to 0

    The innermost coordinate is produced as a vectorized integer range. Chunks are yielded
    in a deterministic order.

    Args:
        spec (EllipsoidSpec): Ellipsoid
        capacity (int): Maximum number of points before CapacityExceeded, counted on the points
            actually produced
        chunk_size (int): Approximate number of points per yielded chunk

    Yields:
        numpy.ndarray: int64 arrays of shape (k, g)
    """
    if capacity is None:
        capacity = DEFAULT_SETTINGS['capacity_limit']
    if chunk_size is None:
        chunk_size = DEFAULT_SETTINGS['chunk_size']

    g = spec.dim
    estimate = ellipsoid_volume_estimate(spec)
    logger.debug("Enumerating ellipsoid g=%d R=%.4f, about %.0f points", g, spec.radius, estimate)

    u = spec.gram_chol.T  # upper triangular
    c = spec.center
    r2 = spec.radius ** 2
    r2_filter = r2 * (1 + FILTER_SLACK)

    buffer = []
    buffered = 0
    produced = 0
    x = np.zeros(g, dtype=np.int64)

    def flush():
        nonlocal buffer, buffered, produced
        pts = np.concatenate(buffer, axis=0)
        buffer, buffered = [], 0
        keep = spec.quadratic_form(pts) <= r2_filter
        pts = pts[keep]
        produced += pts.shape[0]
        if produced > capacity:
            raise CapacityExceeded(f"More than {capacity} lattice points requested")
        return pts

    def search(level, remaining):
        # remaining: radius^2 minus the contribution of coordinates above level
        nonlocal buffered
        shift = float(np.dot(u[level, level + 1:], x[level + 1:] - c[level + 1:])) / u[level, level]
        half = math.sqrt(max(remaining, 0.0)) / u[level, level]
        lo, hi = _interval(c[level] - shift, half)
        if lo > hi:
            return
        if level == 0:
            block = np.empty((hi - lo + 1, g), dtype=np.int64)
            block[:, 1:] = x[1:]
            block[:, 0] = np.arange(lo, hi + 1, dtype=np.int64)
            buffer.append(block)
            buffered += block.shape[0]
            return
        for value in range(lo, hi + 1):
            x[level] = value
            partial = u[level, level] * (value - c[level] + shift)
            rest = remaining - partial * partial
            if rest < -BOUND_SLACK:
                continue
            yield from search(level - 1, rest)
            if buffered >= chunk_size:
                yield flush()
        x[level] = 0

    if g == 0:
        return

    yield from search(g - 1, r2)

    if buffered:
        pts = flush()
        if pts.shape[0]:
            yield pts


def collect_points(chunks):
    """Concatenate enumeration chunks into one (k, g) array"""
    chunks = [c for c in chunks if c.shape[0]]
    if not chunks:
        return None
    return np.concatenate(chunks, axis=0)


@dataclass(frozen=True)
class SublatticeReduction:
    """An affine sublattice particular + K t seen in its own coordinates t

    Attributes:
        kernel (numpy.ndarray): g x k matrix with the kernel basis as columns
        gram_chol (numpy.ndarray): Cholesky factor of G = K^T Y K (None when k = 0)
        center (numpy.ndarray): Minimizer t0 of the quadratic form over real t
        q_perp (float): Part of the quadratic form orthogonal to the sublattice
        spec (EllipsoidSpec): Ellipsoid in t coordinates (None when empty or k = 0)
    """
    kernel: np.ndarray
    gram_chol: object
    center: object
    q_perp: float
    spec: object


def reduce_sublattice(particular, kernel_basis, spec):
    """
    Rewrite ||T^T (p + K t - c)||^2 as (t - t0)^T G (t - t0) + q_perp with G = K^T Y K

    Args:
        particular: Integer vector p
        kernel_basis (list): Integer vectors spanning the sublattice directions
        spec (EllipsoidSpec): Ellipsoid in the ambient coordinates

    Returns:
        SublatticeReduction: Ellipsoid in coefficient coordinates
    """
    p = np.asarray(particular, dtype=float).ravel()
    if p.shape[0] != spec.dim:
        raise DimensionMismatch(f"Particular solution has length {p.shape[0]}, expected {spec.dim}")
    g = spec.dim
    k = len(kernel_basis)
    kernel = np.array(kernel_basis, dtype=float).reshape(k, g).T if k else np.zeros((g, 0))

    if k == 0:
        q = float(spec.quadratic_form(p)[0])
        return SublatticeReduction(kernel=kernel, gram_chol=None, center=None, q_perp=q, spec=None)

    y = spec.gram_chol @ spec.gram_chol.T
    diff = spec.center - p
    gram = kernel.T @ y @ kernel
    chol = sla.cholesky((gram + gram.T) / 2, lower=True)
    t0 = sla.cho_solve((chol, True), kernel.T @ y @ diff)
    residual = diff - kernel @ t0
    q_perp = max(float(residual @ y @ residual), 0.0)

    remaining = spec.radius ** 2 - q_perp
    sub_spec = None
    if remaining > 0:
        sub_spec = EllipsoidSpec(gram_chol=chol, center=t0, radius=math.sqrt(remaining))
    return SublatticeReduction(kernel=kernel, gram_chol=chol, center=t0, q_perp=q_perp, spec=sub_spec)


def enum_affine_sublattice(particular, kernel_basis, spec, capacity=None, chunk_size=None):
    """
    Points particular + sum c_i k_i (c_i integer) lying in an ellipsoid

    Args:
        particular: Integer vector
        kernel_basis (list): Linearly independent integer vectors
        spec (EllipsoidSpec): Ellipsoid in ambient coordinates
        capacity (int): Point limit
        chunk_size (int): Chunk size

    Yields:
        numpy.ndarray: int64 arrays of shape (k, g)
    """
    p = np.asarray(particular, dtype=np.int64).ravel()
    reduction = reduce_sublattice(p, kernel_basis, spec)
    r2_filter = spec.radius ** 2 * (1 + FILTER_SLACK)

    if not kernel_basis:
        if reduction.q_perp <= r2_filter:
            yield p.reshape(1, -1).copy()
        return
    if reduction.spec is None:
        return

    kernel = np.array(kernel_basis, dtype=np.int64).reshape(len(kernel_basis), -1)
    for coeffs in enum_ellipsoid(reduction.spec, capacity=capacity, chunk_size=chunk_size):
        pts = p + coeffs @ kernel
        pts = pts[spec.quadratic_form(pts) <= r2_filter]
        if pts.shape[0]:
            yield pts
