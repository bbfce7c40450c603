"""Dense complex and exact integer linear algebra.

Period matrices (points of the Siegel upper half space) with a cached Cholesky factor of
their imaginary part, Smith normal form over the integers, and affine integer system solving.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import linalg as sla

from config import DEFAULT_SETTINGS
from errors import DimensionMismatch, IntegerOverflow, NoSolution, NotPositiveDefinite, NotSymmetric

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PeriodMatrix:
    """Symmetric complex matrix with positive definite imaginary part

    Attributes:
        omega (numpy.ndarray): g x g complex matrix
        chol_im (numpy.ndarray): Lower triangular factor with Im(omega) = chol_im @ chol_im.T
    """
    omega: np.ndarray
    chol_im: np.ndarray
    lambda_min: float = field(default=0.0)

    @property
    def dim(self):
        return self.omega.shape[0]

    @property
    def imag(self):
        return self.omega.imag

    def solve_imag(self, rhs):
        """Solve Im(omega) x = rhs with the cached factor"""
        return sla.cho_solve((self.chol_im, True), np.asarray(rhs, dtype=float))


def as_complex_matrix(m):
    """
    Convert an array-like to a finite 2-D complex array

    Args:
        m: Nested sequence or numpy array

    Returns:
        numpy.ndarray: Complex matrix
    """
    m = np.array(m, dtype=complex)
    if m.ndim != 2:
        raise DimensionMismatch(f"Expected a matrix, got an array of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("Matrix entries must be finite")
    return m


def validate_period_matrix(m, symmetry_tolerance=None):
    """
    Validate a candidate period matrix and cache the Cholesky factor of its imaginary part

    Args:
        m: Square complex matrix (or an existing PeriodMatrix, returned unchanged)
        symmetry_tolerance (float): Relative asymmetry above which NotSymmetric is raised

    Returns:
        PeriodMatrix: Symmetrized matrix with its factor
    """
    if isinstance(m, PeriodMatrix):
        return m
    if symmetry_tolerance is None:
        symmetry_tolerance = DEFAULT_SETTINGS['symmetry_tolerance']

    m = as_complex_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"Period matrix must be square, got {m.shape}")

    scale = float(np.max(np.abs(m))) if m.size else 0.0
    asymmetry = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if asymmetry > symmetry_tolerance * max(scale, np.finfo(float).tiny):
        raise NotSymmetric(f"Asymmetry {asymmetry:.3e} exceeds {symmetry_tolerance:.1e} relative")

    omega = (m + m.T) / 2
    imag = omega.imag.copy()
    try:
        chol = sla.cholesky(imag, lower=True)
    except sla.LinAlgError:
        raise NotPositiveDefinite("Imaginary part is not positive definite")
    if np.any(np.diag(chol) <= 0):
        raise NotPositiveDefinite("Cholesky pivot is not positive")

    lambda_min = float(np.linalg.eigvalsh(imag)[0])
    if lambda_min <= 0:
        raise NotPositiveDefinite(f"Smallest eigenvalue {lambda_min:.3e} of the imaginary part")

    omega.setflags(write=False)
    chol.setflags(write=False)
    return PeriodMatrix(omega=omega, chol_im=chol, lambda_min=lambda_min)


def matrix_to_json(m):
    """
    Serialize a complex matrix as {"rows", "cols", "data": [[re, im], ...]} (row-major)

    Args:
        m: Complex matrix or PeriodMatrix

    Returns:
        dict: JSON object
    """
    if isinstance(m, PeriodMatrix):
        m = m.omega
    m = np.asarray(m, dtype=complex)
    return {
        'rows': int(m.shape[0]),
        'cols': int(m.shape[1]),
        'data': [[float(v.real), float(v.imag)] for v in m.ravel()],
    }


def matrix_from_json(obj):
    """
    Parse the JSON form written by matrix_to_json

    Args:
        obj (dict): JSON object

    Returns:
        numpy.ndarray: Complex matrix
    """
    rows, cols = int(obj['rows']), int(obj['cols'])
    data = obj['data']
    if len(data) != rows * cols:
        raise DimensionMismatch(f"Matrix data has {len(data)} entries, expected {rows * cols}")
    values = [complex(float(re), float(im)) for re, im in data]
    return as_complex_matrix(np.array(values, dtype=complex).reshape(rows, cols))


# Exact integer algebra. Entries are Python ints so nothing can overflow.

@dataclass(frozen=True)
class SNFResult:
    """Smith normal form u @ a @ v = d

    Attributes:
        u (numpy.ndarray): Unimodular row transform (object dtype, Python ints)
        v (numpy.ndarray): Unimodular column transform
        d (numpy.ndarray): Diagonal, nonnegative, d[i, i] divides d[i+1, i+1]
    """
    u: np.ndarray
    v: np.ndarray
    d: np.ndarray

    @property
    def diagonal(self):
        k = min(self.d.shape)
        return [int(self.d[i, i]) for i in range(k)]

    @property
    def rank(self):
        return sum(1 for x in self.diagonal if x != 0)


def as_int_rows(a):
    """
    Convert an integer array-like to a list of lists of Python ints

    Args:
        a: Integer matrix

    Returns:
        list: Rows of Python ints
    """
    rows = []
    for row in np.asarray(a, dtype=object).tolist():
        out = []
        for x in (row if isinstance(row, list) else [row]):
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise ValueError(f"Entry {x} is not an integer")
                out.append(int(x))
            elif isinstance(x, (float, np.floating)):
                if not float(x).is_integer():
                    raise ValueError(f"Entry {x} is not an integer")
                out.append(int(x))
            else:
                out.append(int(x))
        rows.append(out)
    return rows


def _identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def _swap_rows(m, i, j):
    m[i], m[j] = m[j], m[i]


def _swap_cols(m, i, j):
    for row in m:
        row[i], row[j] = row[j], row[i]


def _add_row(m, dst, src, factor):
    # row[dst] += factor * row[src]
    m[dst] = [x + factor * y for x, y in zip(m[dst], m[src])]


def _add_col(m, dst, src, factor):
    for row in m:
        row[dst] += factor * row[src]


def smith_normal_form(a):
    """
    Smith normal form of an integer matrix (any shape)

    Pivoting on the entry of smallest absolute value, clearing its row and column by
    floor division, then restoring the divisibility chain by row additions.

    Args:
        a: Integer matrix

    Returns:
        SNFResult: Transforms and diagonal with u @ a @ v = d
    """
    d = as_int_rows(a)
    m = len(d)
    n = len(d[0]) if m else 0
    u = _identity(m)
    v = _identity(n)

    for t in range(min(m, n)):
        while True:
            # Smallest nonzero entry of the trailing block
            pivot = None
            for i in range(t, m):
                for j in range(t, n):
                    if d[i][j] != 0 and (pivot is None or abs(d[i][j]) < abs(d[pivot[0]][pivot[1]])):
                        pivot = (i, j)
            if pivot is None:
                break

            i, j = pivot
            if i != t:
                _swap_rows(d, t, i)
                _swap_rows(u, t, i)
            if j != t:
                _swap_cols(d, t, j)
                _swap_cols(v, t, j)

            p = d[t][t]
            clean = True
            for i in range(t + 1, m):
                if d[i][t] != 0:
                    q = d[i][t] // p
                    _add_row(d, i, t, -q)
                    _add_row(u, i, t, -q)
                    clean = clean and d[i][t] == 0
            for j in range(t + 1, n):
                if d[t][j] != 0:
                    q = d[t][j] // p
                    _add_col(d, j, t, -q)
                    _add_col(v, j, t, -q)
                    clean = clean and d[t][j] == 0
            if not clean:
                continue

            # Divisibility chain: pull a non-multiple into row t and go again
            offender = next((i for i in range(t + 1, m) for j in range(t + 1, n) if d[i][j] % p != 0), None)
            if offender is None:
                break
            _add_row(d, t, offender, 1)
            _add_row(u, t, offender, 1)

        if t < m and t < n and d[t][t] < 0:
            d[t] = [-x for x in d[t]]
            u[t] = [-x for x in u[t]]

    return SNFResult(u=np.array(u, dtype=object).reshape(m, m),
                     v=np.array(v, dtype=object).reshape(n, n),
                     d=np.array(d, dtype=object).reshape(m, n))


def _dot(x, y):
    return sum(a * b for a, b in zip(x, y))


def size_reduce(basis):
    """
    Size-reduce an integer lattice basis by pairwise rounded projections, shortest first

    Every accepted step strictly shortens a vector, so the loop terminates.

    Args:
        basis (list): Integer vectors (lists of Python ints)

    Returns:
        list: Reduced basis sorted by squared norm
    """
    basis = [list(b) for b in basis]
    changed = True
    while changed:
        changed = False
        basis.sort(key=lambda b: (_dot(b, b), b))
        for i in range(len(basis)):
            for j in range(len(basis)):
                if i == j:
                    continue
                nn = _dot(basis[j], basis[j])
                mu = round(Fraction(_dot(basis[i], basis[j]), nn))
                if mu != 0:
                    candidate = [x - mu * y for x, y in zip(basis[i], basis[j])]
                    if _dot(candidate, candidate) < _dot(basis[i], basis[i]):
                        basis[i] = candidate
                        changed = True
    basis.sort(key=lambda b: (_dot(b, b), b))
    return basis


def reduce_against(vector, basis):
    """
    Shorten a vector modulo the lattice spanned by a size-reduced basis

    Args:
        vector (list): Integer vector
        basis (list): Integer basis vectors

    Returns:
        list: vector minus an integer combination of the basis
    """
    vector = list(vector)
    changed = True
    while changed:
        changed = False
        for b in basis:
            mu = round(Fraction(_dot(vector, b), _dot(b, b)))
            if mu != 0:
                candidate = [x - mu * y for x, y in zip(vector, b)]
                if _dot(candidate, candidate) < _dot(vector, vector):
                    vector = candidate
                    changed = True
    return vector


def solve_affine_integer(a, b):
    """
    Solve a @ m = b over the integers

    Args:
        a: Integer matrix (r x c)
        b: Integer vector of length r

    Returns:
        tuple: (particular, kernel_basis) where particular is an int64 vector and
            kernel_basis a list of int64 vectors spanning {m : a @ m = 0}

    Raises:
        NoSolution: b is not in the integer image of a
        IntegerOverflow: the reduced solution has an entry outside the int64 range
    """
    rows = as_int_rows(a)
    r = len(rows)
    c = len(rows[0]) if r else 0
    rhs = [int(x) for x in np.asarray(b, dtype=object).ravel().tolist()]
    if len(rhs) != r:
        raise DimensionMismatch(f"Right-hand side has length {len(rhs)}, expected {r}")

    snf = smith_normal_form(rows)
    u = snf.u.tolist()
    v = snf.v.tolist()
    diag = snf.diagonal
    ub = [_dot(row, rhs) for row in u]

    y = [0] * c
    for i in range(r):
        di = diag[i] if i < len(diag) else 0
        if di == 0:
            if ub[i] != 0:
                raise NoSolution(f"Right-hand side {rhs} is not in the image")
            continue
        if ub[i] % di != 0:
            raise NoSolution(f"Right-hand side {rhs} fails the divisibility test at {di}")
        y[i] = ub[i] // di

    particular = [_dot(row, y) for row in v]
    rank = snf.rank
    kernel = [[v[i][j] for i in range(c)] for j in range(rank, c)]

    kernel = size_reduce(kernel) if kernel else []
    if kernel:
        particular = reduce_against(particular, kernel)

    logger.debug("Affine system %dx%d: rank %d, kernel dimension %d", r, c, rank, len(kernel))
    return _int64_vector(particular), [_int64_vector(k) for k in kernel]


INT64_BOUNDS = (-2 ** 63, 2 ** 63 - 1)


def _int64_vector(values):
    if any(not INT64_BOUNDS[0] <= x <= INT64_BOUNDS[1] for x in values):
        raise IntegerOverflow(f"Integer solution {values} does not fit in int64")
    return np.array(values, dtype=np.int64)
