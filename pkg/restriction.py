"""Restriction of a principally polarized theta function to an abelian subvariety.

An embedding phi(z) = Phi z of an n-dimensional torus with period matrix Omega and polarization
Delta into a g~-dimensional principally polarized one with period matrix Omega~ gives

    theta(Phi z - gamma | Omega~) = sum over eps of c_eps theta[Delta^-1 eps, 0](z - P^T gamma | Omega)

with c_eps a Gaussian sum over the affine lattice {m : Delta Phi^T m = eps}. The Prym case
(Phi halves the first and last blocks) has an explicit parametrization of that lattice.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import linalg as sla

from config import DEFAULT_SETTINGS
from errors import (CompatibilityViolation, DegenerateSeed, DimensionMismatch, InvalidCoset, NoSolution,
                    NotPositiveDefinite)
from lattice import (CosetIndex, EllipsoidSpec, delta_diagonal, enum_affine_sublattice, enum_cosets, enum_ellipsoid,
                     reduce_sublattice)
from linalg import as_int_rows, matrix_from_json, matrix_to_json, solve_affine_integer, validate_period_matrix
from theta import (TWO_PI_I, Characteristic, ThetaValue, gaussian_tail_bound, initial_radius, theta, theta_dderiv,
                   to_fraction)

logger = logging.getLogger(__name__)

# Compatibility condition names reported by CompatibilityViolation
PT_PHI_IDENTITY = 'P^T Phi = I'
PHI_DELTA_INTEGRAL = 'Phi Delta integral'
PHI_OMEGA_COMPATIBLE = 'Phi Omega = Omega~ P'
SMALL_OMEGA_POSITIVE = 'Im(P^T Omega~ P) positive definite'

# Both sides below this magnitude switch verify_expansion to absolute error
NEAR_ZERO = 1e-20
NEAR_ZERO_ABS_TOL = 1e-12
REL_ERR_FLOOR = 1e-30

MAX_SEED_TRIES = 10
MAX_CONDITION = 1e8


def as_fraction_matrix(m):
    """Nested sequence of rationals (numbers, 'p/q' strings or [p, q] pairs) as a tuple of tuples"""
    rows = m.tolist() if isinstance(m, np.ndarray) else m
    out = []
    for row in rows:
        if not isinstance(row, (list, tuple)):
            raise DimensionMismatch("Phi must be a matrix")
        out.append(tuple(to_fraction(x) for x in row))
    if len({len(r) for r in out}) > 1:
        raise DimensionMismatch("Phi rows differ in length")
    return tuple(out)


@dataclass(frozen=True)
class EmbeddingData:
    """Embedding data (Omega~, Phi, P, Delta) with the derived period matrix Omega = P^T Omega~ P

    Attributes:
        big_omega (PeriodMatrix): Ambient period matrix, g~ x g~
        phi (tuple): Exact rational g~ x n matrix
        p (numpy.ndarray): Integer g~ x n matrix
        delta (tuple): Polarization type of the subvariety
        small_omega (PeriodMatrix): P^T Omega~ P
        kind (str): 'generic', 'prym' or 'custom'
        seed (int): Generator seed, when generated
        prym_shape (tuple): (g, n) for Prym instances
        violations (tuple): Floating compatibility conditions that failed in non-strict mode
    """
    big_omega: object
    phi: tuple
    p: np.ndarray
    delta: tuple
    small_omega: object
    kind: str = 'custom'
    seed: object = None
    prym_shape: object = None
    violations: tuple = field(default=())

    @property
    def g_tilde(self):
        return self.big_omega.dim

    @property
    def n(self):
        return len(self.delta)

    @property
    def phi_float(self):
        return np.array([[float(x) for x in row] for row in self.phi], dtype=float)

    @property
    def delta_phi_t(self):
        """Delta Phi^T as Python ints"""
        return [[int(self.phi[i][j] * self.delta[j]) for i in range(self.g_tilde)] for j in range(self.n)]

    def small_gamma(self, gamma):
        return self.p.T.astype(float) @ np.asarray(gamma, dtype=complex)


def build_embedding(big_omega, phi, p, delta, strict=True, tolerance=None, kind='custom', seed=None,
                    prym_shape=None):
    """
    Check the compatibility conditions and derive the subvariety period matrix

    Args:
        big_omega: Ambient period matrix
        phi: Rational g~ x n matrix
        p: Integer g~ x n matrix
        delta: Polarization type of the subvariety
        strict (bool): Raise on Phi Omega != Omega~ P instead of recording it
        tolerance (float): Relative tolerance of the floating condition

    Returns:
        EmbeddingData: Validated embedding
    """
    if tolerance is None:
        tolerance = DEFAULT_SETTINGS['compatibility_tolerance']
    big = validate_period_matrix(big_omega)
    gt = big.dim
    phi = as_fraction_matrix(phi)
    p_rows = as_int_rows(p)
    diag = delta_diagonal(delta)
    n = len(diag)

    if len(phi) != gt or any(len(row) != n for row in phi):
        raise DimensionMismatch(f"Phi must be {gt}x{n}")
    if len(p_rows) != gt or any(len(row) != n for row in p_rows):
        raise DimensionMismatch(f"P must be {gt}x{n}")

    # Exact conditions
    for i in range(n):
        for j in range(n):
            entry = sum(p_rows[k][i] * phi[k][j] for k in range(gt))
            if entry != (1 if i == j else 0):
                raise CompatibilityViolation(PT_PHI_IDENTITY, f"entry ({i}, {j}) is {entry}")
    for i in range(gt):
        for j in range(n):
            if (phi[i][j] * diag[j]).denominator != 1:
                raise CompatibilityViolation(PHI_DELTA_INTEGRAL, f"entry ({i}, {j}) is {phi[i][j] * diag[j]}")

    p_arr = np.array(p_rows, dtype=np.int64).reshape(gt, n)
    p_float = p_arr.astype(float)
    small = p_float.T @ big.omega @ p_float
    try:
        small_pm = validate_period_matrix(small)
    except NotPositiveDefinite as e:
        raise CompatibilityViolation(SMALL_OMEGA_POSITIVE, str(e))

    phi_float = np.array([[float(x) for x in row] for row in phi], dtype=float)
    lhs = phi_float @ small_pm.omega
    rhs = big.omega @ p_float
    mismatch = float(np.max(np.abs(lhs - rhs)))
    allowed = tolerance * max(float(np.max(np.abs(rhs))), 1.0)
    violations = ()
    if mismatch > allowed:
        if strict:
            raise CompatibilityViolation(PHI_OMEGA_COMPATIBLE, f"mismatch {mismatch:.3e}")
        logger.warning("Embedding fails %s (mismatch %.3e), continuing in non-strict mode",
                       PHI_OMEGA_COMPATIBLE, mismatch)
        violations = (PHI_OMEGA_COMPATIBLE,)

    return EmbeddingData(big_omega=big, phi=phi, p=p_arr, delta=diag, small_omega=small_pm, kind=kind,
                         seed=seed, prym_shape=prym_shape, violations=violations)


# Prym varieties

def prym_matrices(g, n):
    """
    Phi, P and Delta of the isomorphism between C^{g+n} / Lambda and the Prym variety

    Phi(z) = (z_1/2, ..., z_g/2, z_{g+1}, ..., z_{g+n}, z_1/2, ..., z_g/2)

    Args:
        g (int): Genus of the base surface, at least 1
        n (int): Number of additional dimensions, at least 1

    Returns:
        tuple: (phi as tuple of Fraction rows, p as int64 array, delta tuple)
    """
    if g < 1 or n < 1:
        raise ValueError(f"Prym data needs g >= 1 and n >= 1, got g={g}, n={n}")
    gt = 2 * g + n
    phi = [[Fraction(0)] * (g + n) for _ in range(gt)]
    p = np.zeros((gt, g + n), dtype=np.int64)
    for j in range(g):
        phi[j][j] = Fraction(1, 2)
        phi[g + n + j][j] = Fraction(1, 2)
        p[j, j] = 1
        p[g + n + j, j] = 1
    for j in range(n):
        phi[g + j][g + j] = Fraction(1)
        p[g + j, g + j] = 1
    delta = (2,) * g + (1,) * n
    return tuple(tuple(row) for row in phi), p, delta


@dataclass(frozen=True)
class PrymSpec:
    """Prym instance: ambient period matrix of size 2g + n with the Prym embedding"""
    g: int
    n: int
    embedding: EmbeddingData

    @property
    def big_omega(self):
        return self.embedding.big_omega

    @property
    def pi(self):
        return self.embedding.small_omega

    @property
    def delta(self):
        return self.embedding.delta

    def gamma_tilde(self, gamma):
        """(gamma_1 + gamma~_1, ..., gamma_g + gamma~_g, gamma_{g+1}, ..., gamma_{g+n})"""
        return self.embedding.small_gamma(gamma)

    def u_tilde(self, u):
        """(2 U_1, ..., 2 U_g, U_{g+1}, ..., U_{g+n}) for a Prym-shaped direction U"""
        u = np.asarray(u, dtype=complex)
        return np.concatenate([2 * u[:self.g], u[self.g:self.g + self.n]])


def prym_spec(big_omega, g, n, strict=True):
    """
    Build the Prym embedding for a (2g + n)-dimensional ambient period matrix

    Args:
        big_omega: Ambient period matrix
        g (int): Base genus
        n (int): Number of additional dimensions
        strict (bool): As in build_embedding

    Returns:
        PrymSpec: Prym instance
    """
    phi, p, delta = prym_matrices(g, n)
    pm = validate_period_matrix(big_omega)
    if pm.dim != 2 * g + n:
        raise DimensionMismatch(f"Prym data with g={g}, n={n} needs a {2 * g + n}x{2 * g + n} matrix")
    emb = build_embedding(pm, phi, p, delta, strict=strict, kind='prym', prym_shape=(g, n))
    return PrymSpec(g=g, n=n, embedding=emb)


def as_prym_spec(emb):
    """PrymSpec view of an EmbeddingData generated with the Prym shape"""
    if isinstance(emb, PrymSpec):
        return emb
    if emb.prym_shape is None:
        raise ValueError("Embedding does not carry a Prym shape")
    g, n = emb.prym_shape
    return PrymSpec(g=g, n=n, embedding=emb)


# Expansion coefficients

@dataclass(frozen=True)
class CoeffVector:
    """Coefficients c_eps of the restriction expansion

    Attributes:
        delta (tuple): Polarization type
        gamma (numpy.ndarray): Ambient shift
        small_gamma (numpy.ndarray): P^T gamma
        coeffs (dict): CosetIndex -> ThetaValue, in lexicographic order
        tol (float): Requested relative tolerance
    """
    delta: tuple
    gamma: np.ndarray
    small_gamma: np.ndarray
    coeffs: dict
    tol: float

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, eps):
        if not isinstance(eps, CosetIndex):
            eps = CosetIndex(delta=self.delta, rep=tuple(eps))
        return self.coeffs[eps]

    def items(self):
        return self.coeffs.items()

    def to_json(self):
        return {
            'delta': list(self.delta),
            'coeffs': {','.join(str(e) for e in eps.rep): [c.value.real, c.value.imag, c.tail_bound]
                       for eps, c in self.coeffs.items()},
        }


def coeffs_to_json(coeffs):
    """{delta, coeffs: {"e1,e2,...": [re, im, tail_bound]}}"""
    return coeffs.to_json()


def _gamma_vector(gamma, length):
    gamma = np.asarray(gamma, dtype=complex).ravel()
    if gamma.shape[0] != length:
        raise DimensionMismatch(f"gamma has length {gamma.shape[0]}, expected {length}")
    return gamma


def _coset_constant(emb, eps, gamma):
    # 2 pi i <eps, Delta^-1 P^T gamma> - pi i <Delta^-1 eps, Omega Delta^-1 eps>
    e = np.array([float(x) for x in eps.fraction])
    return TWO_PI_I * np.dot(e, emb.small_gamma(gamma)) - 1j * math.pi * (e @ emb.small_omega.omega @ e)


def _subradius(diag_t, tol):
    radius = initial_radius(len(diag_t), tol)
    while gaussian_tail_bound(diag_t, radius) > tol:
        radius += 0.5
    return radius


def coefficient_thm2(emb, gamma, eps, tol=None, capacity=None, chunk_size=None):
    """
    One expansion coefficient from the affine lattice {m : Delta Phi^T m = eps}

    Args:
        emb (EmbeddingData): Embedding
        gamma: Ambient shift, length g~
        eps (CosetIndex): Coset
        tol (float): Relative tolerance

    Returns:
        ThetaValue: c_eps (zero with zero tail when the lattice is empty)
    """
    if tol is None:
        tol = DEFAULT_SETTINGS['tol']
    gamma = _gamma_vector(gamma, emb.g_tilde)
    try:
        particular, kernel = solve_affine_integer(emb.delta_phi_t, eps.rep)
    except NoSolution:
        logger.debug("Coset %s has an empty lattice", eps.rep)
        return ThetaValue(value=0j, tail_bound=0.0, scale=0.0)

    big = emb.big_omega
    om = big.omega
    center = big.solve_imag(gamma.imag)
    log_peak = math.pi * float(gamma.imag @ center)
    const = _coset_constant(emb, eps, gamma)

    def exponent(pts):
        m = pts.astype(float)
        return 1j * math.pi * np.einsum('ij,jk,ik->i', m, om, m) - TWO_PI_I * (m @ gamma)

    unit = EllipsoidSpec(gram_chol=big.chol_im, center=center, radius=1.0)
    reduction = reduce_sublattice(particular, kernel, unit)
    log_scale = log_peak - math.pi * reduction.q_perp + const.real

    if not kernel:
        value = complex(np.exp(exponent(particular.reshape(1, -1))[0] + const))
        return ThetaValue(value=value, tail_bound=0.0, scale=math.exp(log_scale))

    sub_diag = np.diag(reduction.gram_chol)
    rho = _subradius(sub_diag, tol)
    radius = math.sqrt(reduction.q_perp + rho * rho)
    spec = EllipsoidSpec(gram_chol=big.chol_im, center=center, radius=radius)

    sums = []
    for pts in enum_affine_sublattice(particular, kernel, spec, capacity=capacity, chunk_size=chunk_size):
        sums.append(complex(np.sum(np.exp(exponent(pts) + const - log_scale))))

    scale = math.exp(log_scale)
    value = scale * complex(math.fsum(s.real for s in sums), math.fsum(s.imag for s in sums))
    return ThetaValue(value=value, tail_bound=scale * gaussian_tail_bound(sub_diag, rho), scale=scale)


def coeffs_thm2(emb, gamma, tol=None, capacity=None, chunk_size=None):
    """
    All expansion coefficients of an embedding, in lexicographic coset order

    Args:
        emb (EmbeddingData): Embedding
        gamma: Ambient shift, length g~
        tol (float): Relative tolerance

    Returns:
        CoeffVector: One coefficient per coset of Z^n / Delta Z^n
    """
    if tol is None:
        tol = DEFAULT_SETTINGS['tol']
    gamma = _gamma_vector(gamma, emb.g_tilde)
    coeffs = {}
    for eps in enum_cosets(emb.delta):
        coeffs[eps] = coefficient_thm2(emb, gamma, eps, tol, capacity=capacity, chunk_size=chunk_size)
    return CoeffVector(delta=emb.delta, gamma=gamma, small_gamma=emb.small_gamma(gamma), coeffs=coeffs, tol=tol)


def prym_coefficient(spec, gamma, eps, tol=None, capacity=None, chunk_size=None):
    """
    Prym expansion coefficient summed over m in Z^g with m_eps = (m, 0, ..., 0, eps' - m)

    c_eps = sum exp(pi i <m_eps, Omega~ m_eps> + pi i <eps, gamma~> - 2 pi i <m_eps, gamma>
                    - pi i <Delta^-1 eps, Pi Delta^-1 eps>)

    Args:
        spec (PrymSpec): Prym instance
        gamma: Ambient shift, length 2g + n
        eps: CosetIndex or representative (eps_1, ..., eps_g, 0, ..., 0) with eps_j in {0, 1}
        tol (float): Relative tolerance

    Returns:
        ThetaValue: c_eps
    """
    if tol is None:
        tol = DEFAULT_SETTINGS['tol']
    g, n = spec.g, spec.n
    rep = tuple(int(x) for x in (eps.rep if isinstance(eps, CosetIndex) else eps))
    if len(rep) != g + n:
        raise InvalidCoset(f"Representative {rep} must have length {g + n}")
    if any(x != 0 for x in rep[g:]):
        raise InvalidCoset(f"Representative {rep} has a nonzero entry beyond position {g}")
    if any(x not in (0, 1) for x in rep[:g]):
        raise InvalidCoset(f"Representative {rep} must have entries in {{0, 1}}")
    eps = CosetIndex(delta=spec.delta, rep=rep)

    gamma = _gamma_vector(gamma, 2 * g + n)
    big = spec.big_omega
    om = big.omega
    y = big.imag
    gamma_t = spec.gamma_tilde(gamma)
    e = np.array([float(x) for x in eps.fraction])
    const = 1j * math.pi * np.dot(np.array(rep, dtype=float), gamma_t) - 1j * math.pi * (e @ spec.pi.omega @ e)

    # m_eps = E m + f
    emat = np.zeros((2 * g + n, g))
    emat[:g, :] = np.eye(g)
    emat[g + n:, :] = -np.eye(g)
    f = np.zeros(2 * g + n)
    f[g + n:] = rep[:g]

    # Re of the exponent is -pi [m G m + 2 m.h + c0]
    gram = emat.T @ y @ emat
    h = emat.T @ (y @ f - gamma.imag)
    c0 = float(f @ y @ f - 2 * f @ gamma.imag)
    m0 = -np.linalg.solve(gram, h)
    q_min = c0 - float(m0 @ gram @ m0)
    chol = sla.cholesky((gram + gram.T) / 2, lower=True)
    diag_t = np.diag(chol)
    radius = _subradius(diag_t, tol)

    log_scale = -math.pi * q_min + const.real
    sums = []
    for pts in enum_ellipsoid(EllipsoidSpec(gram_chol=chol, center=m0, radius=radius), capacity=capacity,
                              chunk_size=chunk_size):
        m_eps = pts.astype(float) @ emat.T + f
        exponent = (1j * math.pi * np.einsum('ij,jk,ik->i', m_eps, om, m_eps) - TWO_PI_I * (m_eps @ gamma)
                    + const - log_scale)
        sums.append(complex(np.sum(np.exp(exponent))))

    scale = math.exp(log_scale)
    value = scale * complex(math.fsum(s.real for s in sums), math.fsum(s.imag for s in sums))
    return ThetaValue(value=value, tail_bound=scale * gaussian_tail_bound(diag_t, radius), scale=scale)


def coeffs_prym_eq6(spec, gamma, tol=None, capacity=None, chunk_size=None):
    """
    Prym expansion coefficients from the explicit parametrization m_eps

    Args:
        spec (PrymSpec): Prym instance (an EmbeddingData with a Prym shape is accepted)
        gamma: Ambient shift, length 2g + n
        tol (float): Relative tolerance

    Returns:
        CoeffVector: 2^g coefficients
    """
    if tol is None:
        tol = DEFAULT_SETTINGS['tol']
    spec = as_prym_spec(spec)
    gamma = _gamma_vector(gamma, 2 * spec.g + spec.n)
    coeffs = {eps: prym_coefficient(spec, gamma, eps, tol, capacity=capacity, chunk_size=chunk_size)
              for eps in enum_cosets(spec.delta)}
    return CoeffVector(delta=spec.delta, gamma=gamma, small_gamma=spec.gamma_tilde(gamma), coeffs=coeffs, tol=tol)


def expand_sum(coeffs, small_omega, z, tol=None, dirs=None):
    """
    sum over eps of c_eps theta[Delta^-1 eps, 0](z | Omega), or its derivative along dirs

    Args:
        coeffs (CoeffVector): Coefficients
        small_omega: Subvariety period matrix
        z: Complex vector of length n (already shifted)
        tol (float): Relative tolerance of the theta evaluations
        dirs (list): Directions for a derivative, or None

    Returns:
        ThetaValue: Sum with the combined error bound
    """
    total = []
    bound = 0.0
    scale = 0.0
    for eps, c in coeffs.items():
        ch = Characteristic.from_coset(eps)
        if dirs:
            th = theta_dderiv(ch, z, small_omega, dirs, tol)
        else:
            th = theta(ch, z, small_omega, tol)
        total.append(c.value * th.value)
        bound += abs(c.value) * th.tail_bound + c.tail_bound * (abs(th.value) + th.tail_bound)
        scale += abs(c.value) * th.scale
    value = complex(math.fsum(t.real for t in total), math.fsum(t.imag for t in total))
    return ThetaValue(value=value, tail_bound=bound, scale=scale)


@dataclass(frozen=True)
class ExpansionCheck:
    """Both sides of the restriction identity at one sample

    Attributes:
        lhs (ThetaValue): theta(Phi z - gamma | Omega~)
        rhs (ThetaValue): sum of c_eps theta[Delta^-1 eps, 0](z - P^T gamma | Omega)
        rel_err (float): Relative error, or absolute error near a theta zero
        absolute (bool): True when rel_err is an absolute error
    """
    lhs: ThetaValue
    rhs: ThetaValue
    rel_err: float
    absolute: bool = False

    def passed(self, tol_accept):
        if self.absolute:
            return self.rel_err <= NEAR_ZERO_ABS_TOL
        return self.rel_err <= tol_accept


def verify_expansion(emb, gamma, z, tol=None, coeffs=None):
    """
    Evaluate both sides of the restriction identity

    Args:
        emb (EmbeddingData): Embedding
        gamma: Ambient shift, length g~
        z: Subvariety argument, length n
        tol (float): Relative tolerance of every series
        coeffs (CoeffVector): Precomputed coefficients for this gamma

    Returns:
        ExpansionCheck: lhs, rhs and their discrepancy
    """
    if tol is None:
        tol = DEFAULT_SETTINGS['tol']
    gamma = _gamma_vector(gamma, emb.g_tilde)
    z = np.asarray(z, dtype=complex).ravel()
    if z.shape[0] != emb.n:
        raise DimensionMismatch(f"z has length {z.shape[0]}, expected {emb.n}")
    if coeffs is None:
        coeffs = coeffs_thm2(emb, gamma, tol)

    lhs = theta(Characteristic.zero(emb.g_tilde), emb.phi_float @ z - gamma, emb.big_omega, tol)
    rhs = expand_sum(coeffs, emb.small_omega, z - emb.small_gamma(gamma), tol)

    diff = abs(lhs.value - rhs.value)
    if abs(lhs.value) < NEAR_ZERO and abs(rhs.value) < NEAR_ZERO:
        return ExpansionCheck(lhs=lhs, rhs=rhs, rel_err=diff, absolute=True)
    rel_err = diff / max(abs(lhs.value), abs(rhs.value), REL_ERR_FLOOR)
    return ExpansionCheck(lhs=lhs, rhs=rhs, rel_err=rel_err)


# Instance generation

def random_siegel_matrix(rng, dim, eig_range=(1.0, 2.0)):
    """Random symmetric complex matrix whose imaginary part has eigenvalues in eig_range"""
    if dim == 0:
        return np.zeros((0, 0), dtype=complex)
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    imag = q @ np.diag(rng.uniform(*eig_range, size=dim)) @ q.T
    real = rng.uniform(-0.5, 0.5, size=(dim, dim))
    real = (real + real.T) / 2
    return real + 1j * (imag + imag.T) / 2


def default_generic_matrices(n, g_tilde):
    """P = Phi = (I_n; 0)"""
    p = np.zeros((g_tilde, n), dtype=np.int64)
    p[:n, :n] = np.eye(n, dtype=np.int64)
    phi = tuple(tuple(Fraction(int(x)) for x in row) for row in p)
    return phi, p, (1,) * n


def minimal_delta(phi):
    """Smallest polarization type making Phi Delta integral (lcm of the column denominators)"""
    phi = as_fraction_matrix(phi)
    n = len(phi[0])
    return tuple(math.lcm(*(phi[i][j].denominator for i in range(len(phi)))) for j in range(n))


def generate_instance(n, g_tilde=None, kind='generic', seed=0, g=None, phi=None, p=None, delta=None):
    """
    Random embedding satisfying every compatibility condition by construction

    Omega~ = Phi Pi0 Phi^T + Z M Z^T with Z an integer basis of ker P^T, so that
    Omega~ P = Phi Pi0 and P^T Omega~ P = Pi0.

    Args:
        n (int): Subvariety dimension, or the Prym n (the subvariety then has dimension g + n)
        g_tilde (int): Ambient dimension (2g + n for Prym instances)
        kind (str): 'generic' or 'prym'
        seed (int): Random seed
        g (int): Base genus for Prym instances
        phi, p, delta: Optional generic embedding matrices

    Returns:
        EmbeddingData: Generated instance
    """
    if n is None or n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    prym_shape = None
    n_sub = n
    if kind == 'prym':
        if g is None or g < 1:
            raise ValueError(f"Prym instances need g >= 1, got {g}")
        if g_tilde is not None and g_tilde != 2 * g + n:
            raise ValueError(f"Prym instances have g~ = 2g + n = {2 * g + n}, got {g_tilde}")
        g_tilde = 2 * g + n
        phi, p, delta = prym_matrices(g, n)
        prym_shape = (g, n)
        n_sub = len(delta)
    elif kind == 'generic':
        if g_tilde is None or g_tilde <= n:
            raise ValueError(f"Generic instances need g~ > n, got g~={g_tilde}, n={n}")
        if phi is None or p is None:
            phi, p, delta = default_generic_matrices(n, g_tilde)
        phi = as_fraction_matrix(phi)
        if delta is None:
            delta = minimal_delta(phi)
    else:
        raise ValueError(f"Unknown instance kind {kind!r}")

    p_arr = np.array(as_int_rows(p), dtype=np.int64).reshape(g_tilde, n_sub)
    phi_float = np.array([[float(x) for x in row] for row in phi], dtype=float)
    _, kernel = solve_affine_integer(p_arr.T, np.zeros(n_sub, dtype=np.int64))
    z = np.array(kernel, dtype=float).reshape(len(kernel), g_tilde).T
    frame = np.hstack([phi_float, z])
    cond = np.linalg.cond(frame)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise DegenerateSeed(f"[Phi Z] is singular (condition {cond:.3e})")

    rng = np.random.default_rng(seed)
    last_error = None
    for attempt in range(MAX_SEED_TRIES):
        pi0 = random_siegel_matrix(rng, n_sub)
        m = random_siegel_matrix(rng, g_tilde - n_sub)
        big = phi_float @ pi0 @ phi_float.T + z @ m @ z.T
        try:
            emb = build_embedding(big, phi, p_arr, delta, kind=kind, seed=seed, prym_shape=prym_shape)
        except (NotPositiveDefinite, CompatibilityViolation) as e:
            last_error = e
            logger.info("Seed %s attempt %d rejected: %s", seed, attempt, e)
            continue
        logger.debug("Generated %s instance n=%d g~=%d seed=%s", kind, n_sub, g_tilde, seed)
        return emb
    raise DegenerateSeed(f"No admissible draw in {MAX_SEED_TRIES} attempts: {last_error}")


def instance_to_json(emb):
    """
    Instance file: {kind, seed, big_omega, phi ([num, den] pairs), p, delta} plus g, n for Prym data

    Args:
        emb (EmbeddingData): Embedding

    Returns:
        dict: JSON object
    """
    obj = {
        'kind': emb.kind,
        'seed': emb.seed,
        'big_omega': matrix_to_json(emb.big_omega),
        'phi': [[[x.numerator, x.denominator] for x in row] for row in emb.phi],
        'p': emb.p.tolist(),
        'delta': list(emb.delta),
    }
    if emb.prym_shape is not None:
        obj['g'], obj['n'] = emb.prym_shape
    return obj


def instance_from_json(obj, strict=True):
    """
    Read an instance file back into a validated embedding

    Args:
        obj (dict): JSON object
        strict (bool): As in build_embedding

    Returns:
        EmbeddingData: Embedding
    """
    if not isinstance(obj, dict):
        raise ValueError("Instance must be a JSON object")
    for key in ('big_omega', 'phi', 'p', 'delta'):
        if key not in obj:
            raise ValueError(f"Instance is missing the {key!r} field")
    prym_shape = (int(obj['g']), int(obj['n'])) if obj.get('kind') == 'prym' and 'g' in obj else None
    return build_embedding(matrix_from_json(obj['big_omega']), obj['phi'], obj['p'], obj['delta'], strict=strict,
                           kind=obj.get('kind', 'custom'), seed=obj.get('seed'), prym_shape=prym_shape)
