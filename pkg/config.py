# Configuration settings for the theta function toolkit

# Default settings
DEFAULT_SETTINGS = {
    # Series evaluation settings
    'tol': 1e-10,
    'capacity_limit': 10**8,  # lattice points per enumeration
    'chunk_size': 4096,
    'symmetry_tolerance': 1e-9,  # relative
    'compatibility_tolerance': 1e-10,

    # Verification settings
    'tol_accept': 1e-8,  # expansion identity
    'ckp_accept': 1e-7,  # Jacobi vs Prym form of the CKP solution
    'expand_samples': 5,
    'ckp_instances': 1,

    # Instance generation settings
    'kind': 'prym',
    'g': 1,
    'n': 1,
    'g_tilde': None,
    'seed': 0,

    # Toda chain settings
    'toda_x0': [1.0, 1.0, 1.0],
    'toda_y0': [0.1, -0.2, 0.1],
    'toda_tend': 1.0,
    'toda_rtol': 1e-10,
    'toda_samples': 101,
    'toda_mode': 'auto',
    'lax_mus': [1.0, -1.0, 2.0],
    'isospectral_mu': [1.0, 0.3],  # 1 + 0.3i
    'drift_factor': 100.0,  # allowed drift is drift_factor * rtol

    # Output and persistence settings
    'format': 'json',
    'database_url': None,
    'log_level': 'WARNING',
    'log_file': None,
}

# Allowed ranges
TOL_RANGE = (1e-14, 1e-2)
RTOL_RANGE = (1e-12, 1e-4)

# Available commands
AVAILABLE_COMMANDS = [
    'theta-eval',
    'expand-verify',
    'gen-instance',
    'toda-run',
    'ckp-compare',
]

# Instance kinds understood by the generator
INSTANCE_KINDS = [
    'generic',
    'prym',
]

# Output formats
OUTPUT_FORMATS = [
    'json',
    'csv',
]

# Toda integration modes
TODA_MODES = [
    'auto',    # state mode unless the Lax self-test fails
    'state',   # H from A(X(t), Y(t))
    'matrix',  # H from the matrix flow dA/dt = [A, B(A)]
]
