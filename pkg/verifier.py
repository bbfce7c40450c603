import logging

import numpy as np
import pandas as pd

from ckp import ckp_v_jacobi, ckp_v_prym, generate_flow_data, relative_difference
from config import DEFAULT_SETTINGS
from errors import CapacityExceeded, NearThetaZero
from restriction import as_prym_spec, coeffs_prym_eq6, coeffs_thm2, verify_expansion
from utils import complex_to_pair, complex_vector_to_json

logger = logging.getLogger(__name__)


def random_samples(emb, count, seed=0):
    """
    Random (z, gamma) pairs for an embedding

    Args:
        emb (EmbeddingData): Embedding
        count (int): Number of samples
        seed (int): Random seed

    Returns:
        list: (z, gamma) tuples of complex vectors
    """
    rng = np.random.default_rng([seed, 2])
    samples = []
    for _ in range(count):
        z = rng.uniform(-0.5, 0.5, emb.n) + 1j * rng.uniform(-0.2, 0.2, emb.n)
        gamma = rng.uniform(-0.5, 0.5, emb.g_tilde) + 1j * rng.uniform(-0.2, 0.2, emb.g_tilde)
        samples.append((z, gamma))
    return samples


def run_expansion_check(emb, samples=None, tol=None, tol_accept=None, seed=0):
    """
    Check the restriction identity on random samples

    Prym instances also report the largest disagreement between the general and the direct
    coefficient formulas.

    Args:
        emb (EmbeddingData): Embedding
        samples (int): Number of random (z, gamma) samples
        tol (float): Series tolerance
        tol_accept (float): Acceptance threshold on rel_err
        seed (int): Random seed

    Returns:
        dict: Results with per-sample rows and summary statistics
    """
    if samples is None:
        samples = DEFAULT_SETTINGS['expand_samples']
    if tol is None:
        tol = DEFAULT_SETTINGS['tol']
    if tol_accept is None:
        tol_accept = DEFAULT_SETTINGS['tol_accept']

    rows = []
    for index, (z, gamma) in enumerate(random_samples(emb, samples, seed)):
        check = verify_expansion(emb, gamma, z, tol)
        rows.append({
            'sample': index,
            'z': complex_vector_to_json(z),
            'gamma': complex_vector_to_json(gamma),
            'lhs': complex_to_pair(check.lhs.value),
            'rhs': complex_to_pair(check.rhs.value),
            'rel_err': check.rel_err,
            'absolute': check.absolute,
            'passed': check.passed(tol_accept),
        })
        logger.debug("Sample %d: rel_err %.3e", index, check.rel_err)

    failures = len([r for r in rows if not r['passed']])
    max_rel_err = max((r['rel_err'] for r in rows), default=0.0)
    summary = {
        'command': 'expand-verify',
        'kind': emb.kind,
        'n': emb.n,
        'g_tilde': emb.g_tilde,
        'samples': len(rows),
        'failures': failures,
        'max_rel_err': max_rel_err,
        'tol_accept': tol_accept,
        'passed': failures == 0,
    }
    if emb.prym_shape is not None and rows:
        # both coefficient paths at the first sample shift
        cross = run_coefficient_crosscheck(emb, random_samples(emb, 1, seed)[0][1], tol)['summary']
        summary['coefficient_max_rel_err'] = cross['max_rel_err']
        if cross['max_rel_err'] > tol_accept:
            logger.warning("Coefficient paths disagree: max rel_err %.3e", cross['max_rel_err'])
    logger.info("Expansion check on %s instance: max rel_err %.3e over %d samples",
                emb.kind, max_rel_err, len(rows))
    return {'rows': rows, 'summary': summary}


def run_coefficient_crosscheck(emb, gamma, tol=None):
    """
    Compare the general coefficient path with the direct Prym formula, coset by coset

    Args:
        emb (EmbeddingData): Prym embedding
        gamma: Ambient shift
        tol (float): Series tolerance

    Returns:
        dict: {rows, summary} with per-coset relative differences
    """
    if tol is None:
        tol = DEFAULT_SETTINGS['tol']
    spec = as_prym_spec(emb)
    general = coeffs_thm2(emb, gamma, tol)
    direct = coeffs_prym_eq6(spec, gamma, tol)

    rows = []
    for eps, c in direct.items():
        ref = general[eps]
        rows.append({
            'eps': list(eps.rep),
            'general': complex_to_pair(ref.value),
            'direct': complex_to_pair(c.value),
            'rel_err': relative_difference(ref.value, c.value),
        })
    summary = {'cosets': len(rows), 'max_rel_err': max((r['rel_err'] for r in rows), default=0.0)}
    return {'rows': rows, 'summary': summary}


def run_ckp_comparison(flow_data, tol=None, accept=None):
    """
    Compare the Jacobi and Prym forms of the CKP solution on each flow data item

    Samples at a theta zero are skipped and counted.

    Args:
        flow_data (list): FlowData items
        tol (float): Series tolerance
        accept (float): Acceptance threshold on rel_err

    Returns:
        dict: Results with per-instance rows and summary statistics
    """
    if tol is None:
        tol = DEFAULT_SETTINGS['tol']
    if accept is None:
        accept = DEFAULT_SETTINGS['ckp_accept']

    rows = []
    skipped = 0
    for index, data in enumerate(flow_data):
        try:
            v_jacobi = ckp_v_jacobi(data, tol)
            v_prym = ckp_v_prym(data, tol)
        except (NearThetaZero, CapacityExceeded) as e:
            skipped += 1
            logger.warning("Skipping instance %d: %s: %s", index, type(e).__name__, e)
            rows.append({'instance': index, 'skipped': type(e).__name__})
            continue
        rel_err = relative_difference(v_jacobi, v_prym)
        rows.append({
            'instance': index,
            'v_jacobi': complex_to_pair(v_jacobi),
            'v_prym': complex_to_pair(v_prym),
            'rel_err': rel_err,
            'passed': rel_err <= accept,
        })

    evaluated = [r for r in rows if 'rel_err' in r]
    failures = len([r for r in evaluated if not r['passed']])
    summary = {
        'command': 'ckp-compare',
        'instances': len(rows),
        'evaluated': len(evaluated),
        'skipped': skipped,
        'skip_rate': skipped / len(rows) if rows else 0.0,
        'failures': failures,
        'max_rel_err': max((r['rel_err'] for r in evaluated), default=0.0),
        'ckp_accept': accept,
        'passed': failures == 0 and len(evaluated) > 0,
    }
    return {'rows': rows, 'summary': summary}


def seeded_flow_data(g, n, seed=0, instances=1):
    """FlowData on consecutive seeds starting at `seed`"""
    return [generate_flow_data(g, n, seed=seed + k) for k in range(instances)]


def results_frame(rows):
    """
    Per-sample rows as a DataFrame, complex pairs split into _re and _im columns

    Args:
        rows (list): Row dicts

    Returns:
        pandas.DataFrame: One row per sample
    """
    flat = []
    for row in rows:
        out = {}
        for key, value in row.items():
            if isinstance(value, list) and len(value) == 2 and all(isinstance(v, float) for v in value):
                out[f"{key}_re"], out[f"{key}_im"] = value
            elif isinstance(value, list):
                out[key] = ' '.join(str(v) for v in value)
            else:
                out[key] = value
        flat.append(out)
    return pd.DataFrame(flat)
