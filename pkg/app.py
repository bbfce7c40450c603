"""Command-line front end.

    abelfn theta-eval | expand-verify | gen-instance | toda-run | ckp-compare [flags]

stdout carries JSON (one object per line); diagnostics go to stderr. Exit codes: 0 success,
1 a verified property failed, 2 invalid input.
"""

import argparse
import logging
import sys
from dataclasses import dataclass, field

import numpy as np

from ckp import flow_data_from_json
from config import AVAILABLE_COMMANDS, DEFAULT_SETTINGS, INSTANCE_KINDS, OUTPUT_FORMATS, TODA_MODES, TOL_RANGE
from errors import (AbelfnError, DenominatorNearZero, FitResidualTooLarge, NearThetaZero, PositivityLost,
                    TrajectoryBlowUp)
from linalg import matrix_from_json
from restriction import generate_instance, instance_from_json, instance_to_json
from theta import Characteristic, theta, theta_dderiv
from toda import TodaState, simulate, trajectory_frame
from utils import (complex_vector_from_json, dumps_json, load_config, pair_to_complex, parse_vector,
                   read_json_input, setup_logging)
from verifier import results_frame, run_ckp_comparison, run_expansion_check, seeded_flow_data

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2

# Errors that mean the computation ran but the checked property does not hold
PROPERTY_ERRORS = (PositivityLost, TrajectoryBlowUp, FitResidualTooLarge, NearThetaZero, DenominatorNearZero)


@dataclass
class RunConfig:
    """Resolved settings of one CLI run

    Attributes:
        command (str): One of AVAILABLE_COMMANDS
        input_path (str): Input file path or inline JSON
        tol (float): Series tolerance, within TOL_RANGE
        seed (int): Random seed
        output_path (str): Optional output file
        format (str): 'json' or 'csv'
        database_url (str): SQLAlchemy URL for run records, or None
        settings (dict): Merged configuration (defaults, file, database, flags)
    """
    command: str
    input_path: str = None
    tol: float = DEFAULT_SETTINGS['tol']
    seed: int = 0
    output_path: str = None
    format: str = 'json'
    database_url: str = None
    settings: dict = field(default_factory=lambda: dict(DEFAULT_SETTINGS))

    def __post_init__(self):
        if self.command not in AVAILABLE_COMMANDS:
            raise ValueError(f"Unknown command {self.command!r}")
        if not TOL_RANGE[0] <= self.tol <= TOL_RANGE[1]:
            raise ValueError(f"tol must lie in [{TOL_RANGE[0]:.0e}, {TOL_RANGE[1]:.0e}], got {self.tol}")
        if self.seed is None or int(self.seed) < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed}")
        if self.format not in OUTPUT_FORMATS:
            raise ValueError(f"Unknown format {self.format!r}")
        self.seed = int(self.seed)

    def get(self, key):
        return self.settings.get(key, DEFAULT_SETTINGS.get(key))


def build_parser():
    parser = argparse.ArgumentParser(prog='abelfn', description="Theta functions of abelian varieties")
    parser.add_argument('--config', help="JSON configuration file")
    parser.add_argument('--db', dest='database_url', help="SQLAlchemy URL for run records")
    parser.add_argument('--log-level', dest='log_level', help="Logging level (default WARNING)")
    parser.add_argument('--log-file', dest='log_file', help="Also log to this file")
    parser.add_argument('--tol', type=float, help="Series tolerance")
    parser.add_argument('--seed', type=int, help="Random seed")
    parser.add_argument('--output', dest='output_path', help="Output file")
    parser.add_argument('--format', choices=OUTPUT_FORMATS, help="Output file format")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('theta-eval', help="Evaluate theta[a, b](z | Omega)")
    p.add_argument('--input', dest='input_path', required=True,
                   help="JSON file or inline JSON with characteristic, z, omega and optional dirs")

    p = sub.add_parser('expand-verify', help="Check the restriction identity on an instance")
    p.add_argument('--input', dest='input_path', required=True, help="Instance JSON")
    p.add_argument('--samples', type=int, dest='expand_samples')
    p.add_argument('--tol-accept', type=float, dest='tol_accept')

    p = sub.add_parser('gen-instance', help="Generate a random admissible instance")
    p.add_argument('--kind', choices=INSTANCE_KINDS)
    p.add_argument('--g', type=int)
    p.add_argument('--n', type=int)
    p.add_argument('--gtilde', type=int, dest='g_tilde')

    p = sub.add_parser('toda-run', help="Integrate the g2 Toda chain")
    p.add_argument('--x0', dest='toda_x0', type=parse_vector)
    p.add_argument('--y0', dest='toda_y0', type=parse_vector)
    p.add_argument('--tend', dest='toda_tend', type=float)
    p.add_argument('--rtol', dest='toda_rtol', type=float)
    p.add_argument('--samples', dest='toda_samples', type=int)
    p.add_argument('--mode', dest='toda_mode', choices=TODA_MODES)

    p = sub.add_parser('ckp-compare', help="Compare Jacobi and Prym forms of the CKP solution")
    p.add_argument('--input', dest='input_path', help="FlowData JSON (object or list)")
    p.add_argument('--g', type=int)
    p.add_argument('--n', type=int)
    p.add_argument('--instances', type=int, dest='ckp_instances')
    return parser


def resolve_config(args):
    """
    Merge defaults, configuration file, database configuration and command-line flags

    Args:
        args (argparse.Namespace): Parsed arguments

    Returns:
        RunConfig: Validated run configuration
    """
    settings = load_config(args.config, args.database_url)
    for key, value in vars(args).items():
        if value is not None and key not in ('config', 'command'):
            settings[key] = value
    return RunConfig(
        command=args.command,
        input_path=getattr(args, 'input_path', None),
        tol=float(settings['tol']),
        seed=settings['seed'],
        output_path=settings.get('output_path'),
        format=settings.get('format', 'json'),
        database_url=settings.get('database_url'),
        settings=settings,
    )


def emit(obj):
    print(dumps_json(obj))


def write_rows(cfg, rows):
    if not cfg.output_path:
        return
    if cfg.format == 'csv':
        results_frame(rows).to_csv(cfg.output_path, index=False)
    else:
        with open(cfg.output_path, 'w') as f:
            f.write(dumps_json(rows) + "\n")


def _omega_from_json(obj):
    if isinstance(obj, dict):
        return matrix_from_json(obj)
    return np.array([[pair_to_complex(v) for v in row] for row in obj], dtype=complex)


def cmd_theta_eval(cfg):
    data = read_json_input(cfg.input_path)
    for key in ('characteristic', 'z', 'omega'):
        if key not in data:
            raise ValueError(f"Input is missing the {key!r} field")
    ch = Characteristic.from_json(data['characteristic'])
    z = complex_vector_from_json(data['z'])
    omega = _omega_from_json(data['omega'])
    dirs = data.get('dirs')
    if dirs:
        value = theta_dderiv(ch, z, omega, [complex_vector_from_json(d) for d in dirs], cfg.tol)
    else:
        value = theta(ch, z, omega, cfg.tol)
    summary = value.to_json()
    emit(summary)
    return EXIT_OK, summary


def cmd_expand_verify(cfg):
    data = read_json_input(cfg.input_path)
    # Compatibility of Omega~ is checked by the identity itself
    emb = instance_from_json(data, strict=False)
    results = run_expansion_check(emb, samples=int(cfg.get('expand_samples')), tol=cfg.tol,
                                  tol_accept=float(cfg.get('tol_accept')), seed=cfg.seed)
    for row in results['rows']:
        emit(row)
    summary = results['summary']
    emit(summary)
    write_rows(cfg, results['rows'])
    return (EXIT_OK if summary['passed'] else EXIT_FAILED), summary


def cmd_gen_instance(cfg):
    kind = cfg.get('kind')
    emb = generate_instance(n=cfg.get('n'), g_tilde=cfg.get('g_tilde'), kind=kind, seed=cfg.seed,
                            g=cfg.get('g') if kind == 'prym' else None)
    obj = instance_to_json(emb)
    if cfg.output_path:
        with open(cfg.output_path, 'w') as f:
            f.write(dumps_json(obj) + "\n")
    else:
        emit(obj)
    if cfg.database_url:
        from database import save_instance
        save_instance(obj, cfg.database_url)
    return EXIT_OK, {'kind': emb.kind, 'n': emb.n, 'g_tilde': emb.g_tilde, 'seed': cfg.seed}


def cmd_toda_run(cfg):
    s0 = TodaState(x=cfg.get('toda_x0'), y=cfg.get('toda_y0'))
    rtol = float(cfg.get('toda_rtol'))
    run = simulate(s0, float(cfg.get('toda_tend')), rtol, samples=int(cfg.get('toda_samples')),
                   mode=cfg.get('toda_mode'), mus=tuple(cfg.get('lax_mus')),
                   isospectral_mu=complex(*cfg.get('isospectral_mu')))
    if cfg.output_path:
        frame = trajectory_frame(run.trajectory)
        if cfg.format == 'csv':
            frame.to_csv(cfg.output_path, index=False, float_format='%.17g')
        else:
            with open(cfg.output_path, 'w') as f:
                f.write(dumps_json(frame.to_dict(orient='records')) + "\n")
    passed = run.passed(float(cfg.get('drift_factor')))
    summary = dict(run.report, passed=passed)
    emit(summary)
    return (EXIT_OK if passed else EXIT_FAILED), summary


def cmd_ckp_compare(cfg):
    if cfg.input_path:
        data = read_json_input(cfg.input_path)
        items = data if isinstance(data, list) else [data]
        flow_data = [flow_data_from_json(obj) for obj in items]
    else:
        flow_data = seeded_flow_data(int(cfg.get('g')), int(cfg.get('n')), seed=cfg.seed,
                                     instances=int(cfg.get('ckp_instances')))
    results = run_ckp_comparison(flow_data, tol=cfg.tol, accept=float(cfg.get('ckp_accept')))
    for row in results['rows']:
        emit(row)
    summary = results['summary']
    emit(summary)
    write_rows(cfg, results['rows'])
    return (EXIT_OK if summary['passed'] else EXIT_FAILED), summary


COMMANDS = {
    'theta-eval': cmd_theta_eval,
    'expand-verify': cmd_expand_verify,
    'gen-instance': cmd_gen_instance,
    'toda-run': cmd_toda_run,
    'ckp-compare': cmd_ckp_compare,
}


def record_run(cfg, exit_code, summary):
    from database import save_run
    try:
        save_run({'command': cfg.command, 'seed': cfg.seed, 'tol': cfg.tol, 'exit_code': exit_code,
                  'summary': summary, 'config': cfg.settings}, cfg.database_url)
    except Exception as e:
        logger.error("Could not record run: %s", e)


def main(argv=None):
    """
    Run one command

    Args:
        argv (list): Arguments without the program name, default sys.argv[1:]

    Returns:
        int: Exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID

    setup_logging(args.log_level or DEFAULT_SETTINGS['log_level'], args.log_file)
    try:
        cfg = resolve_config(args)
    except (ValueError, TypeError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID

    summary = {}
    try:
        exit_code, summary = COMMANDS[cfg.command](cfg)
    except PROPERTY_ERRORS as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        exit_code = EXIT_FAILED
        summary = {'error': type(e).__name__, 'message': str(e)}
    except (AbelfnError, ValueError, TypeError, KeyError, OSError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        exit_code = EXIT_INVALID
        summary = {'error': type(e).__name__, 'message': str(e)}

    if cfg.database_url:
        record_run(cfg, exit_code, summary)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
