"""Command-line entry points: `python -m kahler_core <command> [options]`."""
import argparse
import csv
import json
import logging
import os
import sys
from io import StringIO

import numpy as np

from .bergman import display_order, laplacian_estimates, q_direct, q_tilde
from .config import load_config
from .core_linalg import InvariantParams, projective_distance, symmetric_eigen
from .cp1_toy import chi, lambda_mk, q_matrix_cp1, toy_trace
from .errors import ConfigError, InsufficientDecay, KahlerError
from .iteration import eta_report, fit_sigma, iterate_to_fixed_point, refine
from .k3_geometry import analytic_volume, chern_weil_volume, l_i
from .monomial_basis import k3_scheme, section_dimension
from .reference import compare_rows, load_reference, reference_ids, reference_params
from .rule_cache import RuleCache, export_rule_csv
from .utils import TOY_TABLE_ROWS

logger = logging.getLogger(__name__)

COMMANDS = ('toy', 'k3-volume', 'k3-balance', 'k3-refine', 'k3-spectrum', 'cp1-spectrum', 'k3-eta')


def _floats(text):
    return tuple(float(v) for v in text.split(',')) if text else None


def _ints(text):
    return tuple(int(v) for v in text.split(',')) if text else None


def build_parser():
    parser = argparse.ArgumentParser(prog='kahler_core',
                                     description="Balanced metrics, eta statistics and Q spectra")
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--config', help="TOML file with run parameters")
    parser.add_argument('--k', type=int)
    parser.add_argument('--variant', help="toy iteration: t, t_nu or t_k")
    parser.add_argument('--start', type=_floats, help="comma-separated a_0..a_{k/2}")
    parser.add_argument('--steps', type=int)
    parser.add_argument('--resolution', type=_ints, help="n_x,n_p,n_u,n_w")
    parser.add_argument('--kappa', type=_floats, help="kappa or a comma-separated schedule")
    parser.add_argument('--tol', type=float)
    parser.add_argument('--max-steps', dest='max_steps', type=int)
    parser.add_argument('--min-steps', dest='min_steps', type=int)
    parser.add_argument('--params', help="reference metric id or comma-separated parameters")
    parser.add_argument('--threads', type=int)
    parser.add_argument('--cache', dest='cache_dir', help="directory for cached quadrature rules")
    parser.add_argument('--export-rule', dest='export_rule', help="write the quadrature rule as CSV")
    parser.add_argument('--reference-table', '--paper-table', dest='reference_table',
                        help="compare against an embedded reference table")
    parser.add_argument('--output', help="directory for CSV and JSON outputs (default: stdout)")
    parser.add_argument('--verbose', action='store_true')
    return parser


def _csv_text(header, rows):
    si = StringIO()
    writer = csv.writer(si)
    writer.writerow(header)
    writer.writerows(rows)
    return si.getvalue()


def _round(value):
    if isinstance(value, (float, np.floating)):
        return float(f"{value:.10g}")
    if isinstance(value, np.integer):
        return int(value)
    return value


def _emit(config, command, table=None, report=None):
    """Write the CSV table and JSON report to --output or stdout"""
    outputs = []
    if table is not None:
        header, rows = table
        outputs.append(('csv', _csv_text(header, [[_round(v) for v in row] for row in rows])))
    if report is not None:
        outputs.append(('json', json.dumps(report, indent=2, default=_round) + '\n'))

    for suffix, text in outputs:
        if config.output:
            os.makedirs(config.output, exist_ok=True)
            path = os.path.join(config.output, f"{command}.{suffix}")
            with open(path, 'w', newline='') as handle:
                handle.write(text)
            logger.info(f"Wrote {path}")
        else:
            sys.stdout.write(text)


def _with_reference(report, args, computed_rows):
    if args.reference_table:
        table = load_reference(args.reference_table)
        report['reference_table'] = args.reference_table
        report['comparison'] = compare_rows(computed_rows, table)
    return report


def _params_for(config, args, k):
    """Parameters from --params or the config file: a reference metric id or explicit values"""
    scheme = k3_scheme(k)
    source = args.params if args.params else config.params
    if source is None:
        return None
    if isinstance(source, str) and source in reference_ids():
        params = reference_params(source)
        if params.scheme is not scheme:
            raise ConfigError(f"Reference metric '{source}' is not a degree {k} metric")
        return params
    try:
        values = _floats(source) if isinstance(source, str) else tuple(float(v) for v in source)
    except ValueError:
        raise ConfigError(f"Cannot read parameters from '{source}'") from None
    return InvariantParams(scheme, values)


def _identity_start(k):
    scheme = k3_scheme(k)
    return InvariantParams(scheme, scheme.diagonal.astype(float))


def cmd_toy(config, args):
    steps = config.steps if config.steps is not None else max(TOY_TABLE_ROWS[config.variant])
    trace = toy_trace(config.variant, config.k, config.start, steps, config.radial_resolution)
    half = config.k // 2 + 1
    rows = [[r, *metric.values[:half]] for r, metric in enumerate(trace.params_by_step)]
    report = {'variant': config.variant, 'k': config.k, 'steps': steps}
    if steps >= 6:
        try:
            sigma, direction = fit_sigma(trace)
            report.update(sigma=sigma, direction=[float(v) for v in direction[:half]])
        except InsufficientDecay as e:
            logger.warning(f"No sigma fit for toy {config.variant}: {e}")
    _emit(config, 'toy', (['r', *(f"a_{p}" for p in range(half))], rows), _with_reference(report, args, rows))


def cmd_k3_volume(config, args, rules):
    rule = rules.get(config.rule_resolution, config.chart)
    if args.export_rule:
        export_rule_csv(rule, args.export_rule)
    report = {
        'resolution': list(config.rule_resolution),
        'L_I': l_i(),
        'analytic': analytic_volume(),
        'V1': rule.info['V1'], 'V2': rule.info['V2'],
        'N1': rule.info['N1'], 'N2': rule.info['N2'],
        'total': rule.total_mass,
        'max_residual': rule.info['max_residual'],
    }
    _emit(config, 'k3-volume', report=report)


def _balance(config, args, rules, k):
    rule = rules.get(config.rule_resolution, config.chart)
    start = _params_for(config, args, k) or _identity_start(k)
    params, trace = iterate_to_fixed_point(start, rule, config.tol, config.max_steps,
                                           config.n_jobs, config.min_steps)
    return rule, params, trace


def cmd_k3_balance(config, args, rules):
    rule, params, trace = _balance(config, args, rules, config.k)
    report = {
        'k': config.k, 'rule': rule.label, 'converged': trace.converged, 'steps': trace.steps,
        'params': params.as_dict(),
        'trace_residuals': [r for r in trace.trace_residuals if r is not None],
    }
    try:
        report['sigma'] = fit_sigma(trace)[0]
    except InsufficientDecay as e:
        logger.warning(f"No sigma fit: {e}")
    rows = [row[:-1] for row in trace.rows()]
    header = ['r', *params.scheme.labels, 'psi']
    _emit(config, 'k3-balance', (header, trace.rows()), _with_reference(report, args, rows))


def cmd_k3_refine(config, args, rules):
    rule = rules.get(config.rule_resolution, config.chart)
    params = _params_for(config, args, config.k)
    if params is None:
        params = _balance(config, args, rules, config.k)[1]
    steps = config.steps if config.steps is not None else 5
    records = refine(params, rule, config.kappa, steps, config.bins, config.n_jobs)

    labels = params.scheme.labels
    header = ['r', 'kappa', *labels, *(f"eta_{label}" for label in labels), 'max', 'min', 'mean_abs_dev']
    rows = []
    for record in records:
        rows.append([record.step, record.kappa, *record.params.values,
                     *(record.coefficients.values * 1e3),
                     record.report.max, record.report.min, record.report.mean_abs_dev])
    report = {
        'k': config.k, 'rule': rule.label, 'kappa': list(config.kappa),
        'reports': [record.report.as_dict() for record in records],
    }
    comparison_rows = [[record.step, *record.params.values] for record in records]
    _emit(config, 'k3-refine', (header, rows), _with_reference(report, args, comparison_rows))


def cmd_k3_spectrum(config, args, rules):
    params = _params_for(config, args, config.k)
    rule = None
    if params is None or config.k == 3:
        rule, balanced, _ = _balance(config, args, rules, config.k)
        params = params or balanced
    matrix = q_tilde(params).reordered(display_order(params.scheme))
    chis = matrix.eigenvalues()
    spectral = laplacian_estimates(chis, section_dimension(config.k), 2)
    report = {'k': config.k, 'q_tilde_asymmetry': matrix.asymmetry, **spectral.as_dict()}
    if config.k == 3:
        direct = q_direct(params, config.k, rule, config.n_jobs).reordered(matrix.labels)
        report['q_direct_eigenvalues'] = [float(v) for v in direct.eigenvalues()]
        report['max_entry_difference'] = float(np.max(np.abs(direct.entries - matrix.entries)))
    if args.reference_table:
        table = load_reference(args.reference_table)
        report['reference_eigenvalues'] = table.get('eigenvalues')
        report['eigenvalue_distance'] = projective_distance(
            table['eigenvalues'][:4], chis[:4]) if 'eigenvalues' in table else None
    _emit(config, 'k3-spectrum', (['label', *matrix.labels], matrix.rows(scale=100.0)), report)


def cmd_cp1_spectrum(config, args):
    k = config.k
    eigen = symmetric_eigen(q_matrix_cp1(k))
    rows = [[m, chi(m, k), lambda_mk(m, k), float(eigen.eigenvalues[m])] for m in range(k + 1)]
    report = {'k': k, 'k_prime': float(k + 1)}
    _emit(config, 'cp1-spectrum', (['m', 'chi', 'lambda', 'q_eigenvalue'], rows), report)


def cmd_k3_eta(config, args, rules):
    params = _params_for(config, args, config.k)
    if params is None:
        params = _balance(config, args, rules, config.k)[1]
    rule = rules.get(config.rule_resolution, config.chart)
    report = eta_report(params, config.k, rule, config.bins, config.n_jobs)
    result = {'k': config.k, 'rule': rule.label, 'params': params.as_dict(), **report.as_dict(),
              'chern_weil_volume': chern_weil_volume(config.k)}
    _emit(config, 'k3-eta', report=result)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    try:
        config = load_config(args.config).with_overrides(
            k=args.k, variant=args.variant, start=args.start, steps=args.steps,
            resolution=args.resolution, kappa=args.kappa, tol=args.tol, max_steps=args.max_steps,
            min_steps=args.min_steps, threads=args.threads, cache_dir=args.cache_dir, output=args.output)
        config.validate(k3=args.command.startswith('k3'))
        rules = RuleCache(config.cache_dir)

        if args.command == 'toy':
            cmd_toy(config, args)
        elif args.command == 'cp1-spectrum':
            cmd_cp1_spectrum(config, args)
        else:
            handler = {
                'k3-volume': cmd_k3_volume,
                'k3-balance': cmd_k3_balance,
                'k3-refine': cmd_k3_refine,
                'k3-spectrum': cmd_k3_spectrum,
                'k3-eta': cmd_k3_eta,
            }[args.command]
            handler(config, args, rules)
    except KahlerError as e:
        logger.error(f"Error in {args.command}: {str(e)}")
        return e.exit_code
    return 0


if __name__ == '__main__':
    sys.exit(main())
