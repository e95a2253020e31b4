"""
Command-line interface
Subcommands classify | trace | sigma | spectrum | zeros | sturm | realzeros,
each writing JSON/CSV data next to an SVG figure under --out.

Exit codes: 0 ok, 1 numeric failure, 2 ambiguous near miss, 3 no
accumulation, 64 usage error.
"""
import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

import plots
from app_logging import setup_application_logging
from applications import (
    critical_x, real_zero_family, short_trajectory_theta_scan, sturm_spectrum,
)
from core_algebra import Potential, turning_point_index
from graph_classifier import accumulation_check, admissible_pairs, classify
from hdf5_cache import ResultCache
from level_sets import build_atlas
from operations_logger import log_command
from serialization import (
    load_scenario, parse_angle, parse_complex, parse_range, records_frame, write_json, write_table,
)
from settings import apply_tolerance, get_settings
from spectral_oracle import (
    Eigenfunction, bounded_zero_count, eigenfunction_grid, locate_zeros, oracle_spectrum, ray_solution,
    shooting_problem,
)
from stokes_errors import AmbiguousNearMiss, InvalidData, NotAccumulating, StokesError
from trajectory_tracer import TraceLimits, trace
from wkb_engine import quantize

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 64


class StokesArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 64"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = StokesArgumentParser(prog='stokes', description='Stokes geometry of -lambda^2 (z-a)(z^2-1) dz^2')
    parser.add_argument('--out', default=None, help='Output directory (default ./out)')
    parser.add_argument('--tol', type=float, default=None, help='Short-trajectory tolerance')
    parser.add_argument('--threads', type=int, default=None, help='Worker threads')
    parser.add_argument('--seed-file', default=None, help='JSON scenario supplying defaults')
    parser.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    parser.add_argument('--no-cache', action='store_true', help='Skip the HDF5 result cache')
    commands = parser.add_subparsers(dest='command', required=True, parser_class=StokesArgumentParser)

    sub = commands.add_parser('classify', help='Classify the Stokes graph of (a, theta)')
    sub.add_argument('--a', default=None)
    sub.add_argument('--theta', default=None)

    sub = commands.add_parser('trace', help='Trace one trajectory from a seed')
    sub.add_argument('--a', default=None)
    sub.add_argument('--theta', default=None)
    sub.add_argument('--seed', default=None, help='Start point (default: the turning point a)')
    sub.add_argument('--direction', default=None, help='Initial direction angle')
    sub.add_argument('--kind', default=None, choices=['vertical', 'horizontal'])

    sub = commands.add_parser('sigma', help='Level-set atlas in the a-plane')
    sub.add_argument('--theta', default=None)

    sub = commands.add_parser('spectrum', help='Quantized and shooting eigenvalues')
    sub.add_argument('--a', default=None)
    sub.add_argument('--theta', default=None)
    sub.add_argument('--n-range', dest='n_range', default=None, help="e.g. '1..8'")
    sub.add_argument('--pair', default=None, help="Half-plane pair 'p,q' (default: first accumulating)")
    sub.add_argument('--quantization-only', action='store_true')

    sub = commands.add_parser('zeros', help='Zeros of one eigenfunction')
    sub.add_argument('--a', default=None)
    sub.add_argument('--theta', default=None)
    sub.add_argument('--n', type=int, default=None)
    sub.add_argument('--window', default=None, help="'x0,x1,y0,y1'")
    sub.add_argument('--pair', default=None)

    sub = commands.add_parser('sturm', help='Spectrum of -y\'\' + i(x^3 + alpha x) y = E y')
    sub.add_argument('--alpha', type=float, default=None)
    sub.add_argument('--n-range', dest='n_range', default=None)
    sub.add_argument('--scan', action='store_true', help='Also scan theta for short trajectories of i sqrt 3')

    sub = commands.add_parser('realzeros', help='Real and non-real zeros along the rotated family')
    sub.add_argument('--x', default=None, help='Parameter x (default: x_crit)')
    sub.add_argument('--n', type=int, default=None)
    sub.add_argument('--window', default=None)
    return parser


def _option(args, scenario: Dict, name: str, default=None):
    value = getattr(args, name, None)
    if value is None:
        value = scenario.get(name, default)
    return value


def _window(text) -> tuple:
    if text is None:
        return None
    values = text if isinstance(text, (list, tuple)) else [float(v) for v in str(text).split(',')]
    if len(values) != 4:
        raise InvalidData(f"window needs four numbers x0,x1,y0,y1, got {text!r}")
    x0, x1, y0, y1 = (float(v) for v in values)
    if not (x1 > x0 and y1 > y0):
        raise InvalidData(f"window {text!r} is empty")
    return x0, x1, y0, y1


def _pair(text) -> Optional[tuple]:
    if text is None:
        return None
    values = text if isinstance(text, (list, tuple)) else str(text).split(',')
    return tuple(sorted(int(v) for v in values))


def _select_descriptor(graph, pair=None):
    """The requested pair, else the first accumulating one, else the first"""
    descriptors = admissible_pairs(graph)
    if pair is not None:
        for descriptor in descriptors:
            if tuple(sorted(descriptor.pair)) == pair:
                return descriptor
        raise InvalidData(f"pair {pair} is not a non-admissible pair; have {[d.pair for d in descriptors]}")
    for descriptor in descriptors:
        if accumulation_check(graph, descriptor)['accumulates']:
            return descriptor
    return descriptors[0] if descriptors else None


class CommandContext:
    """Per-invocation options and the single output writer"""

    def __init__(self, args, scenario: Dict, settings: Dict):
        self.args = args
        self.scenario = scenario
        self.settings = settings
        self.out = Path(_option(args, scenario, 'out', 'out'))
        self.threads = _option(args, scenario, 'threads') or settings['cli']['threads']
        self.cache = None if args.no_cache else ResultCache()
        self.written: List[str] = []

    def option(self, name, default=None):
        return _option(self.args, self.scenario, name, default)

    def limits(self, pot: Potential) -> TraceLimits:
        return TraceLimits.from_settings(pot, self.settings)

    def json(self, name: str, payload: Dict):
        self.written.append(str(write_json(payload, self.out / name)))

    def table(self, name: str, records):
        self.written.append(str(write_table(records, self.out / name)))

    def figure(self, function, name: str, *args, **kwargs):
        self.written.append(str(function(*args, self.out / name, **kwargs)))


def _potential(ctx: CommandContext) -> Potential:
    a = ctx.option('a')
    if a is None:
        raise InvalidData("--a is required")
    return Potential(parse_complex(a), parse_angle(ctx.option('theta', 0.0)))


def cmd_classify(ctx: CommandContext) -> str:
    pot = _potential(ctx)
    try:
        graph = classify(pot, limits=ctx.limits(pot), threads=ctx.threads)
    except AmbiguousNearMiss as e:
        ctx.json('classify.json', {'potential': pot.to_dict(), 'error': e.to_dict()})
        raise
    descriptors = admissible_pairs(graph)
    payload = graph.to_dict()
    payload['eigenvalue_problems'] = [
        {**d.to_dict(), 'accumulation': accumulation_check(graph, d)} for d in descriptors
    ]
    ctx.json('classify.json', payload)
    ctx.figure(plots.plot_critical_graph, 'classify.svg', graph)
    shorts = ', '.join(f"{i}-{j}" for i, j in (s.endpoints for s in graph.short_trajectories)) or 'none'
    return (f"type {graph.type_label}: {len(graph.strips)} strip(s), short trajectories {shorts}, "
            f"{len(descriptors)} non-admissible pair(s)")


def cmd_trace(ctx: CommandContext) -> str:
    pot = _potential(ctx)
    seed = parse_complex(ctx.option('seed', pot.a))
    kind = ctx.option('kind', 'vertical')
    direction = ctx.option('direction')
    if direction is None:
        if turning_point_index(pot, seed) is None:
            raise InvalidData("--direction is required when the seed is not a turning point")
        direction = 0.0
    trajectory = trace(pot, seed, parse_angle(direction), kind=kind, limits=ctx.limits(pot))
    ctx.json('trace.json', trajectory.to_dict())
    ctx.table('trace.csv', [{'re': z.real, 'im': z.imag} for z in trajectory.points])
    return (f"{kind} trajectory: {trajectory.terminal.kind} after arc length {trajectory.arc_length:.6g}, "
            f"drift {trajectory.re_h_drift:.2e}")


def cmd_sigma(ctx: CommandContext) -> str:
    theta = parse_angle(ctx.option('theta', 0.0))
    atlas = build_atlas(theta, threads=ctx.threads)
    payload = atlas.to_dict()
    ctx.json('sigma.json', payload)
    rows = []
    for index, curve in enumerate(atlas.curves):
        rows.extend({'curve': index, 'which': curve.which, 'in_s': curve.in_s, 're': z.real, 'im': z.imag}
                    for z in curve.points)
    ctx.table('sigma_curves.csv', rows)
    ctx.figure(plots.plot_atlas, 'sigma.svg', atlas)
    if ctx.cache is not None:
        arrays = {f"curve_{k}": np.column_stack([c.points.real, c.points.imag]) for k, c in enumerate(atlas.curves)}
        ctx.cache.store('sigma', {'theta': theta}, {k: v for k, v in payload.items() if k != 'curves'}, arrays)
    s_arm = 'starts at -1' if atlas.s_triangle == -1.0 else f"at s={atlas.s_triangle:.10g}"
    return f"theta={theta:.10g}: n_regions {atlas.n_regions}, triangle arm {s_arm}"


def _no_problem_report(ctx: CommandContext, name: str, graph, error: NotAccumulating):
    ctx.json(name, {
        'potential': graph.potential.to_dict(),
        'type_label': graph.type_label,
        'report': 'no eigenvalue problem accumulates along theta',
        'error': error.to_dict(),
    })


def cmd_spectrum(ctx: CommandContext) -> str:
    pot = _potential(ctx)
    n_values = parse_range(ctx.option('n_range', '1..8'))
    graph = classify(pot, limits=ctx.limits(pot), threads=ctx.threads)
    descriptor = _select_descriptor(graph, _pair(ctx.option('pair')))
    try:
        predicted = quantize(graph, descriptor, n_values)
    except NotAccumulating as e:
        _no_problem_report(ctx, 'spectrum.json', graph, e)
        raise
    rows = [{'n': n, 'quantization': r} for n, r in zip(n_values, predicted.lambda_mods)]
    payload = {'quantization': predicted.to_dict()}
    if not getattr(ctx.args, 'quantization_only', False):
        scenario = {'a': [pot.a.real, pot.a.imag], 'theta': pot.theta, 'n': n_values, 'pair': list(descriptor.pair)}
        cached = ctx.cache.load('spectrum', scenario) if ctx.cache is not None else None
        if cached is not None:
            payload['oracle'] = cached[0]
        else:
            payload['oracle'] = oracle_spectrum(graph, descriptor, n_values, threads=ctx.threads).to_dict()
            if ctx.cache is not None:
                ctx.cache.store('spectrum', scenario, payload['oracle'])
        for row, value in zip(rows, payload['oracle']['lambda_mods']):
            row['oracle'] = value
            row['n_times_difference'] = row['n'] * abs(value - row['quantization'])
    ctx.json('spectrum.json', payload)
    ctx.table('spectrum.csv', rows)
    ctx.figure(plots.plot_spectrum, 'spectrum.svg', records_frame(rows), ['quantization', 'oracle'])
    return f"{len(rows)} level(s) for pair {descriptor.pair} (type {graph.type_label})"


def cmd_zeros(ctx: CommandContext) -> str:
    pot = _potential(ctx)
    n = int(ctx.option('n', 1))
    graph = classify(pot, limits=ctx.limits(pot), threads=ctx.threads)
    descriptor = _select_descriptor(graph, _pair(ctx.option('pair')))
    try:
        spectrum = oracle_spectrum(graph, descriptor, [n], threads=ctx.threads)
    except NotAccumulating as e:
        _no_problem_report(ctx, 'zeros.json', graph, e)
        raise
    lam = spectrum.lambda_mods[0] * pot.rotation
    prob = shooting_problem(graph, descriptor)
    base = ray_solution(prob, lam, 0).final
    ef = Eigenfunction(prob, lam, complex(base[0]), complex(base[1]))
    extent = 3.0 * max(1.0, abs(pot.a))
    window = _window(ctx.option('window')) or (-extent, extent, -extent, extent)
    zero_set = locate_zeros(ef, window, graph=graph, eigenvalue_index=n)
    i, j = descriptor.period_contours[0]
    on_short = bounded_zero_count(ef, graph.short_between(i, j).polyline)
    field = eigenfunction_grid(prob, lam, window, ctx.settings['cli']['field_resolution'], eigenfunction=ef)

    payload = zero_set.to_dict()
    payload.update({'lambda_mod': spectrum.lambda_mods[0], 'bounded_contour_count': on_short,
                    'descriptor': descriptor.to_dict()})
    ctx.json('zeros.json', payload)
    bounded = set(zero_set.bounded_component)
    ctx.table('zeros.csv', [{'re': z.real, 'im': z.imag, 'component': 'bounded' if z in bounded else 'unbounded'}
                            for z in zero_set.zeros])
    log_abs = np.log(np.abs(field.f)) + field.log_scale
    ctx.table('zeros_field.csv', [{'re': z.real, 'im': z.imag, 'log_abs_f': v}
                                   for z, v in zip(field.points.ravel(), log_abs.ravel())])
    ctx.figure(plots.plot_zeros, 'zeros.svg', zero_set, graph=graph)
    return (f"n={n}: {len(zero_set.zeros)} zero(s), {len(zero_set.bounded_component)} bounded, "
            f"{on_short} inside the short-trajectory contour, max distance {zero_set.max_dist_to_support:.3g}")


def cmd_sturm(ctx: CommandContext) -> str:
    alpha = float(ctx.option('alpha', 0.0))
    n_values = parse_range(ctx.option('n_range', '1..8'))
    levels = sturm_spectrum(alpha, n_values, threads=ctx.threads)
    rows = [level.to_dict() for level in levels]
    payload = {'alpha': alpha, 'levels': rows}
    if getattr(ctx.args, 'scan', False):
        payload['theta_scan'] = short_trajectory_theta_scan()
    ctx.json('sturm.json', payload)
    ctx.table('sturm.csv', rows)
    ctx.figure(plots.plot_spectrum, 'sturm.svg', records_frame(rows), ['e_asymptotic', 'e_wkb', 'e_oracle_re'],
               ylabel='E_n')
    worst = max((r['im_ratio'] for r in rows if r['im_ratio'] is not None), default=None)
    worst_text = 'n/a' if worst is None else f"{worst:.2e}"
    return f"alpha={alpha:g}: {len(rows)} level(s), max |Im E|/|E| {worst_text}"


def cmd_realzeros(ctx: CommandContext) -> str:
    x = ctx.option('x')
    x = critical_x()[0] if x is None else parse_complex(x)
    n = int(ctx.option('n', 1))
    report = real_zero_family(x, n=n, window=_window(ctx.option('window')), threads=ctx.threads)
    ctx.json('realzeros.json', report.to_dict())
    nonreal = set(report.nonreal_zeros)
    ctx.table('realzeros.csv', [{'re': w.real, 'im': w.imag, 'real': w not in nonreal} for w in report.zeros])
    return (f"x={x:.6g}: {len(report.real_zeros)} real, {len(report.nonreal_zeros)} non-real zero(s)"
            f"{' (conjugate symmetric)' if report.conjugate_symmetric else ''}")


COMMANDS = {
    'classify': cmd_classify,
    'trace': cmd_trace,
    'sigma': cmd_sigma,
    'spectrum': cmd_spectrum,
    'zeros': cmd_zeros,
    'sturm': cmd_sturm,
    'realzeros': cmd_realzeros,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_application_logging(getattr(logging, args.log_level))
    started = time.time()
    arguments = {k: v for k, v in vars(args).items() if v is not None}

    try:
        scenario = load_scenario(args.seed_file) if args.seed_file else {}
        settings = get_settings()
        tol = args.tol if args.tol is not None else scenario.get('tol')
        if tol is not None:
            apply_tolerance(settings, float(tol))
        if args.threads is not None and args.threads < 1:
            raise InvalidData(f"--threads must be positive, got {args.threads}")
        ctx = CommandContext(args, scenario, settings)
    except (InvalidData, ValueError) as e:
        logger.error(f"Invalid invocation: {e}")
        print(f"error: {e}", file=sys.stderr)
        log_command(args.command, arguments, EXIT_USAGE, time.time() - started, str(e))
        return EXIT_USAGE

    try:
        summary = COMMANDS[args.command](ctx)
        code = EXIT_OK
    except (InvalidData, ValueError) as e:
        logger.error(f"{args.command} rejected its input: {e}")
        print(f"error: {e}", file=sys.stderr)
        summary, code = str(e), EXIT_USAGE
    except StokesError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        summary, code = str(e), e.exit_code

    if code == EXIT_OK:
        print(f"{args.command}: {summary}")
    log_command(args.command, arguments, code, time.time() - started, summary)
    return code


if __name__ == '__main__':
    sys.exit(main())
