"""
Command-line front end for the two-channel resonance finder
"""
import argparse
import os
import sys
import time
from dataclasses import dataclass, field, replace
from multiprocessing import Pool

import numpy as np

from app import __version__
from app.config import settings
from app.config.settings import logger
from app.services import asymptotics
from app.services.data_service import ResultWriter
from app.services.dispersion import ModelParams, resolvent_correction_kernel
from app.services.errors import ConvergenceError, InvalidConfigError, ResonanceError
from app.services.riemann import SheetPoint
from app.services.rootfinder import (
    Method, SingularityKind, classify_regime, find_singularities, negative_axis_roots, newton_oracle,
    positive_axis_profile, scan_window,
)
from app.utils.logging_utils import log_run_summary

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2

DEFAULTS = {
    'dimension': '1',
    'theta0': '1.0',
    'c': '-1.0',
    'b': '1.0',
    'epsilon': '1e-3',
    'eps_ladder': '1e-2,3.1622776601683794e-3,1e-3,3.1622776601683794e-4',
    'tol': repr(settings.TOL),
    'max_iter': str(settings.MAX_ITER),
    'scan_min': repr(settings.SCAN_MIN),
    'scan_max': repr(settings.SCAN_MAX),
    'grid_n': str(settings.GRID_N),
    'out': '',
    'format': '',
    'z_re': '-1.0',
    'z_im': '0.0',
    'channels': '0,0',
    'x_min': '0.1',
    'x_max': '5.0',
    'kernel_n': '50',
    'verify': 'false',
}


def _floats(text):
    return tuple(float(v) for v in str(text).split(',') if v.strip())


def _bool(text):
    return str(text).strip().lower() in ('1', 'true', 'yes', 'on')


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: ModelParams
    eps_ladder: tuple
    tol: float
    max_iter: int
    scan_min: float
    scan_max: float
    grid_n: int
    out: str
    format: str
    z: complex = -1 + 0j
    channels: tuple = (0, 0)
    x_min: float = 0.1
    x_max: float = 5.0
    kernel_n: int = 50
    verify: bool = False

    def __post_init__(self):
        ladder = np.asarray(self.eps_ladder, dtype=float)
        if ladder.size == 0 or np.any(ladder <= 0) or np.any(np.diff(ladder) >= 0):
            raise InvalidConfigError(f"eps_ladder must be positive and strictly decreasing: {self.eps_ladder}")
        if self.grid_n < 16 or self.kernel_n < 2:
            raise InvalidConfigError("grid_n must be >= 16 and kernel_n >= 2")
        if self.tol <= 0 or self.max_iter < 1:
            raise InvalidConfigError("tol must be > 0 and max_iter >= 1")
        if not 0 < self.scan_min < self.scan_max:
            raise InvalidConfigError("need 0 < scan_min < scan_max")
        if self.format not in (None, 'csv', 'json'):
            raise InvalidConfigError(f"format must be csv or json, got {self.format!r}")

    def echo(self):
        """Flat key=value view of the configuration, enough to re-run it."""
        p = self.params
        return {
            'dimension': int(p.d), 'theta0': p.theta0, 'c': p.c, 'b': p.b, 'epsilon': p.epsilon,
            'tol': self.tol, 'max_iter': self.max_iter,
        }


@dataclass
class ResultRecord:
    command: str
    config: dict
    regime: str
    case_number: int = None
    singularities: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    expansion: object = None
    order_fit: object = None
    wall_time: float = 0.0
    version: str = __version__
    error: str = None
    extras: dict = field(default_factory=dict)

    def rows(self):
        """Flat rows, one per singularity; wall time is left out so outputs are reproducible."""
        base = dict(self.config, command=self.command, regime=self.regime, case_number=self.case_number,
                    version=self.version)
        tail = dict(self.extras)
        if self.order_fit is not None:
            tail.update(fitted_slope=self.order_fit.fitted_slope, r_squared=self.order_fit.r_squared,
                        stated_remainder_power=self.order_fit.expected_power)
        if self.notes:
            tail['notes'] = '; '.join(self.notes)
        if self.error:
            tail['error'] = self.error
        if not self.singularities:
            return [dict(base, **tail)]
        return [dict(base, kind=s.kind.value, location=complex(s.location), sheet=s.sheet,
                     method=s.method.value, residual=s.residual, **tail)
                for s in self.singularities]


@dataclass
class VerifyReport:
    order_fit: object
    expansion: object
    records: list


def read_config_file(path):
    """Parse a flat key=value file; '#' starts a comment."""
    values = {}
    try:
        with open(path, 'r', encoding='utf-8') as f:
            for number, line in enumerate(f, 1):
                line = line.split('#', 1)[0].strip()
                if not line:
                    continue
                if '=' not in line:
                    raise InvalidConfigError(f"{path}:{number}: expected key=value")
                key, value = (part.strip() for part in line.split('=', 1))
                if key not in DEFAULTS:
                    raise InvalidConfigError(f"{path}:{number}: unknown key {key!r}")
                values[key] = value
    except OSError as e:
        raise InvalidConfigError(f"cannot read config file {path}: {e}") from None
    return values


def build_config(command, overrides, config_path=None):
    """
    Merge defaults, the config file and CLI flags (flags win) into a RunConfig.

    Raises:
        InvalidConfigError: unknown keys, unparsable values or violated invariants
    """
    values = dict(DEFAULTS)
    if config_path:
        values.update(read_config_file(config_path))
    values.update({k: str(v) for k, v in overrides.items() if v is not None})
    try:
        params = ModelParams(d=int(values['dimension']), theta0=float(values['theta0']), c=float(values['c']),
                             epsilon=float(values['epsilon']), b=float(values['b']))
        channels = tuple(int(v) for v in values['channels'].split(','))
        return RunConfig(
            command=command, params=params, eps_ladder=_floats(values['eps_ladder']),
            tol=float(values['tol']), max_iter=int(values['max_iter']),
            scan_min=float(values['scan_min']), scan_max=float(values['scan_max']),
            grid_n=int(values['grid_n']), out=values['out'], format=values['format'].lower() or None,
            z=complex(float(values['z_re']), float(values['z_im'])), channels=channels,
            x_min=float(values['x_min']), x_max=float(values['x_max']),
            kernel_n=int(values['kernel_n']), verify=_bool(values['verify']),
        )
    except ValueError as e:
        if isinstance(e, InvalidConfigError):
            raise
        raise InvalidConfigError(f"invalid configuration value: {e}") from None


def _oracle_check(params, singularities, tol):
    """
    Restart Newton from every fixed-point resonance.

    Returns:
        tuple: (largest relative gap or None, list of failure messages)
    """
    gaps, failures = [], []
    for s in singularities:
        if s.kind == SingularityKind.RESONANCE and s.method == Method.FIXED_POINT:
            try:
                polished = newton_oracle(params, s.location, (s.sheet, s.z_minus_1_sheet), tol=tol)
            except ConvergenceError as e:
                logger.error(f"Newton cross-check did not converge from {s.location}: {str(e)}")
                failures.append(f"{type(e).__name__}: Newton cross-check from {s.location}: {e}")
                continue
            gaps.append(abs(polished.location - s.location) / abs(s.location))
    return (max(gaps) if gaps else None), failures


def run_solve(config):
    """All near-threshold singularities for one parameter point."""
    start = time.perf_counter()
    params = config.params
    regime = classify_regime(params)
    record = ResultRecord('solve', config.echo(), regime.label, regime.case_number)
    try:
        record.singularities, record.notes = find_singularities(params, regime, config.tol, config.max_iter)
        gap, failures = _oracle_check(params, record.singularities, config.tol)
        if gap is not None:
            record.extras['oracle_relative_gap'] = gap
        if failures:
            record.error = '; '.join(failures)
        window = scan_window(params)
        record.extras['scan_window'] = window
        record.extras['window_roots'] = len(negative_axis_roots(params, window))
    except ResonanceError as e:
        if isinstance(e, InvalidConfigError):
            raise
        logger.error(f"solve failed for {regime.label}, eps={params.epsilon:g}: {str(e)}")
        record.error = f"{type(e).__name__}: {e}"
    record.wall_time = time.perf_counter() - start
    return record


def _processes():
    return settings.SOLVER_THREADS or os.cpu_count() or 1


def _fit_target(record, expansion):
    wanted = (SingularityKind.RESONANCE if expansion.kind == 'resonance'
              else SingularityKind.ISOLATED_EIGENVALUE)
    sheet = -1 if wanted == SingularityKind.RESONANCE else 0
    matches = [s for s in record.singularities if s.kind == wanted and s.sheet == sheet]
    if not matches:
        return None
    return min(matches, key=lambda s: abs(s.location)).location


def _attach_fit(records, params):
    expansion = asymptotics.leading_order(params)
    if any(record.error for record in records):
        logger.error("remainder fit skipped: some ladder points failed")
        return None, expansion
    numeric = {}
    for record in records:
        value = _fit_target(record, expansion)
        if value is not None:
            numeric[record.config['epsilon']] = value
    fit = asymptotics.fit_remainder_order(numeric, expansion)
    for record in records:
        record.expansion, record.order_fit = expansion, fit
    return fit, expansion


def run_sweep(config):
    """Solve every eps of the ladder, one worker process per point, keeping ladder order."""
    configs = [replace(config, params=config.params.with_epsilon(eps)) for eps in config.eps_ladder]
    processes = min(_processes(), len(configs))
    if processes > 1:
        with Pool(processes=processes) as pool:
            records = pool.map(run_solve, configs)
    else:
        records = [run_solve(c) for c in configs]
    for record in records:
        record.command = 'sweep'
    if config.verify:
        _attach_fit(records, config.params)
    return records


def run_scan(config):
    """|D_eps| over a log grid of (scan_min, scan_max): minimum, median and where the minimum sits."""
    start = time.perf_counter()
    params = config.params
    grid = np.geomspace(config.scan_min, config.scan_max, config.grid_n)
    profile = positive_axis_profile(params, grid)
    index = int(np.nanargmin(profile))
    median = float(np.nanmedian(profile))
    regime = classify_regime(params)
    record = ResultRecord('scan', config.echo(), regime.label, regime.case_number)
    record.extras.update(min_abs_d=float(profile[index]), median_abs_d=median,
                         argmin_lambda=float(grid[index]), floor_ratio=float(profile[index]) / median,
                         grid_n=config.grid_n)
    record.wall_time = time.perf_counter() - start
    return record


def run_kernel(config):
    """Resolvent-correction kernel sampled on an x, x' grid for plotting."""
    params = config.params
    z = SheetPoint(config.z, 0)
    i, j = config.channels
    xs = np.linspace(config.x_min, config.x_max, config.kernel_n)
    rows = []
    for x in xs:
        for x_prime in xs:
            value = resolvent_correction_kernel(params, z, float(x), float(x_prime), i, j)
            rows.append({'x': float(x), 'x_prime': float(x_prime), 'channel_i': i, 'channel_j': j,
                         'z': config.z, 'kernel': complex(value)})
    return rows


def run_verify(config):
    """Sweep the ladder and fit the remainder order against the cell's expansion."""
    records = run_sweep(replace(config, verify=False))
    for record in records:
        record.command = 'verify'
    fit, expansion = _attach_fit(records, config.params)
    return VerifyReport(fit, expansion, records)


def _parser():
    parser = argparse.ArgumentParser(prog='resonances', description=__doc__.strip())
    parser.add_argument('--version', action='version', version=__version__)
    sub = parser.add_subparsers(dest='command', required=True)
    for name in ('solve', 'sweep', 'scan', 'kernel', 'verify'):
        p = sub.add_parser(name)
        p.add_argument('--config', help='flat key=value config file')
        p.add_argument('-d', '--dimension', type=int)
        p.add_argument('--theta0', type=float)
        p.add_argument('-c', type=float)
        p.add_argument('-b', type=float)
        p.add_argument('-e', '--epsilon', type=float)
        p.add_argument('--eps-ladder', dest='eps_ladder', help='comma separated, decreasing')
        p.add_argument('--tol', type=float)
        p.add_argument('--max-iter', dest='max_iter', type=int)
        p.add_argument('--scan-min', dest='scan_min', type=float)
        p.add_argument('--scan-max', dest='scan_max', type=float)
        p.add_argument('--grid-n', dest='grid_n', type=int)
        p.add_argument('-o', '--out')
        p.add_argument('--format', choices=('csv', 'json'))
        if name == 'kernel':
            p.add_argument('--z-re', dest='z_re', type=float)
            p.add_argument('--z-im', dest='z_im', type=float)
            p.add_argument('--channels', help='i,j with channels 0 or 1')
            p.add_argument('--x-min', dest='x_min', type=float)
            p.add_argument('--x-max', dest='x_max', type=float)
            p.add_argument('--kernel-n', dest='kernel_n', type=int)
        if name == 'sweep':
            p.add_argument('--verify', action='store_const', const='true')
    return parser


def _default_out(config):
    return os.path.join(settings.RESULTS_DIR, f"{config.command}.{config.format or 'csv'}")


def main(argv=None):
    """
    Run one subcommand.

    Returns:
        int: 0 on success, 1 when a solver failed, 2 for an invalid configuration
    """
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    overrides = {k: v for k, v in vars(args).items() if k not in ('command', 'config')}
    start = time.perf_counter()
    try:
        config = build_config(args.command, overrides, args.config)
        # without --format the writer goes by the file extension
        writer = ResultWriter(config.out or _default_out(config), config.format)
    except ValueError as e:
        logger.error(f"Invalid configuration: {str(e)}")
        return EXIT_CONFIG
    try:
        records = []
        if args.command == 'solve':
            records = [run_solve(config)]
            rows = records[0].rows()
        elif args.command == 'sweep':
            records = run_sweep(config)
            rows = [row for record in records for row in record.rows()]
        elif args.command == 'scan':
            records = [run_scan(config)]
            rows = records[0].rows()
        elif args.command == 'kernel':
            rows = run_kernel(config)
        else:
            report = run_verify(config)
            records = report.records
            rows = [row for record in records for row in record.rows()]
    except InvalidConfigError as e:
        logger.error(f"Invalid configuration: {str(e)}")
        return EXIT_CONFIG
    except ResonanceError as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return EXIT_SOLVER

    if not writer.write(rows):
        return EXIT_SOLVER
    log_run_summary(args.command, records, time.perf_counter() - start)
    return EXIT_SOLVER if any(record.error for record in records) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
