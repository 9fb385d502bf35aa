"""Command line front end: qfm, evolve, field and witness subcommands driven by one experiment configuration"""
import argparse
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from idflow.constants import numerics
from idflow.dynamics import FlowRecord, flow_series
from idflow.emit import Run, emit_csv, emit_json, emit_series_csv, number, write_text
from idflow.errors import ConfigError, IdflowError, IoError
from idflow.experiment import ExperimentConfig, parse_config
from idflow.fields import propagated_basis, sample_field
from idflow.fisher import idqs, qfm, sld_set
from idflow.operators import validate_density
from idflow.qubit import bloch_family, dissipative_basis, dissipative_series
from idflow.svg import PaletteSpec, render_svg
from idflow.witness import backflow_integral, detect_backflow, rate_sign_intervals, witness_agreement

FORMATS = ('csv', 'json', 'svg')
THREADS_ENV = 'IDFLOW_THREADS'


def setup_parser(help_str: str) -> argparse.ArgumentParser:
    """Factory that creates the base argument parser"""
    parser = argparse.ArgumentParser(prog='idflow', description=help_str)
    parser.add_argument('-v', '--verbose', action='store_true', help='Increased logging level')
    parser.add_argument('-vv', '--debug', action='store_true', help='Print debug statements')
    parser.add_argument('--log-dir', help='Also write serialized logs to this directory')
    return parser


def setup_logging(debug: bool = False, verbose: bool = False, log_dir: Optional[str] = None) -> None:
    """
    Configures the logging level, and optionally sets up file based logging

    :param debug: If true, the Debug logging level is used, and verbose is ignored
    :param verbose: If true and debug is false, then the info log level is used
    :param log_dir: Directory for rotating serialized log files
    """
    log_level = 'WARNING'
    if debug:
        log_level = 'DEBUG'
    elif verbose:
        log_level = 'INFO'

    logger.remove()
    logger.add(sys.stdout, format="<green>{time}</green> <level>{message}</level>", colorize=True, backtrace=True,
               diagnose=True, level=log_level)
    if log_dir:
        logger.add(os.path.join(log_dir, 'idflow-{time}.log'), format="{time:YYYY-MM-DD at HH:mm:ss} | {level} | "
                                                                      "{message}",
                   serialize=True, backtrace=True, diagnose=True, rotation='1 week', retention='3 months',
                   compression='zip', level=log_level)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('-c', '--config', help='Experiment configuration (JSON). Defaults reproduce the dissipative '
                                               'model figure')
    parser.add_argument('-o', '--out', help='Output directory. Defaults to outputs.directory of the configuration')
    parser.add_argument('-f', '--format', help='Comma separated subset of csv,json,svg')
    parser.add_argument('-t', '--threads', type=int, default=1, help=f'Worker threads; {THREADS_ENV} overrides it')


def parse_args(_args: Sequence[str]) -> argparse.Namespace:
    """Handles the argument parsing"""
    parser = setup_parser('Intrinsic density flow of parameterized quantum states under open dynamics')
    subparsers = parser.add_subparsers(dest='command', required=True)
    for name, help_str in (('qfm', 'Fisher metric at the evolve points and snapshot times'),
                           ('evolve', 'Flow series of the evolve points'),
                           ('field', 'Field frames at the snapshot times'),
                           ('witness', 'Backflow and rate-sign interval reports')):
        _add_common(subparsers.add_parser(name, help=help_str))

    args = parser.parse_args(_args)
    if args.format:
        formats = [f.strip() for f in args.format.split(',') if f.strip()]
        unknown = sorted(set(formats) - set(FORMATS))
        if unknown or not formats:
            parser.error(f'--format must be a subset of {",".join(FORMATS)}, got {args.format}')
        args.format = formats
    env_threads = os.environ.get(THREADS_ENV)
    if env_threads:
        try:
            args.threads = int(env_threads)
        except ValueError:
            parser.error(f'{THREADS_ENV} must be an integer, got {env_threads!r}')
    if args.threads < 1:
        parser.error(f'Thread count must be at least 1, got {args.threads}')
    return args


def load_config(path: Optional[str]) -> ExperimentConfig:
    """Reads and validates the configuration file; no path means the defaults"""
    if path is None:
        return parse_config('{}')
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as err:
        raise IoError(f'Could not read configuration {path}: {err}') from err
    return parse_config(text)


class Runner:
    """Executes one subcommand and writes its outputs"""

    def __init__(self, config: ExperimentConfig, out_dir: Path, formats: Sequence[str], threads: int = 1):
        """
        :param config: validated experiment
        :param out_dir: output directory
        :param formats: subset of csv, json, svg
        :param threads: worker threads for field sampling
        """
        self.config = config
        self.out_dir = out_dir
        self.formats = list(formats)
        self.threads = threads

    def series(self) -> Dict[str, List[FlowRecord]]:
        """Flow series of every evolve point on the configured grid"""
        grid = self.config.t_grid()
        model = self.config.dissipative_model()
        ret = {}
        for point in self.config.evolve.points:
            logger.info('Evolving {} from n0={}', point.name, point.n)
            if model is not None:
                ret[point.name] = dissipative_series(point.n, model, grid)
            else:
                ret[point.name] = flow_series(self.config.master_equation(), bloch_family(), point.n, grid)
        return ret

    def qfm(self) -> Run:
        """Metric, QFI and IDQS of the evolved Bloch family at every evolve point and snapshot"""
        model = self.config.dissipative_model()
        me = None if model is not None else self.config.master_equation()
        rows = []
        for t in self.config.times.snapshots:
            model_t = self.config.physical_time(t)
            if model is not None:
                basis = dissipative_basis(model, model_t)
            else:
                steps = max(1, round(self.config.times.steps * t / self.config.times.t_max))
                basis = propagated_basis(me, model_t, steps)
            for point in self.config.evolve.points:
                entry = {'name': point.name, 'n0': list(point.n), 'time': t}
                try:
                    rho = validate_density(basis[0] + sum(c * b for c, b in zip(point.n, basis[1:])),
                                           eig_tol=numerics().trajectory_eig_tol)
                    metric = qfm(rho, sld_set(rho, list(basis[1:])), point.n)
                    entry.update({'g': metric.g.tolist(), 'qfi': metric.qfi.tolist(), 'idqs': idqs(metric)})
                except IdflowError as err:
                    logger.warning('Metric of {} at t={} undefined: {}', point.name, t, err)
                    entry.update({'g': None, 'qfi': None, 'idqs': None})
                rows.append(entry)

        if 'csv' in self.formats:
            table = pd.DataFrame([[r['name'], number(r['time']), number(r['idqs'])] +
                                  [number(v) for v in (np.ravel(r['g']) if r['g'] is not None else [None] * 9)]
                                  for r in rows],
                                 columns=['name', 'time', 'idqs'] + [f'g{i}{j}' for i in range(1, 4)
                                                                     for j in range(1, 4)], dtype=str)
            write_text(self.out_dir / 'qfm.csv', table.to_csv(index=False, lineterminator='\n'))
        return Run(config=self.config, extras={'metrics': rows})

    def evolve(self) -> Run:
        """Flow series of every evolve point, one curve CSV each"""
        series = self.series()
        if 'csv' in self.formats:
            for name, records in series.items():
                emit_series_csv(records, self.out_dir / f'evolve_{name}.csv')
        return Run(config=self.config, series=series)

    def field(self) -> Run:
        """Every configured field at every snapshot"""
        frames = []
        palette = PaletteSpec()
        for t in self.config.times.snapshots:
            for kind in self.config.outputs.fields:
                frame = sample_field(self.config, kind, t, self.threads)
                stem = f'field_{kind}_t{t:g}'
                if 'csv' in self.formats:
                    emit_csv(frame, self.out_dir / f'{stem}.csv')
                if 'svg' in self.formats:
                    render_svg(frame, palette, self.out_dir / f'{stem}.svg')
                frames.append(frame)
        return Run(config=self.config, frames=frames)

    def witness(self) -> Run:
        """Backflow intervals per evolve point, rate-sign intervals per channel and their agreement"""
        series = self.series()
        rate_reports = rate_sign_intervals(self.config.master_equation(), self.config.t_grid())
        reports = list(rate_reports)
        summary = {}
        rows = []
        for name, records in series.items():
            report = detect_backflow(records, self.config.witness.threshold)
            agreement = witness_agreement(report, rate_reports)
            summary[name] = {'intervals': len(report), 'agreement_checked': agreement.checked,
                             'agreement_holds': agreement.holds,
                             'counterexamples': [i.to_dict() for i in agreement.counterexamples],
                             'backflow_integral': backflow_integral(records)}
            reports.append(report)
            rows.extend([name, report.witness_kind, '', number(i.start), number(i.end), str(i.sign)]
                        for i in report.intervals)
        for report in rate_reports:
            rows.extend(['', report.witness_kind, str(report.channel), number(i.start), number(i.end), str(i.sign)]
                        for i in report.intervals)

        if 'csv' in self.formats:
            table = pd.DataFrame(rows, columns=['point', 'witness', 'channel', 'start', 'end', 'sign'], dtype=str)
            write_text(self.out_dir / 'witness.csv', table.to_csv(index=False, lineterminator='\n'))
        return Run(config=self.config, series=series, reports=reports, extras={'summary': summary})

    def run(self, command: str) -> Run:
        """Dispatches a subcommand and writes the JSON run file when requested"""
        result = getattr(self, command)()
        if 'json' in self.formats:
            emit_json(result, self.out_dir / f'{command}.json')
        logger.info('{} finished; outputs in {}', command, self.out_dir)
        return result


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of the idflow command
    :param argv: arguments without the program name
    :return: exit code: 0 success, 1 runtime error, 2 usage or configuration error
    """
    args = parse_args(sys.argv[1:] if argv is None else argv)
    setup_logging(args.debug, args.verbose, args.log_dir)
    try:
        config = load_config(args.config)
        out_dir = Path(args.out or config.outputs.directory)
        Runner(config, out_dir, args.format or config.outputs.formats, args.threads).run(args.command)
    except ConfigError as err:
        sys.stderr.write(f'idflow: configuration error: {err}\n')
        return 2
    except (IdflowError, ValueError) as err:
        logger.error('{} failed: {}', args.command, err)
        sys.stderr.write(f'idflow: error: {err}\n')
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
