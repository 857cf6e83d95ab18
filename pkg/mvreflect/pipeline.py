import inspect
import json
import logging
import os

import numpy as np
from filelock import FileLock

from mvreflect import __version__
from mvreflect.config import CSV_SCHEMA_VERSION, Config
from mvreflect.measures.empirical import EmpiricalMeasure
from mvreflect.pde1d import (DensityGrid, PdeTrajectory, compare_particle_pde, make_neumann_function, solve,
                             weak_form_residual)
from mvreflect.sde import MeasureFlow, apply_H, couple_pair, picard_solve, simulate_mckean
from mvreflect.utils.base_utils import as_points, ensure_dir, get_report_table, timestamp
from mvreflect.utils.errors import ConfigError
from mvreflect.utils.fields import PARTICLE_ID, SUP_ABS, LOCAL_TIME, TILDE_LOCAL_TIME, CsvTable
from mvreflect.utils.rng import CounterRNG
from mvreflect.utils.schema import (InitialModel, build_coefficients, build_domain, build_initial_law,
                                    build_sim_config, load_config)
from mvreflect.verify import CHECKS, levy_local_time_oracle

COMMANDS = ('simulate', 'verify', 'picard', 'couple', 'pde-compare')

# check parameters that name a law; given as a point, a list of points or an initial-law document
MEASURE_PARAMS = ('gamma', 'mu0', 'nu0')
ORACLES = {'levy': levy_local_time_oracle}


class RunManifest:
    """ manifest.json of a run directory: written with status "running" before the run
    and finalized with the outcome and the list of artifacts after it.
    """

    def __init__(self, command, config_path, out_dir, seed=None, threads=None, checks=None):
        self.path = os.path.join(out_dir, 'manifest.json')
        self.data = {
            'command': command,
            'config_path': os.path.abspath(config_path),
            'out_dir': os.path.abspath(out_dir),
            'seed': seed,
            'threads': threads,
            'checks': checks,
            'version': __version__,
            'csv_schema_version': CSV_SCHEMA_VERSION,
            'started': timestamp(),
            'finished': None,
            'status': 'running',
            'config': None,
            'artifacts': [],
        }

    def write(self):
        tmp = self.path + '.tmp'
        with open(tmp, 'w') as f:
            json.dump(self.data, f, indent=2, sort_keys=True)
        os.replace(tmp, self.path)

    def add_artifact(self, name):
        if name not in self.data['artifacts']:
            self.data['artifacts'].append(name)

    def finalize(self, status):
        self.data['status'] = status
        self.data['finished'] = timestamp()
        self.write()


class Pipeline:
    """ Runs one command of the batch front-end inside an output directory.

    The configuration is read and built on construction, so every error raised there is a
    configuration error. The directory is locked while the command runs; the log goes to
    <out>/mvreflect.log.
    """

    def __init__(self, command, config_path, out_dir, seed=None, threads=None, checks=None, printout=True):
        if command not in COMMANDS:
            raise ConfigError('unknown command "{}"; available: {}'.format(command, COMMANDS), field='command')
        self._command = command
        self._config_path = config_path
        self._out_dir = out_dir
        self._seed = seed
        self._threads = threads
        self._checks = checks
        self._printout = printout
        self._defaults = Config()

        ensure_dir(out_dir)
        logging.basicConfig(format='%(message)s', level=logging.INFO,
                            filename=os.path.join(out_dir, self._defaults.log_name),
                            filemode='w', force=True)
        self.logger = logging.getLogger(__name__)
        self.manifest = RunManifest(command, config_path, out_dir, seed, threads, checks)
        try:
            self._load()
        except Exception as e:
            with FileLock(self._lock_path):
                self._fail(e)
            raise

    def _printlog(self, message, printout=True):
        if printout and self._printout:
            print(message)
        self.logger.info(message)

    def _path(self, name):
        self.manifest.add_artifact(name)
        return os.path.join(self._out_dir, name)

    # ------------------------------------------------------------------ setup
    @property
    def _lock_path(self):
        return os.path.join(self._out_dir, '.mvreflect.lock')

    def _load(self):
        """ Read and build the run configuration. Every error raised here is a configuration error. """
        self.run_config = load_config(self._config_path)
        self.manifest.data['config'] = self.run_config.model_dump(mode='json')
        self.domain = build_domain(self.run_config.domain)
        self.coefficients = build_coefficients(self.run_config.coefficients, self.domain.dim)
        self.cfg = build_sim_config(self.run_config, self.domain, self.coefficients, seed=self._seed,
                                    threads=self._threads)
        self.coefficients.validate(self.domain, CounterRNG(self.cfg.seed, 'validate').generator(0))
        self.manifest.data['seed'] = self.cfg.seed
        self.frozen_flow_path = None
        if self.coefficients.measure_mode == 'frozen_flow':
            path = self.run_config.sim.frozen_flow
            if path is None:
                raise ConfigError('measure_mode "frozen_flow" needs sim.frozen_flow', field='sim.frozen_flow')
            if not os.path.isabs(path):
                path = os.path.join(os.path.dirname(os.path.abspath(self._config_path)), path)
            if not os.path.isfile(path):
                raise ConfigError('no flow file at {}'.format(path), field='sim.frozen_flow')
            self.frozen_flow_path = path

    def _fail(self, error):
        self.manifest.data['error'] = '{}: {}'.format(type(error).__name__, error)
        self.manifest.finalize('error')
        self.logger.exception('run failed')

    def run(self):
        """ Run the command. Returns True when every check passed (always True for commands without checks).
        Exceptions propagate after the manifest has been finalized with status "error".
        """
        with FileLock(self._lock_path):
            self.manifest.write()
            self._printlog('{}: domain {} in dimension {}, N={} T={:g} h={:g} seed={}'.format(
                self._command, self.domain.kind, self.domain.dim, self.cfg.N, self.cfg.T, self.cfg.h, self.cfg.seed))
            try:
                ok = getattr(self, '_cmd_' + self._command.replace('-', '_'))()
            except Exception as e:
                self._fail(e)
                raise
            self.manifest.finalize('passed' if ok else 'failed')
        return ok

    # ------------------------------------------------------------------ commands
    def _cmd_simulate(self):
        if self.frozen_flow_path is not None:
            path = self.frozen_flow_path
            frozen = MeasureFlow.from_csv(path, n_steps=self.cfg.n_steps)
            self._printlog('Freezing the drift to {} ({} snapshots)'.format(path, len(frozen)))
            result = apply_H(frozen, self.cfg)
        else:
            result = simulate_mckean(self.cfg)
        result.flow.to_csv(self._path('flow.csv'))
        CsvTable.write(self._path('stats.csv'), [PARTICLE_ID, SUP_ABS, LOCAL_TIME, TILDE_LOCAL_TIME],
                       np.column_stack([result.ensemble.ids, result.sup_abs, result.local_time,
                                        result.tilde_local_time]))
        self._printlog('Simulated {} steps, {} snapshots; mean l_T {:.6g}, mean sup|X| {:.6g}'.format(
            self.cfg.n_steps, len(result.flow), float(result.local_time.mean()), float(result.sup_abs.mean())))
        return True

    def _check_params(self, params):
        out = dict(params)
        for key in MEASURE_PARAMS:
            if key in out and out[key] is not None:
                out[key] = self._measure_param(key, out[key])
        if isinstance(out.get('oracle'), str):
            if out['oracle'] not in ORACLES:
                raise ConfigError('unknown oracle "{}"; available: {}'.format(out['oracle'], sorted(ORACLES)),
                                  field='verify.oracle')
            out['oracle'] = ORACLES[out['oracle']]
        return out

    def _measure_param(self, key, value):
        try:
            if isinstance(value, dict):
                law = build_initial_law(InitialModel.model_validate(value))
                return law.measure(self.cfg.N, self.domain, self.cfg.seed)
            return EmpiricalMeasure(as_points(value, self.domain.dim))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError('cannot read a measure: {}'.format(e), field='verify.' + key)

    def _cmd_verify(self):
        requested = self._checks
        configured = {c.name: c.params for c in self.run_config.verify.checks}
        if requested is None:
            requested = [c.name for c in self.run_config.verify.checks]
        if not requested:
            raise ConfigError('no checks requested', field='verify.checks')
        unknown = [name for name in requested if name not in CHECKS]
        if unknown:
            raise ConfigError('unknown checks {}; available: {}'.format(unknown, sorted(CHECKS)),
                              field='verify.checks')
        reports = []
        for name in requested:
            params = self._check_params(configured.get(name, {}))
            self._printlog('Running check {}'.format(name))
            try:
                inspect.signature(CHECKS[name]).bind(self.cfg, **params)
            except TypeError as e:
                raise ConfigError('bad parameters for check "{}": {}'.format(name, e), field='verify.checks')
            report = CHECKS[name](self.cfg, **params)
            self.logger.info('{} details: {}'.format(name, json.dumps(report.details, default=str)))
            reports.append(report)
        CsvTable.write_records(self._path('reports.csv'), [r.to_record() for r in reports])
        table = get_report_table(reports)
        with open(self._path('summary.txt'), 'w') as f:
            f.write(table)
        self._printlog(table)
        return all(r.passed for r in reports)

    def _cmd_picard(self):
        p = self.run_config.picard
        result = picard_solve(self.cfg, max_iter=p.max_iter, tol=p.tol, lam=p.lam)
        CsvTable.write_records(self._path('picard.csv'), result.records())
        result.flow.to_csv(self._path('flow.csv'))
        if result.converged:
            self._printlog('Picard iteration converged after {} iterations (fixed point at iterate {})'.format(
                result.iterations, result.fixed_iteration))
        else:
            self._printlog('Picard iteration did not converge in {} iterations'.format(result.iterations))
        return result.converged

    def _cmd_couple(self):
        c = self.run_config.couple
        if c is None:
            raise ConfigError('the couple command needs a "couple" section', field='couple')
        mu_flow = nu_flow = None
        if self.coefficients.drift.depends_on_measure:
            horizon = self.cfg.replace(T=c.t0, h=min(self.cfg.h, c.t0))
            mu_flow = simulate_mckean(horizon, EmpiricalMeasure(as_points(c.x0, self.domain.dim))).flow
            nu_flow = simulate_mckean(horizon, EmpiricalMeasure(as_points(c.y0, self.domain.dim))).flow
        record = couple_pair(self.cfg, c.x0, c.y0, c.t0, L=c.L, mu_flow=mu_flow, nu_flow=nu_flow, n_pairs=c.n_pairs)
        CsvTable.write_records(self._path('coupling.csv'), record.records())
        CsvTable.write_records(self._path('pairs.csv'), [
            {'pair': i, 'terminal_gap': float(g), 'cost': float(cost), 'l_x': float(lx), 'l_y': float(ly)}
            for i, (g, cost, lx, ly) in enumerate(zip(record.terminal_gaps, record.costs, record.local_time_x,
                                                      record.local_time_y))])
        self._printlog('Coupling: mean cost {:.6g}, cost ratio {:.6g}, max terminal gap {:.3g}, '
                       'clamped steps {}'.format(record.mean_cost, record.cost_ratio(), record.max_terminal_gap,
                                                 record.clamped_steps))
        return True

    def _pde_box(self):
        p = self.run_config.pde
        lo, hi = self.domain.bounding_box()
        lo = np.asarray(p.lo if p.lo is not None else lo, dtype=float)
        hi = np.asarray(p.hi if p.hi is not None else hi, dtype=float)
        if len(lo) != self.domain.dim or len(hi) != self.domain.dim:
            raise ConfigError('pde box of dimension {} for a {}-dimensional domain'.format(
                len(lo), self.domain.dim), field='pde.lo')
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ConfigError('pde-compare needs a bounded box; set pde.lo and pde.hi', field='pde.lo')
        return lo, hi

    def _cmd_pde_compare(self):
        p = self.run_config.pde
        if self.domain.dim > 2:
            raise ConfigError('the finite-volume solver supports d <= 2', field='domain')
        lo, hi = self._pde_box()
        flow = simulate_mckean(self.cfg).flow
        if p.initial == 'uniform':
            grid = DensityGrid.uniform(lo, hi, p.cells)
        elif p.initial == 'bump':
            center = p.bump_center if p.bump_center is not None else 0.5 * (lo + hi)
            grid = DensityGrid.bump(lo, hi, p.cells, center, p.bump_width)
        else:
            grid = DensityGrid.from_samples(flow.positions[0], lo, hi, p.cells)

        # one solve per recording interval of the flow, so both share every comparison time
        grids, h = [grid], p.h
        for t_prev, t_next in zip(flow.times[:-1], flow.times[1:]):
            piece = solve(grids[-1], self.coefficients, float(t_next - t_prev), h=p.h, record_stride=1)
            grids.extend(piece.grids[1:])
            h = piece.h
        trajectory = PdeTrajectory(grids, h)
        table = compare_particle_pde(flow, trajectory, times=flow.times)

        functions = [make_neumann_function(name, lo, hi, axis)
                     for name in p.test_functions for axis in range(self.domain.dim)]
        residuals = weak_form_residual(trajectory, self.coefficients, functions)

        CsvTable.write_records(self._path('compare.csv'), table.records())
        CsvTable.write_records(self._path('weak_form.csv'), [
            {'function': r.name, 'residual': r.residual, 'neumann_defect': r.neumann_defect} for r in residuals])
        PdeTrajectory([trajectory.at_time(t) for t in flow.times], h).to_csv(self._path('density.csv'))
        self._printlog(table.table())
        for r in residuals:
            self._printlog('weak form residual {}: {:.3g}'.format(r.name, r.residual))
        return True
