"""
Experiment runner: parameter sweeps over the policies, CSV output and the
``crowdcache`` command.

A sweep varies one scenario quantity (transmit power, number of users,
number of subchannels or task size). Every (axis value, seed) cell draws one
scenario and runs every policy on it, so the policies are compared on the
same channel and task realizations. Cells may run in a process pool; the
reduction orders them by (axis value, policy, seed), so the CSV does not
depend on completion order.

Usage::

        crowdcache run --policy proposed --rng-seed 3 --trace-file trace.csv
        crowdcache sweep --axis transmit_power --axis-values 0.1,0.15,0.2 --output power.csv
        crowdcache oracle --instances 10000
"""
from __future__ import generator_stop

import multiprocessing
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from crowdcache import constants
from crowdcache.baselines import POLICIES, PolicyError, get_policy
from crowdcache.cli import Application
from crowdcache.io import IO
from crowdcache.logging import get_logger
from crowdcache.oracle import measure_complexity, run_oracle_suite
from crowdcache.parser import get_group
from crowdcache.policy import TRACE_COLUMNS, HorizonResult, RunMetrics, run_horizon
from crowdcache.scenario import ConfigError, ScenarioConfig, generate_scenario
from crowdcache.stats import get_stats
from crowdcache.util import improvement_percentage, mean_and_sem

AXES = ('transmit_power', 'num_users', 'num_subchannels', 'task_size')
CSV_COLUMNS = ('axis', 'policy', 'mean_objective', 'sem', 'hit_rate', 'mean_latency', 'mean_aoi',
               'infeasible_slots')
IMPROVEMENT_COLUMNS = ('axis', 'baseline', 'improvement_pct')
SWEEP_KEYS = ('axis', 'axis_values', 'policies', 'seeds')
COMMANDS = ('run', 'sweep', 'oracle')


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    axis_values: Tuple[float, ...]
    policies: Tuple[str, ...] = tuple(POLICIES)
    seeds: Tuple[int, ...] = tuple(range(constants.DEFAULT_SWEEP_SEEDS))
    overrides: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError('axis', 'expected one of %s, got %r' % (', '.join(AXES), self.axis))
        if not self.axis_values:
            raise ConfigError('axis_values', 'at least one value is required')
        if list(self.axis_values) != sorted(self.axis_values):
            raise ConfigError('axis_values', 'values must be sorted, got %r' % (self.axis_values,))
        if not self.seeds:
            raise ConfigError('seeds', 'at least one seed is required')
        for name in self.policies:
            get_policy(name)


def apply_axis(config: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    """CONFIG with the swept quantity fixed at VALUE."""
    if axis == 'transmit_power':
        return config.replace(power_range=(float(value), float(value)))
    if axis == 'task_size':
        return config.replace(task_size_range=(float(value), float(value)))
    if axis in ('num_users', 'num_subchannels'):
        if float(value) != int(value):
            raise ConfigError(axis, 'must be an integer, got %r' % (value,))
        return config.replace(**{axis: int(value)})
    raise ConfigError('axis', 'expected one of %s, got %r' % (', '.join(AXES), axis))


def run_cell(config: ScenarioConfig, policies: Sequence[str], seed: int) -> List[Tuple[str, RunMetrics]]:
    """All POLICIES on the scenario drawn from CONFIG with SEED."""
    scenario = generate_scenario(config.replace(rng_seed=seed))
    return [(name, run_horizon(scenario, policy=name).metrics) for name in policies]


def _run_cell_job(job):
    # Pool workers receive one picklable tuple.
    axis_value, config, policies, seed = job
    stats = get_stats(prefix='sweep')
    with stats.timer('sweep.cell'):
        return axis_value, seed, run_cell(config, policies, seed)


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    policy: str
    mean_objective: float
    sem: float
    hit_rate: float
    mean_latency: float
    mean_aoi: float
    infeasible_slots: int
    num_seeds: int

    def csv_row(self) -> Tuple:
        return (self.axis_value, self.policy, self.mean_objective, self.sem, self.hit_rate, self.mean_latency,
                self.mean_aoi, self.infeasible_slots)


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: Tuple[SweepRow, ...]

    def row(self, axis_value, policy: str) -> SweepRow:
        for row in self.rows:
            if row.axis_value == axis_value and row.policy == policy:
                return row
        raise KeyError((axis_value, policy))

    def series(self, policy: str) -> List[float]:
        """mean_objective of POLICY along the axis."""
        return [r.mean_objective for r in self.rows if r.policy == policy]


def aggregate(spec: SweepSpec, cells: Sequence[Tuple[object, int, Sequence[Tuple[str, RunMetrics]]]]) -> SweepResult:
    """
    Reduce per-cell metrics to one row per (axis value, policy), in the
    spec's axis, policy and seed order.
    """
    by_key = {}  # type: Dict[Tuple[object, str, int], RunMetrics]
    for axis_value, seed, metrics in cells:
        for name, run in metrics:
            by_key[(axis_value, name, seed)] = run

    rows = []
    for axis_value in spec.axis_values:
        for name in spec.policies:
            runs = [by_key[(axis_value, name, seed)] for seed in spec.seeds]
            mean, sem = mean_and_sem(r.mean_objective for r in runs)
            rows.append(SweepRow(
                axis_value=axis_value,
                policy=name,
                mean_objective=mean,
                sem=sem,
                hit_rate=mean_and_sem(r.cache_hit_rate for r in runs)[0],
                mean_latency=mean_and_sem(r.mean_latency_on_sense for r in runs)[0],
                mean_aoi=mean_and_sem(r.mean_aoi_on_hit for r in runs)[0],
                infeasible_slots=sum(r.infeasible_slots for r in runs),
                num_seeds=len(runs),
            ))
    return SweepResult(spec, tuple(rows))


def run_sweep(spec: SweepSpec, base_config: Optional[ScenarioConfig] = None, workers: int = 1,
              logger=None, stats=None) -> SweepResult:
    """
    Run every (axis value, seed) cell of SPEC. Invalid overrides or axis
    values raise ConfigError before any cell runs.
    """
    logger = logger or get_logger(__name__)
    stats = stats or get_stats(prefix='sweep')
    base = ScenarioConfig.from_mapping(spec.overrides, base=base_config)
    configs = OrderedDict((value, apply_axis(base, spec.axis, value)) for value in spec.axis_values)
    jobs = [(value, config, spec.policies, seed) for value, config in configs.items() for seed in spec.seeds]

    logger.info('Sweeping %s over %s: %d policies, %d seeds, %d cells on %d workers', spec.axis,
                list(spec.axis_values), len(spec.policies), len(spec.seeds), len(jobs), workers)
    with stats.timer('sweep.run'):
        if workers > 1 and len(jobs) > 1 and spec.policies:
            with multiprocessing.Pool(workers) as pool:
                cells = pool.map(_run_cell_job, jobs)
        else:
            cells = [_run_cell_job(job) for job in jobs]
    return aggregate(spec, cells)


def emit_csv(result: SweepResult, path: str, io: Optional[IO] = None) -> int:
    """Header plus one row per (axis value, policy). Returns the number of data rows."""
    io = io or IO()
    return io.write_csv(path, CSV_COLUMNS, (row.csv_row() for row in result.rows))


def improvement_table(result: SweepResult, reference: str = 'proposed') -> List[Tuple[object, str, float]]:
    """
    (axis value, baseline, percent reduction of the mean objective achieved
    by REFERENCE against that baseline) for every other policy.
    """
    if reference not in result.spec.policies:
        raise PolicyError('reference policy %r was not part of the sweep' % (reference,))
    table: List[Tuple[object, str, float]] = []
    for axis_value in result.spec.axis_values:
        ours = result.row(axis_value, reference).mean_objective
        for name in result.spec.policies:
            if name == reference:
                continue
            theirs = result.row(axis_value, name).mean_objective
            table.append((axis_value, name, improvement_percentage(theirs, ours)))
    return table


def write_trace(path: str, result: HorizonResult, io: Optional[IO] = None) -> int:
    """One row per slot: t, task_id, l, latency, aoi, slot_cost, cache_bits, evictions."""
    io = io or IO()
    return io.write_csv(path, TRACE_COLUMNS, result.trace_rows())


def _split(text, cast):
    if text is None:
        return None
    if not isinstance(text, str):
        return tuple(cast(v) for v in text)
    return tuple(cast(v) for v in text.replace(' ', '').split(',') if v)


class CrowdcacheApplication(Application):
    """The ``crowdcache`` command: ``run``, ``sweep`` or ``oracle``."""

    FILE_ONLY_KEYS = SWEEP_KEYS

    def __init__(self, name='crowdcache', **kwargs):
        super(CrowdcacheApplication, self).__init__(name=name, **kwargs)

    def add_cli_arguments(self, parser):
        super(CrowdcacheApplication, self).add_cli_arguments(parser)

        parser.add_argument('command', choices=COMMANDS, help='What to do.')

        group = get_group(parser, 'run')
        group.add_argument(
            '--policy',
            default=constants.DEFAULT_POLICY,
            choices=list(POLICIES),
            env_var='RUN_POLICY',
            help='Policy to simulate.',
        )
        group.add_argument(
            '--seed',
            type=int,
            default=None,
            help='Scenario seed; same as --rng-seed.',
        )
        group.add_argument(
            '--trace-file',
            default=None,
            help='Write the per-slot trace to this CSV file.',
        )

        group = get_group(parser, 'sweep')
        group.add_argument(
            '--axis',
            default=None,
            choices=AXES,
            env_var=None,
            help='Scenario quantity to sweep.',
        )
        group.add_argument(
            '--axis-values',
            default=None,
            env_var=None,
            help='Comma-separated sorted values of the swept quantity.',
        )
        group.add_argument(
            '--policies',
            default=None,
            env_var=None,
            help='Comma-separated policies (default: all of %s).' % ', '.join(POLICIES),
        )
        group.add_argument(
            '--seeds',
            default=None,
            env_var=None,
            help='Comma-separated seeds; overrides --num-seeds.',
        )
        group.add_argument(
            '--num-seeds',
            type=int,
            default=constants.DEFAULT_SWEEP_SEEDS,
            env_var=None,
            help='Seeds 0..n-1 per axis value.',
        )
        group.add_argument(
            '--workers',
            type=int,
            default=1,
            env_var=None,
            help='Worker processes for the sweep cells.',
        )
        group.add_argument(
            '--output',
            default=None,
            env_var=None,
            help='Sweep CSV path (required for sweep).',
        )
        group.add_argument(
            '--improvement-output',
            default=None,
            env_var=None,
            help='Also write the improvement of the proposed policy over each baseline.',
        )

        group = get_group(parser, 'oracle')
        group.add_argument(
            '--instances',
            type=int,
            default=constants.DEFAULT_ORACLE_INSTANCES,
            env_var=None,
            help='Random instances per oracle check.',
        )
        group.add_argument(
            '--complexity',
            default=False,
            action='store_true',
            help='Also time the per-slot solver against the number of subchannels, with as many users as the largest.',
        )
        group.add_argument(
            '--report',
            default=None,
            env_var=None,
            help='Write the oracle report to this file.',
        )

    def sweep_spec(self) -> SweepSpec:
        """The sweep from the configuration file, overridden by flags."""
        values = dict(self.file_extras)
        for key in SWEEP_KEYS:
            flag = getattr(self.args, key)
            if flag is not None:
                values[key] = flag
        if 'axis' not in values:
            raise ConfigError('axis', 'a sweep needs --axis')
        if 'axis_values' not in values:
            raise ConfigError('axis_values', 'a sweep needs --axis-values')
        try:
            axis_values = _split(values['axis_values'], float)
        except ValueError as err:
            raise ConfigError('axis_values', str(err))
        try:
            seeds = _split(values.get('seeds'), int)
        except ValueError as err:
            raise ConfigError('seeds', str(err))
        policies = _split(values.get('policies'), str)
        return SweepSpec(
            axis=values['axis'],
            axis_values=axis_values,
            policies=policies if policies is not None else tuple(POLICIES),
            seeds=seeds if seeds is not None else tuple(range(self.args.num_seeds)),
        )

    def command_run(self, config: ScenarioConfig) -> int:
        result = run_horizon(generate_scenario(config), policy=self.args.policy, logger=self.logger,
                             stats=self.stats)
        if self.args.trace_file:
            write_trace(self.args.trace_file, result, self.io)
        metrics = result.metrics
        print('policy=%s seed=%d mean_objective=%r hit_rate=%r mean_latency=%r mean_aoi=%r infeasible_slots=%d' % (
            result.policy, config.rng_seed, metrics.mean_objective, metrics.cache_hit_rate,
            metrics.mean_latency_on_sense, metrics.mean_aoi_on_hit, metrics.infeasible_slots))
        return 1 if result.violations else 0

    def command_sweep(self, config: ScenarioConfig) -> int:
        spec = self.sweep_spec()
        if not self.args.output:
            raise ConfigError('output', 'a sweep needs --output')
        if self.args.workers < 1:
            raise ConfigError('workers', 'must be at least 1, got %d' % self.args.workers)
        self.lock_output(self.args.output)

        result = run_sweep(spec, base_config=config, workers=self.args.workers, logger=self.logger,
                           stats=self.stats)
        emit_csv(result, self.args.output, self.io)
        if 'proposed' in spec.policies and len(spec.policies) > 1:
            table = improvement_table(result)
            for axis_value, baseline, pct in table:
                self.logger.info('%s=%r: proposed improves on %s by %.2f%%', spec.axis, axis_value, baseline, pct)
            if self.args.improvement_output:
                self.io.write_csv(self.args.improvement_output, IMPROVEMENT_COLUMNS, table)
        return 0

    def command_oracle(self, config: ScenarioConfig) -> int:
        report = run_oracle_suite(self.args.instances, config.rng_seed, config=config, logger=self.logger)
        text = report.format()
        if self.args.complexity:
            subchannels = constants.COMPLEXITY_SUBCHANNELS
            scaling = measure_complexity(max(subchannels), subchannels, seed=config.rng_seed, config=config)
            text += 'complexity           slope=%.3f medians=%s\n' % (scaling.slope, scaling.medians)
        print(text, end='')
        if self.args.report:
            self.io.write_text(self.args.report, text)
        return 0 if report.passed else 1

    def run(self):
        """Run the command; validation errors are turned into exit code 2 by ``context()``."""
        config = self.scenario_config()
        code = getattr(self, 'command_%s' % self.args.command)(config)
        if code:
            self.exit(code)


def main():
    app = CrowdcacheApplication()
    with app.context():
        app.run()


# Run the application stand alone
if __name__ == '__main__':
    main()
