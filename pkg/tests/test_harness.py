"""
Tests for crowdcache.harness.
"""
from __future__ import generator_stop
import filecmp
import os
import shutil
import tempfile
import unittest
from io import StringIO

import pytest
from mock import MagicMock, patch

from crowdcache.baselines import POLICIES, PolicyError
from crowdcache.harness import (
    CSV_COLUMNS,
    CrowdcacheApplication,
    SweepResult,
    SweepRow,
    SweepSpec,
    apply_axis,
    emit_csv,
    improvement_table,
    run_sweep,
    write_trace,
)
from crowdcache.oracle import ScalingResult
from crowdcache.policy import run_horizon
from crowdcache.scenario import ConfigError, ScenarioConfig, generate_scenario

SMALL = {'num_slots': 15, 'num_task_types': 3, 'num_users': 4, 'num_subchannels': 3}


def _row(axis_value, policy, mean):
    return SweepRow(axis_value, policy, mean, 0.0, 0.0, 0.0, 0.0, 0, 1)


class SweepSpecTest(unittest.TestCase):

    def test_defaults(self):
        spec = SweepSpec('num_users', (10.0, 20.0))
        self.assertEqual(('proposed', 'b1', 'b2', 'b3', 'b4', 'b5'), spec.policies)
        self.assertEqual(50, len(spec.seeds))

    def test_unknown_axis(self):
        with pytest.raises(ConfigError) as error:
            SweepSpec('bandwidth', (1.0,))
        self.assertEqual('axis', error.value.field)

    def test_unsorted_values(self):
        with pytest.raises(ConfigError):
            SweepSpec('num_users', (20.0, 10.0))

    def test_empty(self):
        with pytest.raises(ConfigError):
            SweepSpec('num_users', ())
        with pytest.raises(ConfigError):
            SweepSpec('num_users', (10.0,), seeds=())

    def test_unknown_policy(self):
        with pytest.raises(PolicyError):
            SweepSpec('num_users', (10.0,), policies=('proposed', 'b7'))


class ApplyAxisTest(unittest.TestCase):

    def test_power_is_fixed(self):
        config = apply_axis(ScenarioConfig(), 'transmit_power', 0.15)
        self.assertEqual((0.15, 0.15), config.power_range)

    def test_task_size_is_fixed(self):
        config = apply_axis(ScenarioConfig(), 'task_size', 2e7)
        self.assertEqual((2e7, 2e7), config.task_size_range)

    def test_counts(self):
        config = apply_axis(ScenarioConfig(), 'num_subchannels', 12.0)
        self.assertEqual(12, config.num_subchannels)
        self.assertIsInstance(config.num_subchannels, int)
        with pytest.raises(ConfigError):
            apply_axis(ScenarioConfig(), 'num_users', 2.5)


class RunSweepTest(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def test_one_row_per_value_and_policy(self):
        spec = SweepSpec('num_users', (2.0, 4.0), seeds=(0, 1), overrides=SMALL)

        result = run_sweep(spec, logger=MagicMock(), stats=MagicMock())

        self.assertEqual(12, len(result.rows))
        self.assertEqual([(2.0, p) for p in spec.policies] + [(4.0, p) for p in spec.policies],
                         [(r.axis_value, r.policy) for r in result.rows])
        self.assertTrue(all(r.num_seeds == 2 for r in result.rows))

    def test_single_cell(self):
        spec = SweepSpec('num_users', (4.0,), policies=('proposed',), seeds=tuple(range(5)), overrides=SMALL)

        result = run_sweep(spec, logger=MagicMock(), stats=MagicMock())

        self.assertEqual(1, len(result.rows))
        row = result.row(4.0, 'proposed')
        self.assertEqual(5, row.num_seeds)
        self.assertGreater(row.sem, 0.0)

    def test_matches_per_seed_runs(self):
        spec = SweepSpec('num_users', (4.0,), policies=('b5',), seeds=(3,), overrides=SMALL)

        result = run_sweep(spec, logger=MagicMock(), stats=MagicMock())

        config = ScenarioConfig.from_mapping(SMALL).replace(rng_seed=3)
        expected = run_horizon(generate_scenario(config), policy='b5').metrics
        self.assertEqual(expected.mean_objective, result.rows[0].mean_objective)
        self.assertEqual(0.0, result.rows[0].sem)

    def test_workers_do_not_change_results(self):
        spec = SweepSpec('num_subchannels', (2.0, 3.0), policies=('proposed', 'b2'), seeds=(0, 1, 2),
                         overrides=SMALL)

        serial = run_sweep(spec, logger=MagicMock(), stats=MagicMock())
        parallel = run_sweep(spec, workers=2, logger=MagicMock(), stats=MagicMock())

        self.assertEqual(serial.rows, parallel.rows)

    def test_reruns_write_identical_files(self):
        spec = SweepSpec('transmit_power', (0.1, 0.2), policies=('proposed', 'b1'), seeds=(0, 1),
                         overrides=SMALL)
        first, second = os.path.join(self.tmpdir, 'a.csv'), os.path.join(self.tmpdir, 'b.csv')

        self.assertEqual(4, emit_csv(run_sweep(spec, logger=MagicMock(), stats=MagicMock()), first))
        emit_csv(run_sweep(spec, logger=MagicMock(), stats=MagicMock()), second)

        self.assertTrue(filecmp.cmp(first, second, shallow=False))
        with open(first) as handle:
            lines = handle.read().splitlines()
        self.assertEqual(','.join(CSV_COLUMNS), lines[0])
        self.assertEqual(5, len(lines))

    def test_latency_grows_with_task_size(self):
        """Always re-sensing, every slot pays a latency that grows with the demand."""
        overrides = dict(SMALL, energy_budget_range='1,1')
        spec = SweepSpec('task_size', (0.5e7, 1e7, 1.5e7), policies=('b5',), seeds=(0, 1), overrides=overrides)

        series = run_sweep(spec, logger=MagicMock(), stats=MagicMock()).series('b5')

        self.assertEqual(sorted(series), series)
        self.assertLess(series[0], series[-1])

    def test_invalid_override(self):
        spec = SweepSpec('num_users', (4.0,), overrides={'num_slots': '0'})
        with pytest.raises(ConfigError):
            run_sweep(spec, logger=MagicMock(), stats=MagicMock())

    def test_no_policies_writes_header_only(self):
        path = os.path.join(self.tmpdir, 'empty.csv')
        spec = SweepSpec('num_users', (4.0,), policies=(), seeds=(0,), overrides=SMALL)
        result = run_sweep(spec, logger=MagicMock(), stats=MagicMock())

        self.assertEqual(0, emit_csv(result, path))
        with open(path) as handle:
            self.assertEqual(','.join(CSV_COLUMNS) + '\n', handle.read())


class ImprovementTableTest(unittest.TestCase):

    def setUp(self):
        spec = SweepSpec('num_users', (10.0, 20.0), policies=('proposed', 'b1', 'b5'), seeds=(0,))
        self.result = SweepResult(spec, (
            _row(10.0, 'proposed', 2.0), _row(10.0, 'b1', 4.0), _row(10.0, 'b5', 2.5),
            _row(20.0, 'proposed', 3.0), _row(20.0, 'b1', 3.0), _row(20.0, 'b5', 6.0),
        ))

    def test_percent_reduction(self):
        self.assertEqual([
            (10.0, 'b1', 50.0),
            (10.0, 'b5', 20.0),
            (20.0, 'b1', 0.0),
            (20.0, 'b5', 50.0),
        ], improvement_table(self.result))

    def test_missing_reference(self):
        with pytest.raises(PolicyError):
            improvement_table(self.result, reference='b4')


def test_write_trace(tmpdir):
    config = ScenarioConfig.from_mapping(SMALL)
    result = run_horizon(generate_scenario(config))
    path = str(tmpdir.join('trace.csv'))

    assert write_trace(path, result) == config.num_slots

    lines = tmpdir.join('trace.csv').read().splitlines()
    assert lines[0] == 't,task_id,l,latency,aoi,slot_cost,cache_bits,evictions'
    assert lines[1].startswith('1,%d,1,' % result.trace[0].task_id)


class CrowdcacheApplicationTest(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def _path(self, name):
        return os.path.join(self.tmpdir, name)

    def _run(self, *args):
        app = CrowdcacheApplication(parser_args=list(args) + ['--no-log-to-stdout'])
        with patch('sys.exit') as mock_exit, patch('sys.stdout', new_callable=StringIO) as stdout:
            with app.context():
                app.run()
        return mock_exit, stdout.getvalue()

    def test_run(self):
        trace = self._path('trace.csv')

        mock_exit, output = self._run('run', '--num-slots', '12', '--num-users', '3', '--num-subchannels', '2',
                                      '--seed', '4', '--policy', 'b4', '--trace-file', trace)

        mock_exit.assert_called_once_with(0)
        self.assertTrue(output.startswith('policy=b4 seed=4 mean_objective='))
        with open(trace) as handle:
            self.assertEqual(13, len(handle.read().splitlines()))

    def test_invalid_configuration(self):
        mock_exit, _ = self._run('run', '--num-users', '0')

        self.assertEqual(2, mock_exit.call_args_list[0][0][0])

    def test_missing_configuration_file(self):
        mock_exit, _ = self._run('run', '--config', self._path('missing.conf'))

        self.assertEqual(2, mock_exit.call_args_list[0][0][0])

    def test_sweep_needs_output(self):
        mock_exit, _ = self._run('sweep', '--axis', 'num_users', '--axis-values', '2,3')

        self.assertEqual(2, mock_exit.call_args_list[0][0][0])

    def test_sweep_from_configuration_file(self):
        config = self._path('sweep.conf')
        with open(config, 'w') as handle:
            handle.write('\n'.join([
                'axis = num_users',
                'axis_values = 2, 3',
                'policies = proposed, b5',
                'seeds = 0, 1',
                'num_slots = 10',
                'num_subchannels = 2',
            ]))
        output, improvement = self._path('sweep.csv'), self._path('improvement.csv')

        mock_exit, _ = self._run('sweep', '--config', config, '--output', output,
                                 '--improvement-output', improvement)

        mock_exit.assert_called_once_with(0)
        with open(output) as handle:
            lines = handle.read().splitlines()
        self.assertEqual(5, len(lines))
        self.assertTrue(lines[1].startswith('2.0,proposed,'))
        self.assertTrue(lines[4].startswith('3.0,b5,'))
        with open(improvement) as handle:
            self.assertEqual(['axis,baseline,improvement_pct'], handle.read().splitlines()[:1])
        self.assertFalse(os.path.exists(output + '.lock'))

    def test_sweep_flags_override_file(self):
        config = self._path('sweep.conf')
        with open(config, 'w') as handle:
            handle.write('axis = num_users\naxis_values = 2\nnum_slots = 5\n')

        app = CrowdcacheApplication(parser_args=['sweep', '--config', config, '--axis-values', '2,4',
                                                 '--seeds', '7', '--no-log-to-stdout'])
        app.scenario_config()
        spec = app.sweep_spec()

        self.assertEqual((2.0, 4.0), spec.axis_values)
        self.assertEqual((7,), spec.seeds)
        self.assertEqual('num_users', spec.axis)

    def test_unparsable_seeds(self):
        app = CrowdcacheApplication(parser_args=['sweep', '--axis', 'num_users', '--axis-values', '2',
                                                 '--seeds', 'one', '--no-log-to-stdout'])
        app.scenario_config()

        with pytest.raises(ConfigError) as error:
            app.sweep_spec()
        self.assertEqual('seeds', error.value.field)

    def test_oracle(self):
        report = self._path('oracle.txt')

        mock_exit, output = self._run('oracle', '--instances', '20', '--report', report)

        mock_exit.assert_called_once_with(0)
        with open(report) as handle:
            self.assertEqual(output, handle.read())
        self.assertIn('matching', output)
        self.assertIn('eviction', output)

    @patch('crowdcache.harness.measure_complexity')
    def test_oracle_complexity_has_as_many_users_as_subchannels(self, mock_measure):
        """
        --complexity times N up to 256 with K = 256, so every size fills N pairs
        """
        mock_measure.return_value = ScalingResult({32: 1e-4, 256: 6.4e-3}, 2.0)

        mock_exit, output = self._run('oracle', '--instances', '20', '--complexity', '--seed', '3')

        mock_exit.assert_called_once_with(0)
        args, kwargs = mock_measure.call_args
        self.assertEqual((256, (32, 64, 128, 256)), args)
        self.assertEqual(3, kwargs['seed'])
        self.assertIn('complexity           slope=2.000', output)


@pytest.mark.slow
class SweepTrendTest(unittest.TestCase):
    """
    Policy comparisons at the default users, subchannels and 0.1 W, on
    shortened horizons (300 slots, 8 seeds per point)
    """

    SEEDS = tuple(range(8))
    OVERRIDES = {'num_slots': 300}

    def _sweep(self, axis, values, policies=tuple(POLICIES), **overrides):
        spec = SweepSpec(axis, values, policies=policies, seeds=self.SEEDS,
                         overrides=dict(self.OVERRIDES, **overrides))
        return run_sweep(spec, workers=2, logger=MagicMock(), stats=MagicMock())

    def test_proposed_beats_every_baseline(self):
        result = self._sweep('transmit_power', (0.1,))
        means = {policy: result.row(0.1, policy).mean_objective for policy in POLICIES}

        self.assertEqual('proposed', min(means, key=means.get))
        # the cache-less optimum is the strongest baseline
        self.assertEqual('b5', min((p for p in means if p != 'proposed'), key=means.get))
        self.assertGreaterEqual(1.0 - means['proposed'] / means['b1'], 0.80)
        self.assertGreaterEqual(1.0 - means['proposed'] / means['b5'], 0.10)

    def test_task_split_matters_more_than_assignment(self):
        """
        With the fractional split weighed by processing rate, every fractional
        baseline beats the even split
        """
        result = self._sweep('transmit_power', (0.1,), policies=('proposed', 'b1', 'b2', 'b3', 'b4'),
                             fractional_weight='processing_rate')
        means = {policy: result.row(0.1, policy).mean_objective for policy in ('proposed', 'b1', 'b2', 'b3', 'b4')}

        self.assertEqual('proposed', min(means, key=means.get))
        for policy in ('b2', 'b3', 'b4'):
            self.assertLess(means[policy], means['b1'], policy)

    def test_more_users_lower_the_objective(self):
        series = self._sweep('num_users', (25.0, 35.0, 45.0), policies=('proposed',)).series('proposed')

        self.assertGreater(series[0], series[1])
        self.assertGreater(series[1], series[2])

    def test_more_subchannels_keep_proposed_lowest(self):
        values = (6.0, 16.0, 26.0)
        result = self._sweep('num_subchannels', values, policies=('proposed', 'b1', 'b2', 'b5'))

        proposed = result.series('proposed')
        self.assertGreater(proposed[0], proposed[-1])
        for value in values:
            best = result.row(value, 'proposed').mean_objective
            for policy in ('b1', 'b2', 'b5'):
                self.assertLess(best, result.row(value, policy).mean_objective, (value, policy))

    def test_objective_grows_with_task_size(self):
        values = (0.5e7, 1.0e7, 1.5e7)
        result = self._sweep('task_size', values, policies=('proposed', 'b1', 'b5'))

        for policy in ('proposed', 'b1', 'b5'):
            series = result.series(policy)
            self.assertLess(series[0], series[-1], policy)
        for value in values:
            best = result.row(value, 'proposed').mean_objective
            self.assertLess(best, result.row(value, 'b1').mean_objective)
            self.assertLess(best, result.row(value, 'b5').mean_objective)
