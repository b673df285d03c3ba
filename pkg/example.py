#!/usr/bin/env python3
from crowdcache import cli
from crowdcache.parser import get_group
from crowdcache.policy import run_horizon
from crowdcache.scenario import generate_scenario


class CompareApp(cli.Application):
    """
    Runs two policies on the same scenario and prints their mean objective.

    The base class provides the option parser (every scenario field is a flag
    or a SCENARIO_* variable), the logger, the stats client and the context
    manager that runs the exit hooks.
    """

    def __init__(self, name='compare', parser=None, logger=None, log_to_stdout=True, parser_args=None):
        super(CompareApp, self).__init__(
            name=name,
            parser=parser,
            logger=logger,
            log_to_stdout=log_to_stdout,
            parser_args=parser_args,
        )

        self.policies = (self.args.left, self.args.right)

    def add_cli_arguments(self, parser):
        super(CompareApp, self).add_cli_arguments(parser)

        group = get_group(self.parser, self.name)
        group.add_argument(
            '--left',
            default='proposed',
            help='First policy.',
        )
        group.add_argument(
            '--right',
            default='b5',
            help='Second policy.',
        )

    def run(self):
        scenario = generate_scenario(self.scenario_config())
        for policy in self.policies:
            metrics = run_horizon(scenario, policy=policy, logger=self.logger, stats=self.stats).metrics
            print('{:10s} mean objective {:.6g}, hit rate {:.3f}'.format(
                policy, metrics.mean_objective, metrics.cache_hit_rate))


def main():
    # try: python example.py --num-slots 200 --right b1 --log-level info
    app = CompareApp()
    with app.context():
        app.run()


if __name__ == '__main__':
    main()
