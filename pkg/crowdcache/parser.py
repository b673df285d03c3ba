"""
Command-line parsing for the crowdcache runner.

Options live in named groups, and each group can read its defaults from the
environment: ``--num-users`` in the ``scenario`` group falls back to
``SCENARIO_NUM_USERS``. The scenario options default to None because the
configuration file and the built-in defaults are merged later, by
:py:meth:`crowdcache.scenario.ScenarioConfig.from_mapping`. The resulting
precedence is flag, then environment, then file, then default.
"""
from __future__ import generator_stop

from argparse import ArgumentParser, _ArgumentGroup
from os import environ
from typing import List, Optional

from crowdcache.constants import DEFAULT_STATSD_HOST, DEFAULT_STATSD_PORT
from crowdcache.logging import DEFAULT_LOG_LEVEL, LEVELS
from crowdcache.scenario import SCENARIO_FIELDS


def get_parser(logging=True, stats=True, scenario=True, logging_stdout_default=True, *args, **kwargs):
    """
    A :py:class:`CrowdParser` with the requested standard groups. Extra
    arguments go to the parser constructor.
    """
    parser = CrowdParser(*args, **kwargs)
    if logging:
        parser = add_logging_args(parser, logging_stdout_default)
    if stats:
        parser = add_stats_args(parser)
    if scenario:
        parser = add_scenario_args(parser)
    return parser


def add_logging_args(parser, stdout_default=True):
    """
    ``--log-level``, ``--log-file`` and the stdout switch. The switch is
    ``--no-log-to-stdout`` when STDOUT_DEFAULT is true and ``--log-to-stdout``
    otherwise; both store into ``log_to_stdout``.
    """
    group = get_group(parser=parser, group_name='logging')

    group.add_argument(
        '--log-level',
        default=DEFAULT_LOG_LEVEL,
        choices=list(LEVELS),
        env_var='LOG_LEVEL',
        help='Minimum level of the messages to log.',
    )
    group.add_argument(
        '--log-file',
        default=None,
        env_var='LOG_FILE',
        help='Also append the log to this file.',
    )
    if stdout_default:
        switch, action, help_text = '--no-log-to-stdout', 'store_false', 'Do not log to stdout/stderr.'
    else:
        switch, action, help_text = '--log-to-stdout', 'store_true', 'Log to stdout/stderr as well.'
    group.add_argument(
        switch,
        dest='log_to_stdout',
        default=stdout_default,
        action=action,
        help=help_text,
    )

    return parser


def add_stats_args(parser):
    """``--stats`` switches from the no-op client to statsd at ``--stats-host:--stats-port``."""
    group = get_group(parser=parser, group_name='stats')

    group.add_argument(
        '--stats',
        default=False,
        action='store_true',
        env_var='STATS',
        help='Send timers and counters to statsd.',
    )
    group.add_argument(
        '--stats-host',
        default=DEFAULT_STATSD_HOST,
        env_var='STATS_HOST',
        help='statsd host.',
    )
    group.add_argument(
        '--stats-port',
        type=int,
        default=DEFAULT_STATSD_PORT,
        env_var='STATS_PORT',
        help='statsd UDP port.',
    )

    return parser


def add_scenario_args(parser):
    """
    ``--config`` plus one option per ScenarioConfig field. Values stay strings:
    the file and the flags are converted and validated by the same code.
    """
    group = get_group(parser=parser, group_name='scenario', env_var_prefix='scenario')

    group.add_argument(
        '--config',
        default=None,
        env_var=None,
        help='Scenario file with one "key = value" per line.',
    )
    for field_name, help_text in SCENARIO_FIELDS.items():
        group.add_argument(
            '--' + field_name.replace('_', '-'),
            dest=field_name,
            default=None,
            env_var=None,
            add_default_help=False,
            help=help_text,
        )

    return parser


def get_group(parser, group_name, env_var_prefix=None):
    """
    The group titled GROUP_NAME, created on first use. ENV_VAR_PREFIX only
    matters on creation; None means the title.
    """
    # argparse keeps its groups private and has no lookup by title.
    for group in parser._action_groups:  # pylint: disable=protected-access
        if group.title == group_name:
            return group
    return parser.add_argument_group(title=group_name, env_var_prefix=env_var_prefix)


class CrowdParser(ArgumentParser):
    def add_argument_group(self, *args, **kwargs):
        """
        Same signature as :py:meth:`argparse.ArgumentParser.add_argument_group`
        plus the keyword ``env_var_prefix``; returns a :py:class:`CrowdGroup`.
        """
        title = args[0] if args else kwargs.pop('title', None)
        description = args[1] if len(args) > 1 else kwargs.pop('description', None)
        env_var_prefix = kwargs.pop('env_var_prefix', None)

        group = CrowdGroup(container=self, title=title, description=description, env_var_prefix=env_var_prefix,
                           **kwargs)
        self._action_groups.append(group)
        return group


class CrowdGroup(_ArgumentGroup):
    """
    An argument group whose options may take their default from an
    environment variable, and whose help texts name that variable and the
    default.
    """
    HELP_ENV_VAR = "(env: {key})"
    HELP_DEFAULT = "(default: {default})"

    def __init__(self, env_var_prefix=None, **kwargs):
        super(CrowdGroup, self).__init__(**kwargs)
        self._env_prefix = '%s_' % (env_var_prefix or self.title)

    def env_key(self, option):
        """``--num-users`` in group ``scenario`` becomes ``SCENARIO_NUM_USERS``."""
        name = option.lstrip(self.prefix_chars)
        if not name:
            raise ValueError('%r is not an option name' % (option,))
        return (self._env_prefix + name).replace('-', '_').upper()

    def _long_option(self, names) -> Optional[str]:
        return next((n for n in names if n[:2] == self.prefix_chars[0] * 2), None)

    def add_argument(self, *args, **kwargs):
        """
        :py:meth:`argparse._ArgumentGroup.add_argument` with three extra keywords:

        :keyword env_var: False (the default) reads nothing from the
                          environment, None derives the variable from the long
                          option, and a string names it
        :keyword add_env_var_help: append the variable to the help (default True)
        :keyword add_default_help: append the default to the help (default True)
        """
        env_var = kwargs.pop('env_var', False)
        add_env_var_help = kwargs.pop('add_env_var_help', True)
        add_default_help = kwargs.pop('add_default_help', True)

        help_text = kwargs.get('help', '')
        notes = []  # type: List[str]
        optional = bool(args) and args[0][0] in self.prefix_chars
        default = kwargs.get('default')

        if optional and env_var is not False:
            if env_var is None:
                long_option = self._long_option(args)
                if long_option is None:
                    raise ValueError('%s needs a long name to derive its environment variable' % (args,))
                env_var = self.env_key(long_option)
            kwargs['default'] = environ.get(env_var, default)
            if add_env_var_help:
                notes.append(self.HELP_ENV_VAR.format(key=env_var))

        if optional and add_default_help and '(default: ' not in help_text:
            notes.append(self.HELP_DEFAULT.format(default=default))

        kwargs['help'] = ' '.join([help_text] + notes)
        return super(CrowdGroup, self).add_argument(*args, **kwargs)
