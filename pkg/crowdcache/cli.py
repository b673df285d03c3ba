"""
Command-line application base for crowdcache.

An :py:class:`Application` reads its options once, in the constructor, and
derives everything else from them: the logger, the stats client, file IO and
the scenario configuration. Subclasses register their options in
``add_cli_arguments`` and do their work inside ``context()``.

Usage::

        from crowdcache.cli import Application

        app = Application(name='crowdcache')
        with app.context():
            config = app.scenario_config()
"""
from __future__ import generator_stop

import logging
import logging.handlers
import sys
from contextlib import contextmanager
from functools import partial
from typing import Dict, Tuple

from lockfile import FileLock, LockError, UnlockError

import crowdcache.io
import crowdcache.logging
import crowdcache.stats
from crowdcache import VERSION, CrowdcacheError
from crowdcache.baselines import PolicyError
from crowdcache.constants import DEFAULT_LOCK_TIMEOUT_SECONDS, VALIDATION_EXIT_CODE
from crowdcache.io import OutputError
from crowdcache.parser import get_group, get_parser
from crowdcache.scenario import SCENARIO_FIELDS, ConfigError, ScenarioConfig

#: Errors caused by what the user asked for; reported without a traceback.
VALIDATION_ERRORS = (ConfigError, PolicyError, OutputError)


class ApplicationError(CrowdcacheError):
    pass


class Application(object):
    #: Configuration file keys that are not ScenarioConfig fields. They are
    #: moved to ``file_extras`` instead of failing validation.
    FILE_ONLY_KEYS = ()  # type: Tuple[str, ...]

    def __init__(self, name, parser=None, logger=None, log_to_stdout=True, parser_args=None):
        """
        :keyword name: application name; also the logger name and stats prefix
        :keyword parser: parser to use instead of :py:func:`crowdcache.parser.get_parser`
        :keyword logger: logger to use instead of one built from ``--log-level``
        :keyword log_to_stdout: default for logging to stdout, overridden by the flag
        :keyword parser_args: argument list to parse instead of ``sys.argv``
        """
        self.name = name
        self.parser = parser or get_parser(description=name, logging_stdout_default=log_to_stdout)
        self.add_cli_arguments(self.parser)
        self.args = self.parser.parse_args(args=parser_args)

        self.logger = logger or crowdcache.logging.get_logger(
            name,
            level=self.args.log_level,
            log_to_stdout=self.args.log_to_stdout,
        )
        if self.args.log_file is not None:
            self._add_log_file(self.args.log_file)

        self.stats = crowdcache.stats.get_stats(
            client=getattr(self.args, 'stats', None),
            prefix='cli.%s' % name,
            host=getattr(self.args, 'stats_host', None),
            port=getattr(self.args, 'stats_port', None),
        )
        self.io = crowdcache.io.IO(logger=self.logger, stats=self.stats)

        self.file_extras = {}  # type: Dict[str, str]
        self.lockfile = None
        self._exit_hooks = []

        # numpy and scipy warn through the warnings module
        logging.captureWarnings(True)

    def _add_log_file(self, path):
        handler = logging.handlers.WatchedFileHandler(path)
        handler.setFormatter(logging.Formatter(crowdcache.logging.FORMAT))
        self.logger.addHandler(handler)

    def add_cli_arguments(self, parser):
        """Register extra options. Subclasses call this first, then add their own."""
        group = get_group(parser, 'version')
        group.add_argument(
            '--version',
            action='version',
            version='%s %s' % (self.name, VERSION),
        )

    def scenario_config(self) -> ScenarioConfig:
        """
        Defaults, overridden by the ``--config`` file, overridden by the
        ``SCENARIO_*`` variables and flags (the parser already merged those
        two), and finally by ``--seed`` when the application defines it.
        """
        file_values = self.io.read_config(self.args.config) if self.args.config else {}
        self.file_extras = {k: file_values.pop(k) for k in self.FILE_ONLY_KEYS if k in file_values}

        config = ScenarioConfig.from_mapping(file_values)
        config = ScenarioConfig.from_mapping({f: getattr(self.args, f) for f in SCENARIO_FIELDS}, base=config)
        seed = getattr(self.args, 'seed', None)
        return config if seed is None else config.replace(rng_seed=seed)

    def lock_output(self, path):
        """
        Hold ``PATH.lock`` until the exit hooks run, so two runs never write
        PATH at the same time. Raises OutputError when the lock is taken.
        """
        if self.lockfile is not None and self.lockfile.i_am_locking():
            raise ApplicationError('already holding %s' % self.lockfile.lock_file)
        lock = FileLock(path)
        try:
            lock.acquire(timeout=DEFAULT_LOCK_TIMEOUT_SECONDS)
        except LockError as err:
            self.stats.incr('error.lockfile_lock')
            raise OutputError('%s is locked by another run: %s' % (path, err))
        self.lockfile = lock
        self.logger.debug('Locked %s', self.lockfile.lock_file)
        self.add_exit_hook(self._release_lock)

    def _release_lock(self):
        try:
            self.lockfile.release()
        except UnlockError as err:
            self.logger.warning('Could not release %s: %s', self.lockfile.lock_file, err)
            self.stats.incr('error.lockfile_unlock')
            raise
        self.logger.debug('Released %s', self.lockfile.lock_file)

    def add_exit_hook(self, hook, *args, **kwargs):
        """Call HOOK(*ARGS, **KWARGS) when the application exits."""
        self._exit_hooks.append(partial(hook, *args, **kwargs))

    def _run_exit_hooks(self):
        # Most recent first, like nested with-blocks.
        hooks, self._exit_hooks = self._exit_hooks, []
        for hook in reversed(hooks):
            try:
                hook()
            except Exception:  # pylint: disable=broad-except
                self.logger.exception('Exit hook %s failed', hook)

    def exit(self, code=0):
        """Run the exit hooks, then sys.exit(CODE)."""
        self.logger.debug('Exiting with code %d', code)
        self._run_exit_hooks()
        sys.exit(code)

    @contextmanager
    def context(self):
        """
        Run the block, then exit with 0. A validation error (bad configuration,
        unknown policy, unwritable output) is logged and exits with
        VALIDATION_EXIT_CODE. Anything else is logged as critical and re-raised
        after the exit hooks ran.
        """
        try:
            yield
        except VALIDATION_ERRORS as err:
            self.logger.error('%s', err)
            self.exit(VALIDATION_EXIT_CODE)
            return
        except Exception as err:
            self.logger.critical('Uncaught exception: %r', err)
            self._run_exit_hooks()
            raise

        self.exit()
