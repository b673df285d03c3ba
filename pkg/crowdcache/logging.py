"""
Logging for the simulator and the ``crowdcache`` command.

Loggers come from :py:func:`get_logger`, which also configures the root
handler the first time it is asked to log to stdout. Call it before
importing anything that might configure logging on its own.

Usage::

        from crowdcache.logging import get_logger

        logger = get_logger(__name__, level='info')

Which level to use:

``debug``
    Per-slot decisions, cache evictions and constraint audits. A horizon of
    10^3 slots produces thousands of these lines; only use it when tracing a
    single run.

``info``
    Run and sweep start/finish, the configuration in effect, summaries.

``warning``
    The run continued but something deserves a look: an energy-infeasible
    slot, a task that can never fit in the cache.

``error`` / ``critical``
    The command could not complete (invalid configuration, unwritable output).
"""
from __future__ import generator_stop

import logging
from collections import OrderedDict

DEFAULT_LOG_LEVEL = 'warning'

#: ``--log-level`` names, most severe first.
LEVELS = OrderedDict((name, getattr(logging, name.upper()))
                     for name in ('critical', 'error', 'warning', 'info', 'debug'))

FORMAT = '%(asctime)s: %(name)s/%(levelname)-9s: %(message)s'


def setup(level=DEFAULT_LOG_LEVEL):
    """Install the stdout/stderr root handler at LEVEL, unless one is installed already."""
    if level not in LEVELS:
        raise ValueError('unknown log level %r, expected one of %s' % (level, ', '.join(LEVELS)))
    logging.basicConfig(format=FORMAT, level=LEVELS[level])


def get_logger(name, log_to_stdout=True, level=None):
    """
    The logger called NAME, at LEVEL when given. With LOG_TO_STDOUT false the
    logger stops propagating to the root, so only handlers added to it
    (``--log-file``) see its records.
    """
    logger = logging.getLogger(name)
    if log_to_stdout:
        setup(level or DEFAULT_LOG_LEVEL)
    else:
        logger.propagate = False
    if level is not None:
        logger.setLevel(LEVELS[level])
    return logger


class SlotLoggerAdapter(logging.LoggerAdapter):
    """
    Prefixes every message with the policy name and the slot index, so a
    debug trace of interleaved horizons can still be read.

    The slot index is updated in place by the simulator loop.
    """

    def __init__(self, logger, policy, slot=0):
        super(SlotLoggerAdapter, self).__init__(logger, {'policy': policy, 'slot': slot})

    @property
    def slot(self):
        return self.extra['slot']

    @slot.setter
    def slot(self, value):
        self.extra['slot'] = value

    def process(self, msg, kwargs):
        return '[%s t=%d] %s' % (self.extra['policy'], self.extra['slot'], msg), kwargs
