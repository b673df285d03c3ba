"""
Counters and timers for the simulator.

Stats go to statsd only when asked for (``--stats``); by default every call
lands on :py:class:`DummyStatsClient`, which accepts the statsd API and does
nothing, so simulator code never checks whether stats are enabled.

Names in use: ``slot.sense``, ``slot.reuse``, ``slot.infeasible``,
``slot.latency_subproblem`` (timer), ``cache.evict``, ``cache.not_cacheable``,
``horizon.run``, ``sweep.run`` and ``sweep.cell`` (timers), and ``error.*`` for
failed IO and locks.
"""
from __future__ import generator_stop

from contextlib import contextmanager

import statsd

from crowdcache.constants import DEFAULT_STATSD_HOST, DEFAULT_STATSD_PORT


def get_stats(prefix, client=None, host=None, port=None):
    """
    A stats client whose names start with PREFIX.

    :argument prefix: prepended to every stat name
    :keyword client: True for :py:class:`statsd.StatsClient`, False or None for
                     :py:class:`DummyStatsClient`, or a client class with the
                     same constructor
    :keyword host: statsd host, ``DEFAULT_STATSD_HOST`` when empty
    :keyword port: statsd port (int or numeric string), ``DEFAULT_STATSD_PORT`` when empty
    """
    if isinstance(client, str):
        # STATS=1 from the environment
        client = client.strip().lower() in ('1', 'true', 'yes', 'on')
    if client is True:
        client = statsd.StatsClient
    elif client in (False, None):
        client = DummyStatsClient

    stats = client(prefix=prefix, host=host or DEFAULT_STATSD_HOST, port=int(port or DEFAULT_STATSD_PORT))
    if not (hasattr(stats, 'incr') and hasattr(stats, 'timer')):
        raise TypeError('%r does not look like a statsd client' % (client,))
    return stats


class DummyStatsClient(object):
    """A ``statsd.StatsClient`` stand-in that drops every call."""

    def __init__(self, prefix=None, host=None, port=None):
        self.prefix = prefix
        self.host = host
        self.port = port

    def __getattr__(self, attr):
        """
        Proxies ``statsd.StatsClient`` methods, so anything the real client
        offers is accepted and anything it lacks raises AttributeError.
        """
        attr = getattr(statsd.StatsClient, attr)
        if callable(attr):
            return _noop
        return attr


@contextmanager
def _noop(*args, **kwargs):  # pylint: disable=unused-argument
    # Also usable as ``with stats.timer(...)``.
    yield
