"""
Unit tests for the crowdcache.stats module.
"""
from __future__ import generator_stop

import pytest
import statsd
from mock import MagicMock

import crowdcache.stats
from crowdcache.constants import DEFAULT_STATSD_HOST, DEFAULT_STATSD_PORT


def test_dummy_by_default():
    stats = crowdcache.stats.get_stats(prefix='sweep')

    assert isinstance(stats, crowdcache.stats.DummyStatsClient)
    assert (stats.prefix, stats.host, stats.port) == ('sweep', DEFAULT_STATSD_HOST, DEFAULT_STATSD_PORT)


def test_statsd_client():
    """
    client=True returns a plain statsd.StatsClient; a port from the environment may be a string
    """
    stats = crowdcache.stats.get_stats(prefix='cli.crowdcache', client=True, host='localhost', port='8125')

    assert isinstance(stats, statsd.StatsClient)


def test_client_from_environment_string():
    assert isinstance(crowdcache.stats.get_stats(prefix='cli', client='1'), statsd.StatsClient)
    assert isinstance(crowdcache.stats.get_stats(prefix='cli', client='false'), crowdcache.stats.DummyStatsClient)


def test_custom_client_class():
    client_class = MagicMock()

    stats = crowdcache.stats.get_stats(prefix='cache', client=client_class)

    assert stats is client_class.return_value
    client_class.assert_called_once_with(prefix='cache', host=DEFAULT_STATSD_HOST, port=DEFAULT_STATSD_PORT)


def test_rejects_non_client():
    with pytest.raises(TypeError):
        crowdcache.stats.get_stats(prefix='cache', client=dict)


def test_dummy_client_accepts_statsd_calls():
    """
    Every statsd method is accepted and the timer works as a context manager
    """
    stats = crowdcache.stats.get_stats(prefix='simulator', client=False)

    stats.incr('slot.sense')
    stats.gauge('cache.used', 3)
    with stats.timer('horizon.run'):
        pass

    with pytest.raises(AttributeError):
        stats.not_a_statsd_method


def test_dummy_client_follows_statsd_api():
    """
    The dummy accepts exactly the public methods statsd.StatsClient has
    """
    stats = crowdcache.stats.DummyStatsClient(prefix='sweep')
    methods = [name for name in dir(statsd.StatsClient)
               if not name.startswith('_') and callable(getattr(statsd.StatsClient, name))]

    assert 'incr' in methods and 'timer' in methods
    for name in methods:
        with getattr(stats, name)('cell', 1):
            pass
