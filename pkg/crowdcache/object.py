"""
Base class for the stateful simulator components.
"""
from __future__ import generator_stop

from abc import ABCMeta

from crowdcache.logging import get_logger
from crowdcache.stats import get_stats


class Object(object, metaclass=ABCMeta):
    """
    A component with a name, a logger and a stats client: the freshness
    cache and the slot simulator. Components built by a
    :py:class:`crowdcache.cli.Application` share its logger and stats client;
    standalone ones get their own, named ``crowdcache.<name>``.
    """

    def __init__(self, name=None, logger=None, stats=None):
        super(Object, self).__init__()

        self._name = name if name is not None else self.__class__.__name__
        self._logger = logger if logger is not None else get_logger('crowdcache.%s' % self._name)
        self._stats = stats if stats is not None else get_stats(prefix=self._name.lower())

    @property
    def name(self):
        return self._name

    @property
    def logger(self):
        return self._logger

    @property
    def stats(self):
        return self._stats

    def __repr__(self):
        return '<%s %s>' % (self.__class__.__name__, self._name)
