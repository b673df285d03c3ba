"""
The base-station cache of sensing results.

Every cached result carries its age of information. At the start of a slot
the ages grow by the previous slot's duration and results at or above the
AoI ceiling are dropped. After a re-sensing slot the fresh result is
committed:

1. the task is already cached: the new result supersedes the old one;
2. it fits next to what is cached: insert it with age 0;
3. otherwise insert it and evict by ascending posterior score until the
   capacity holds again. The fresh result is scored with the rest.

The posterior of task i is prior_i * L_i normalized over the cache, with
prior_i = 1 / (aoi_i + 1) and L_i = ln(1 + F_i / V_i).
"""
from __future__ import generator_stop

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

from crowdcache.object import Object

SCENARIO_INSERT = 'insert'
SCENARIO_SUPERSEDE = 'supersede'
SCENARIO_EVICT = 'evict'
SCENARIO_NOT_CACHEABLE = 'not_cacheable'
SCENARIO_SKIPPED = 'skipped'


@dataclass
class CacheEntry:
    task_id: int
    size: float
    aoi: float = 0.0


@dataclass(frozen=True)
class PosteriorScore:
    prior: float
    likelihood: float
    posterior: float


@dataclass(frozen=True)
class CommitResult:
    """Outcome of committing a sensing result."""
    task_id: int
    cached: bool
    scenario: str
    evicted: Tuple[int, ...] = ()

    @property
    def cacheable(self) -> bool:
        return self.scenario != SCENARIO_NOT_CACHEABLE


def aoi_prior(aoi: float) -> float:
    return 1.0 / (aoi + 1.0)


def popularity_likelihood(frequency: float, size: float) -> float:
    return math.log1p(frequency / size)


def posterior_scores_for(entries: Mapping[int, CacheEntry], frequencies: Mapping[int, float]) -> Dict[int, PosteriorScore]:
    """
    Posterior score of every entry. When every likelihood is zero the
    posterior falls back to uniform.
    """
    if not entries:
        raise ValueError('posterior scores need a non-empty cache')
    priors = {i: aoi_prior(e.aoi) for i, e in entries.items()}
    likelihoods = {i: popularity_likelihood(frequencies.get(i, 0), e.size) for i, e in entries.items()}
    mass = math.fsum(priors[i] * likelihoods[i] for i in entries)
    if mass > 0:
        return {i: PosteriorScore(priors[i], likelihoods[i], priors[i] * likelihoods[i] / mass) for i in entries}
    uniform = 1.0 / len(entries)
    return {i: PosteriorScore(priors[i], likelihoods[i], uniform) for i in entries}


def eviction_order(entries: Mapping[int, CacheEntry], scores: Mapping[int, PosteriorScore]) -> List[int]:
    """Ascending posterior; ties evict the larger result first, then the lower id."""
    return sorted(entries, key=lambda i: (scores[i].posterior, -entries[i].size, i))


class CacheState(Object):
    """
    Cached task results keyed by task id. Single writer: one simulator owns a
    cache and mutates it slot by slot.
    """

    def __init__(self, capacity: float, aoi_max: float, entries: Optional[Mapping[int, CacheEntry]] = None,
                 name=None, logger=None, stats=None):
        super(CacheState, self).__init__(name=name, logger=logger, stats=stats)
        if capacity <= 0:
            raise ValueError('cache capacity must be positive, got %r' % (capacity,))
        self.capacity = float(capacity)
        self.aoi_max = float(aoi_max)
        self.entries = dict(entries or {})  # type: Dict[int, CacheEntry]

    def __contains__(self, task_id):
        return task_id in self.entries

    def __len__(self):
        return len(self.entries)

    @property
    def used(self) -> float:
        return math.fsum(e.size for e in self.entries.values())

    def fits(self, extra: float = 0.0) -> bool:
        return self._fits_without((), extra)

    def lookup(self, task_id: int) -> Tuple[bool, float]:
        """(cached, aoi); the age of an absent task is 0."""
        entry = self.entries.get(task_id)
        return (True, entry.aoi) if entry is not None else (False, 0.0)

    def advance_aoi(self, increment: float) -> List[int]:
        """
        Age every cached result by INCREMENT and drop those at or above the
        AoI ceiling. Returns the dropped task ids.
        """
        if increment < 0:
            raise ValueError('AoI increment must be non-negative, got %r' % (increment,))
        expired = []
        for task_id in sorted(self.entries):
            entry = self.entries[task_id]
            entry.aoi += increment
            if entry.aoi >= self.aoi_max:
                expired.append(task_id)
        for task_id in expired:
            del self.entries[task_id]
            self._logger.debug('Task %d reached the AoI ceiling and left the cache', task_id)
        return expired

    def posterior_scores(self, frequencies: Mapping[int, float]) -> Dict[int, PosteriorScore]:
        return posterior_scores_for(self.entries, frequencies)

    def _not_cacheable(self, task) -> CommitResult:
        self._logger.warning('Task %d (%.0f bits) exceeds the cache capacity %.0f bits', task.task_id, task.size,
                             self.capacity)
        self._stats.incr('cache.not_cacheable')
        return CommitResult(task.task_id, False, SCENARIO_NOT_CACHEABLE)

    def _fits_without(self, task_ids, extra=0.0) -> bool:
        kept = [e.size for i, e in self.entries.items() if i not in task_ids]
        return math.fsum(kept + [extra]) <= self.capacity

    def _drop(self, task_ids, reason) -> Tuple[int, ...]:
        for task_id in task_ids:
            del self.entries[task_id]
            self._stats.incr('cache.evict')
        if task_ids:
            self._logger.debug('Evicted tasks %s by %s', list(task_ids), reason)
        return tuple(task_ids)

    def _insert_or_supersede(self, task) -> Optional[CommitResult]:
        """Supersede or plain insert, shared by every replacement rule; None when an eviction is needed."""
        if task.size > self.capacity:
            return self._not_cacheable(task)
        if task.task_id in self.entries:
            self.entries[task.task_id] = CacheEntry(task.task_id, task.size, 0.0)
            return CommitResult(task.task_id, True, SCENARIO_SUPERSEDE)
        if self.fits(task.size):
            self.entries[task.task_id] = CacheEntry(task.task_id, task.size, 0.0)
            return CommitResult(task.task_id, True, SCENARIO_INSERT)
        return None

    def commit_sensing_result(self, task, frequencies: Mapping[int, float]) -> CommitResult:
        """Store a fresh result, evicting by posterior score when the cache overflows."""
        result = self._insert_or_supersede(task)
        if result is not None:
            return result

        self.entries[task.task_id] = CacheEntry(task.task_id, task.size, 0.0)
        scores = self.posterior_scores(frequencies)
        evicted: List[int] = []
        for task_id in eviction_order(self.entries, scores):
            if self._fits_without(evicted):
                break
            evicted.append(task_id)
        dropped = self._drop(evicted, 'posterior score')
        return CommitResult(task.task_id, task.task_id in self.entries, SCENARIO_EVICT, dropped)

    def replace_oldest(self, task) -> CommitResult:
        """Store a fresh result, evicting the oldest results first when the cache overflows."""
        result = self._insert_or_supersede(task)
        if result is not None:
            return result

        evicted: List[int] = []
        for entry in sorted(self.entries.values(), key=lambda e: (-e.aoi, -e.size, e.task_id)):
            if self._fits_without(evicted, task.size):
                break
            evicted.append(entry.task_id)
        dropped = self._drop(evicted, 'age')
        self.entries[task.task_id] = CacheEntry(task.task_id, task.size, 0.0)
        return CommitResult(task.task_id, True, SCENARIO_EVICT, dropped)

    def snapshot(self) -> str:
        """One ``task_id<TAB>aoi<TAB>size`` line per entry, by task id."""
        return ''.join('%d\t%r\t%r\n' % (i, self.entries[i].aoi, self.entries[i].size) for i in sorted(self.entries))

    @classmethod
    def from_snapshot(cls, text: str, capacity: float, aoi_max: float, **kwargs) -> 'CacheState':
        entries = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            task_id, aoi, size = line.split('\t')
            entries[int(task_id)] = CacheEntry(int(task_id), float(size), float(aoi))
        return cls(capacity, aoi_max, entries, **kwargs)
