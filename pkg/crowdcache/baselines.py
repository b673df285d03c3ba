"""
Comparison policies.

A policy is four independent choices: how subchannels are assigned, how
the task is split over the matched users, when a cached result is reused and
how the cache replaces results. The proposed policy and the five baselines
are fixed combinations of these, run by the same simulator loop
(:py:class:`crowdcache.policy.Simulator`).

Baseline splits are clipped to each user's energy cap; the clipped bits are
reported as shortfall instead of being redistributed.
"""
from __future__ import generator_stop

from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from crowdcache import CrowdcacheError
from crowdcache.allocation import AllocationResult, build_allocation, energy_caps
from crowdcache.assignment import AlphaMatrix, AssignmentResult
from crowdcache.channel import ChannelRealization
from crowdcache.freshness_cache import CacheState, CommitResult

SUBCHANNEL_STRATEGIES = ('hungarian', 'greedy_best_gain', 'random')
TASK_SPLITS = ('lemma1', 'uniform', 'gain_fractional')
SENSING_RULES = ('definition4', 'random_bernoulli', 'always_sense')
CACHE_RULES = ('bayesian', 'replace_oldest', 'none')


class PolicyError(CrowdcacheError, ValueError):
    pass


@dataclass(frozen=True)
class PolicySpec:
    name: str
    subchannel_strategy: str
    task_split: str
    sensing_rule: str
    cache_rule: str

    def __post_init__(self):
        for value, choices, label in ((self.subchannel_strategy, SUBCHANNEL_STRATEGIES, 'subchannel strategy'),
                                      (self.task_split, TASK_SPLITS, 'task split'),
                                      (self.sensing_rule, SENSING_RULES, 'sensing rule'),
                                      (self.cache_rule, CACHE_RULES, 'cache rule')):
            if value not in choices:
                raise PolicyError('unknown %s %r, expected one of %s' % (label, value, ', '.join(choices)))


POLICIES = OrderedDict((spec.name, spec) for spec in (
    PolicySpec('proposed', 'hungarian', 'lemma1', 'definition4', 'bayesian'),
    PolicySpec('b1', 'greedy_best_gain', 'uniform', 'random_bernoulli', 'replace_oldest'),
    PolicySpec('b2', 'random', 'gain_fractional', 'random_bernoulli', 'replace_oldest'),
    PolicySpec('b3', 'greedy_best_gain', 'gain_fractional', 'random_bernoulli', 'replace_oldest'),
    PolicySpec('b4', 'greedy_best_gain', 'gain_fractional', 'definition4', 'bayesian'),
    PolicySpec('b5', 'hungarian', 'lemma1', 'always_sense', 'none'),
))


def get_policy(name: str) -> PolicySpec:
    try:
        return POLICIES[name.lower()]
    except KeyError:
        raise PolicyError('unknown policy %r, expected one of %s' % (name, ', '.join(POLICIES)))


def greedy_best_gain_assign(channels: ChannelRealization, alpha: AlphaMatrix) -> AssignmentResult:
    """
    Subchannels in index order, each to the still unassigned user with the
    highest gain on it (lower user id on ties).
    """
    gains = channels.gains
    free = np.ones(channels.num_users, dtype=bool)
    pairs = []
    for n in range(channels.num_subchannels):
        if not free.any():
            break
        # argmax returns the first maximum, i.e. the lowest user id
        k = int(np.argmax(np.where(free, gains[:, n], -np.inf)))
        free[k] = False
        pairs.append((k, n))
    return AssignmentResult.from_pairs(alpha, pairs)


def random_assign(alpha: AlphaMatrix, rng: np.random.Generator) -> AssignmentResult:
    """A uniformly random injective pairing of min(K, N) users and subchannels."""
    num_users, num_subchannels = alpha.shape
    size = min(num_users, num_subchannels)
    users = rng.permutation(num_users)[:size]
    subchannels = rng.permutation(num_subchannels)[:size]
    return AssignmentResult.from_pairs(alpha, zip(users, subchannels))


def uniform_split(size: float, matching_size: int) -> List[float]:
    """V / N_m bits for each of the N_m matched users."""
    if matching_size < 1:
        raise ValueError('uniform split needs at least one matched user')
    return [size / matching_size] * matching_size


def gain_fractional_split(size: float, weights: Sequence[float]) -> List[float]:
    """Bits proportional to each matched user's weight, its channel gain by default."""
    weight_array = np.asarray(weights, dtype=float)
    total = weight_array.sum()
    if not total > 0:
        raise ValueError('gain fractional split needs a positive total weight')
    return list(size * weight_array / total)


def clip_to_caps(assignment: AssignmentResult, users: Sequence, sizes: Dict[int, float],
                 demand: float) -> AllocationResult:
    """Clip every share to its energy cap; what is clipped away becomes shortfall."""
    caps = energy_caps(assignment, users)
    return build_allocation(assignment, users, {k: min(z, caps[k]) for k, z in sizes.items()}, demand)


def split_task(policy: PolicySpec, assignment: AssignmentResult, users: Sequence, size: float,
               weight: str = 'channel_gain') -> AllocationResult:
    """
    Allocation for the baseline splits (uniform, gain_fractional).

    :keyword weight: what gain_fractional is proportional to: the linear
                     channel gain of each matched pair, or its processing
                     rate 1/alpha, which also counts the sensing rate
    """
    users_in_order = [k for k, _ in assignment.matching]
    if policy.task_split == 'uniform':
        shares = uniform_split(size, len(users_in_order))
    elif policy.task_split == 'gain_fractional':
        if weight == 'channel_gain':
            weights = [assignment.per_user_gain[k] for k in users_in_order]
        elif weight == 'processing_rate':
            weights = [1.0 / assignment.per_user_alpha[k] for k in users_in_order]
        else:
            raise PolicyError('unknown fractional weight %r' % (weight,))
        shares = gain_fractional_split(size, weights)
    else:
        raise PolicyError('split_task() does not handle %r' % policy.task_split)
    return clip_to_caps(assignment, users, dict(zip(users_in_order, shares)), size)


def replace_oldest(cache_state: CacheState, task) -> CommitResult:
    """Commit TASK, evicting the results with the largest AoI first."""
    return cache_state.replace_oldest(task)


def random_sensing(cached: bool, probability: float, rng: np.random.Generator) -> int:
    """Re-sense with PROBABILITY; a task that is not cached is always re-sensed."""
    draw = rng.random()
    if not cached:
        return 1
    return int(draw < probability)
