"""
Reproducible experiment scenarios for a cache-enabled crowdsensing cell.

A scenario is the user population, the task catalog and the sequence of
published tasks, all drawn from one configuration and one seed. Channel
realizations are drawn slot by slot from their own stream (see
:py:func:`slot_states`) so that every policy evaluated on a scenario sees the
same channels, the same publications and the same user draws.

Usage::

        from crowdcache.scenario import ScenarioConfig, generate_scenario

        config = ScenarioConfig(num_users=30, num_subchannels=20, rng_seed=7)
        scenario = generate_scenario(config)
"""
from __future__ import generator_stop

import dataclasses
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple

import numpy as np

from crowdcache import CrowdcacheError
from crowdcache import constants
from crowdcache.channel import ChannelRealization, draw_channels

Range = Tuple[float, float]

POPULARITY_UNIFORM = 'uniform'
POPULARITY_ZIPF = 'zipf'
SLOT_DURATION_MODES = ('latency', 'fixed')
FRACTIONAL_WEIGHTS = ('channel_gain', 'processing_rate')

# Independent streams spawned from the scenario seed.
_SCENARIO_STREAM, _CHANNEL_STREAM, _USER_REDRAW_STREAM, _POLICY_STREAM = range(4)


class ConfigError(CrowdcacheError, ValueError):
    """An invalid scenario configuration. ``field`` names the offending field."""

    def __init__(self, field_name, message):
        super(ConfigError, self).__init__('%s: %s' % (field_name, message))
        self.field = field_name


#: Help text for every configurable field, in declaration order. The CLI builds
#: one option per entry and the configuration file accepts the same keys.
SCENARIO_FIELDS = OrderedDict([
    ('num_users', 'Number of users K.'),
    ('num_subchannels', 'Number of OFDMA subchannels N.'),
    ('num_task_types', 'Number of task types M.'),
    ('num_slots', 'Number of time slots T.'),
    ('bandwidth', 'Subchannel bandwidth W in Hz.'),
    ('noise_density', 'Noise power density N0 in dBm/Hz.'),
    ('cache_capacity', 'Cache capacity Q in bits.'),
    ('aoi_max', 'AoI ceiling above which cached results are discarded.'),
    ('weight_latency', 'Weight of the system latency term.'),
    ('weight_aoi', 'Weight of the AoI term.'),
    ('resense_frequency', 'Re-sensing frequency in [0,1].'),
    ('distance_range', 'User distance range in meters, as min,max.'),
    ('power_range', 'Transmit power range in W, as min,max.'),
    ('sensing_rate_range', 'Sensing data rate range in bit/s, as min,max.'),
    ('sensing_energy_range', 'Sensing energy per bit range in J/bit, as min,max.'),
    ('energy_budget_range', 'Per-slot energy budget range in J, as min,max.'),
    ('task_size_range', 'Task size range in bits, as min,max.'),
    ('task_popularity', 'Task publication distribution: uniform or zipf:<exponent>.'),
    ('cache_hit_slot_duration', 'Slot duration in seconds when the cached result is reused.'),
    ('rng_seed', 'Seed of every random stream of the scenario.'),
    ('redraw_users_per_slot', 'Redraw power, sensing rate, sensing energy and budget every slot.'),
    ('strict_lemma1', 'Use the pointwise-min allocation instead of cap-and-redistribute.'),
    ('slot_duration_mode', 'latency (slot lasts the sensing latency) or fixed.'),
    ('fixed_slot_duration', 'Slot duration in seconds in fixed mode.'),
    ('fractional_weight', 'What the fractional baseline split weighs: channel_gain or processing_rate.'),
])

_RANGE_FIELDS = ('distance_range', 'power_range', 'sensing_rate_range', 'sensing_energy_range',
                 'energy_budget_range', 'task_size_range')
_COUNT_FIELDS = ('num_users', 'num_subchannels', 'num_task_types', 'num_slots')
_POSITIVE_FIELDS = ('bandwidth', 'cache_capacity', 'aoi_max', 'weight_latency', 'weight_aoi',
                    'cache_hit_slot_duration', 'fixed_slot_duration')
_BOOL_WORDS = {'1': True, 'true': True, 'yes': True, 'on': True,
               '0': False, 'false': False, 'no': False, 'off': False}


@dataclass(frozen=True)
class ScenarioConfig:
    """All parameters of one experiment. Validated on construction."""

    num_users: int = constants.DEFAULT_NUM_USERS
    num_subchannels: int = constants.DEFAULT_NUM_SUBCHANNELS
    num_task_types: int = constants.DEFAULT_NUM_TASK_TYPES
    num_slots: int = constants.DEFAULT_NUM_SLOTS
    bandwidth: float = constants.DEFAULT_BANDWIDTH_HZ
    noise_density: float = constants.DEFAULT_NOISE_DENSITY_DBM_HZ
    cache_capacity: float = constants.DEFAULT_CACHE_CAPACITY_BITS
    aoi_max: float = constants.DEFAULT_AOI_MAX
    weight_latency: float = constants.DEFAULT_WEIGHT_LATENCY
    weight_aoi: float = constants.DEFAULT_WEIGHT_AOI
    resense_frequency: float = constants.DEFAULT_RESENSE_FREQUENCY
    distance_range: Range = constants.DEFAULT_DISTANCE_RANGE_M
    power_range: Range = constants.DEFAULT_POWER_RANGE_W
    sensing_rate_range: Range = constants.DEFAULT_SENSING_RATE_RANGE
    sensing_energy_range: Range = constants.DEFAULT_SENSING_ENERGY_RANGE
    energy_budget_range: Range = constants.DEFAULT_ENERGY_BUDGET_RANGE
    task_size_range: Range = constants.DEFAULT_TASK_SIZE_RANGE
    task_popularity: str = constants.DEFAULT_TASK_POPULARITY
    cache_hit_slot_duration: float = constants.DEFAULT_CACHE_HIT_SLOT_DURATION
    rng_seed: int = constants.DEFAULT_RNG_SEED
    redraw_users_per_slot: bool = False
    strict_lemma1: bool = False
    slot_duration_mode: str = constants.DEFAULT_SLOT_DURATION_MODE
    fixed_slot_duration: float = constants.DEFAULT_FIXED_SLOT_DURATION
    fractional_weight: str = constants.DEFAULT_FRACTIONAL_WEIGHT

    def __post_init__(self):
        self.validate()

    def validate(self):
        """Raise :py:class:`ConfigError` for the first invariant that does not hold."""
        for name in _COUNT_FIELDS:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(name, 'must be an integer, got %r' % (value,))
            if value < 1:
                raise ConfigError(name, 'must be at least 1, got %d' % value)
        for name in _POSITIVE_FIELDS:
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(name, 'must be positive and finite, got %r' % (value,))
        if isinstance(self.rng_seed, bool) or not isinstance(self.rng_seed, (int, np.integer)) or self.rng_seed < 0:
            raise ConfigError('rng_seed', 'must be a non-negative integer, got %r' % (self.rng_seed,))
        if not np.isfinite(self.noise_density):
            raise ConfigError('noise_density', 'must be finite, got %r' % (self.noise_density,))
        if not 0.0 <= self.resense_frequency <= 1.0:
            raise ConfigError('resense_frequency', 'must lie in [0,1], got %r' % (self.resense_frequency,))
        for name in _RANGE_FIELDS:
            value = getattr(self, name)
            if len(value) != 2:
                raise ConfigError(name, 'must be a (min, max) pair, got %r' % (value,))
            low, high = value
            if not (np.isfinite(low) and np.isfinite(high)) or low <= 0:
                raise ConfigError(name, 'bounds must be positive and finite, got %r' % (value,))
            if low > high:
                raise ConfigError(name, 'minimum exceeds maximum in %r' % (value,))
        if self.slot_duration_mode not in SLOT_DURATION_MODES:
            raise ConfigError('slot_duration_mode', 'must be one of %s, got %r'
                              % (', '.join(SLOT_DURATION_MODES), self.slot_duration_mode))
        if self.fractional_weight not in FRACTIONAL_WEIGHTS:
            raise ConfigError('fractional_weight', 'must be one of %s, got %r'
                              % (', '.join(FRACTIONAL_WEIGHTS), self.fractional_weight))
        # parses, or raises naming the field
        self.popularity_weights()

    @property
    def noise_density_w_hz(self) -> float:
        """Noise power density converted from dBm/Hz to W/Hz."""
        return 10.0 ** (self.noise_density / 10.0) * 1e-3

    @property
    def sensing_threshold(self) -> float:
        """The reuse threshold beta = beta_0 * beta_1 / beta_2."""
        return self.resense_frequency * self.weight_latency / self.weight_aoi

    def popularity_weights(self) -> np.ndarray:
        """Publication probability of task ids 1..M."""
        kind, _, argument = self.task_popularity.partition(':')
        ranks = np.arange(1, self.num_task_types + 1, dtype=float)
        if kind == POPULARITY_UNIFORM and not argument:
            weights = np.ones_like(ranks)
        elif kind == POPULARITY_ZIPF:
            try:
                exponent = float(argument)
            except ValueError:
                raise ConfigError('task_popularity', 'zipf needs a numeric exponent, got %r'
                                  % (self.task_popularity,))
            if not np.isfinite(exponent) or exponent < 0:
                raise ConfigError('task_popularity', 'zipf exponent must be non-negative, got %r' % (exponent,))
            weights = ranks ** -exponent
        else:
            raise ConfigError('task_popularity', 'expected uniform or zipf:<exponent>, got %r'
                              % (self.task_popularity,))
        return weights / weights.sum()

    def replace(self, **overrides) -> 'ScenarioConfig':
        """A validated copy with OVERRIDES applied."""
        unknown = set(overrides) - set(SCENARIO_FIELDS)
        if unknown:
            raise ConfigError(sorted(unknown)[0], 'unknown configuration field')
        return dataclasses.replace(self, **overrides)

    @classmethod
    def from_mapping(cls, values: Mapping[str, object], base: Optional['ScenarioConfig'] = None) -> 'ScenarioConfig':
        """
        Build a configuration from BASE (defaults when omitted) overridden by
        VALUES. Values may be typed or strings as read from a configuration file
        or the command line; None values are skipped.
        """
        base = base if base is not None else cls()
        overrides = {}
        for name, raw in values.items():
            if raw is None:
                continue
            if name not in SCENARIO_FIELDS:
                raise ConfigError(name, 'unknown configuration field')
            overrides[name] = _coerce(name, raw)
        return base.replace(**overrides)

    def to_mapping(self) -> Dict[str, str]:
        """String form of every field, readable back by from_mapping()."""
        result = OrderedDict()  # type: Dict[str, str]
        for name in SCENARIO_FIELDS:
            value = getattr(self, name)
            if name in _RANGE_FIELDS:
                result[name] = '%r,%r' % (float(value[0]), float(value[1]))
            elif isinstance(value, bool):
                result[name] = 'true' if value else 'false'
            else:
                result[name] = repr(value) if isinstance(value, float) else str(value)
        return result


def _coerce(name, raw):
    if not isinstance(raw, str):
        if name in _RANGE_FIELDS:
            return tuple(float(v) for v in raw)
        return raw
    text = raw.strip()
    try:
        if name in _RANGE_FIELDS:
            parts = [p for p in text.replace(' ', '').split(',') if p]
            if len(parts) == 1:
                parts = parts * 2
            return tuple(float(p) for p in parts)
        if name in _COUNT_FIELDS or name == 'rng_seed':
            return int(text)
        if name in ('redraw_users_per_slot', 'strict_lemma1'):
            return _BOOL_WORDS[text.lower()]
        if name in ('task_popularity', 'slot_duration_mode', 'fractional_weight'):
            return text
        return float(text)
    except (KeyError, ValueError):
        raise ConfigError(name, 'cannot parse %r' % raw)


@dataclass(frozen=True)
class UserProfile:
    user_id: int
    distance: float
    transmit_power: float
    sensing_rate: float
    sensing_energy_per_bit: float
    energy_budget: float


@dataclass(frozen=True)
class TaskType:
    task_id: int
    size: float


@dataclass(frozen=True)
class SlotState:
    """Everything realized for one slot: the published task, users and channel gains."""
    slot: int
    task: TaskType
    users: Tuple[UserProfile, ...]
    channels: ChannelRealization


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    users: Tuple[UserProfile, ...]
    tasks: Tuple[TaskType, ...]
    task_schedule: Tuple[int, ...]

    def task(self, task_id: int) -> TaskType:
        return self.tasks[task_id - 1]

    def stream(self, index: int) -> np.random.Generator:
        """A fresh generator over one of the scenario's independent streams."""
        return np.random.default_rng(_stream_seed(self.config.rng_seed, index))

    def policy_rng(self) -> np.random.Generator:
        return self.stream(_POLICY_STREAM)


def _stream_seed(seed, index):
    # Same child spawn() would hand out, rebuilt so every caller gets an identical stream.
    return np.random.SeedSequence(seed, spawn_key=(index,))


def draw_user_parameters(rng: np.random.Generator, config: ScenarioConfig,
                         distances: Sequence[float]) -> Tuple[UserProfile, ...]:
    """
    One user per distance, with power, sensing rate, sensing energy and energy
    budget drawn from RNG over the configured ranges, in that order.
    """
    k = len(distances)
    powers = rng.uniform(*config.power_range, size=k)
    rates = rng.uniform(*config.sensing_rate_range, size=k)
    energies = rng.uniform(*config.sensing_energy_range, size=k)
    budgets = rng.uniform(*config.energy_budget_range, size=k)
    return tuple(
        UserProfile(
            user_id=k_,
            distance=float(distances[k_]),
            transmit_power=float(powers[k_]),
            sensing_rate=float(rates[k_]),
            sensing_energy_per_bit=float(energies[k_]),
            energy_budget=float(budgets[k_]),
        )
        for k_ in range(k)
    )


def generate_scenario(config: ScenarioConfig) -> Scenario:
    """
    Draw users, task sizes and the publication schedule. Every quantity is
    uniform over its configured closed range; publications are i.i.d. from
    the configured popularity over task ids 1..M.
    """
    config.validate()
    rng = np.random.default_rng(_stream_seed(config.rng_seed, _SCENARIO_STREAM))

    distances = rng.uniform(*config.distance_range, size=config.num_users)
    users = draw_user_parameters(rng, config, distances)

    sizes = rng.uniform(*config.task_size_range, size=config.num_task_types)
    tasks = tuple(TaskType(task_id=i + 1, size=float(sizes[i])) for i in range(config.num_task_types))

    schedule = rng.choice(config.num_task_types, size=config.num_slots, p=config.popularity_weights()) + 1

    return Scenario(
        config=config,
        users=users,
        tasks=tasks,
        task_schedule=tuple(int(i) for i in schedule),
    )


def task_frequency(task_schedule: Sequence[int], t: int, num_task_types: Optional[int] = None) -> Dict[int, int]:
    """
    Publication counts F_i^t: how many of the first T slots published task i,
    for every task id 1..M (M defaults to the largest id in the schedule).
    """
    if not 1 <= t <= len(task_schedule):
        raise ValueError('slot %d outside 1..%d' % (t, len(task_schedule)))
    num_task_types = num_task_types or max(task_schedule)
    counts = np.bincount(np.asarray(task_schedule[:t], dtype=int), minlength=num_task_types + 1)
    return {i: int(counts[i]) for i in range(1, num_task_types + 1)}


def slot_states(scenario: Scenario) -> Iterator[SlotState]:
    """
    Realize the scenario slot by slot. Each call replays the same channel and
    user draws, whatever the caller decides in between.
    """
    config = scenario.config
    channel_rng = scenario.stream(_CHANNEL_STREAM)
    redraw_rng = scenario.stream(_USER_REDRAW_STREAM)
    distances = [u.distance for u in scenario.users]

    for t, task_id in enumerate(scenario.task_schedule, start=1):
        if config.redraw_users_per_slot:
            users = draw_user_parameters(redraw_rng, config, distances)
        else:
            users = scenario.users
        channels = draw_channels(users, config.num_subchannels, channel_rng)
        yield SlotState(slot=t, task=scenario.task(task_id), users=users, channels=channels)
