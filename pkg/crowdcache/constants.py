"""
Constants for the crowdcache simulator.

Scenario defaults reproduce the system parameter table of the cache-enabled
crowdsensing cell. Where the table gives a range for a swept quantity, the
default is the point used by the transmit-power experiment (K=30, N=20).
"""
from __future__ import generator_stop

######################
# Scenario
######################
DEFAULT_NUM_USERS = 30
DEFAULT_NUM_SUBCHANNELS = 20
DEFAULT_NUM_TASK_TYPES = 20
DEFAULT_NUM_SLOTS = 1000
DEFAULT_BANDWIDTH_HZ = 1e6
DEFAULT_NOISE_DENSITY_DBM_HZ = -174.0
DEFAULT_CACHE_CAPACITY_BITS = 5e7
DEFAULT_AOI_MAX = 50.0
DEFAULT_WEIGHT_LATENCY = 1.0
DEFAULT_WEIGHT_AOI = 0.1
DEFAULT_RESENSE_FREQUENCY = 0.7
DEFAULT_DISTANCE_RANGE_M = (30.0, 500.0)
DEFAULT_POWER_RANGE_W = (0.1, 0.2)
DEFAULT_SENSING_RATE_RANGE = (1e4, 1e6)
DEFAULT_SENSING_ENERGY_RANGE = (1e-12, 1e-11)
DEFAULT_ENERGY_BUDGET_RANGE = (0.01, 0.1)
DEFAULT_TASK_SIZE_RANGE = (0.5e7, 1.5e7)
DEFAULT_TASK_POPULARITY = 'zipf:0.8'
DEFAULT_CACHE_HIT_SLOT_DURATION = 0.05
DEFAULT_FIXED_SLOT_DURATION = 1.0
DEFAULT_FRACTIONAL_WEIGHT = 'channel_gain'
DEFAULT_SLOT_DURATION_MODE = 'latency'
DEFAULT_RNG_SEED = 42

######################
# Channel
######################
PATH_LOSS_INTERCEPT_DB = 128.1
PATH_LOSS_SLOPE_DB = 37.6

######################
# Harness
######################
DEFAULT_SWEEP_SEEDS = 50
DEFAULT_ORACLE_INSTANCES = 10000
#: Subchannel counts timed by the complexity check, with K set to the largest
#: so that every matching has N pairs.
COMPLEXITY_SUBCHANNELS = (32, 64, 128, 256)
DEFAULT_POLICY = 'proposed'

######################
# Stats
######################
DEFAULT_STATSD_HOST = 'localhost'
DEFAULT_STATSD_PORT = 8125

######################
# CLI
######################
DEFAULT_LOCK_TIMEOUT_SECONDS = 2
VALIDATION_EXIT_CODE = 2
