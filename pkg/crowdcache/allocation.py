"""
Sensing-data-size allocation for a fixed matching.

Minimizing max_k alpha_k z_k subject to sum z_k = V gives every selected user
the same completion time, z_k = V / (alpha_k sum_j 1/alpha_j). Each user's
energy budget caps its share at E_k / A_k with A_k = e_k + P_k / r_k. When a
cap binds, the capped user is frozen at its cap and the remaining demand is
spread over the others with the same equal-time rule, until no cap binds
(min-max water-filling). With no binding cap the result is the closed form.
"""
from __future__ import generator_stop

from dataclasses import dataclass
from typing import Dict, Mapping, Sequence

import numpy as np

from crowdcache import CrowdcacheError
from crowdcache.assignment import AssignmentResult

#: Relative tolerance, in units of the demand, below which leftover bits count as zero.
DEMAND_TOLERANCE = 1e-9


class AllocationError(CrowdcacheError):
    pass


@dataclass(frozen=True)
class AllocationResult:
    """
    ``sizes`` in bits, ``completion_times`` (alpha_k z_k) in seconds and
    ``energies`` in J, all keyed by user id; ``system_latency`` is the largest
    completion time. ``shortfall`` is the demand left unallocated when the
    energy caps cannot cover it.
    """
    sizes: Dict[int, float]
    completion_times: Dict[int, float]
    energies: Dict[int, float]
    system_latency: float
    feasible: bool
    shortfall: float
    demand: float

    @property
    def allocated(self) -> float:
        return float(np.sum(list(self.sizes.values())))


def energy_coefficient(user, rate: float) -> float:
    """A_k = e_k + P_k / r_k, the energy spent per bit sensed and sent (J/bit)."""
    return user.sensing_energy_per_bit + user.transmit_power / rate


def energy_caps(assignment: AssignmentResult, users: Sequence) -> Dict[int, float]:
    """Largest size E_k / A_k each selected user can take within its budget."""
    return {
        k: users[k].energy_budget / energy_coefficient(users[k], assignment.per_user_rate[k])
        for k, _ in assignment.matching
    }


def build_allocation(assignment: AssignmentResult, users: Sequence, sizes: Mapping[int, float],
                     demand: float) -> AllocationResult:
    """
    Account for an allocation decided elsewhere: completion times (sensing
    + transmission), energies and the system latency.
    """
    sizes = {k: float(sizes.get(k, 0.0)) for k, _ in assignment.matching}
    times = {k: assignment.per_user_alpha[k] * z for k, z in sizes.items()}
    energies = {
        k: z * energy_coefficient(users[k], assignment.per_user_rate[k]) for k, z in sizes.items()
    }
    shortfall = max(0.0, demand - float(np.sum(list(sizes.values()))))
    if shortfall <= DEMAND_TOLERANCE * demand:
        shortfall = 0.0
    return AllocationResult(
        sizes=sizes,
        completion_times=times,
        energies=energies,
        system_latency=max(times.values()) if times else 0.0,
        feasible=shortfall == 0.0,
        shortfall=shortfall,
        demand=float(demand),
    )


def equal_time_sizes(alphas: Mapping[int, float], demand: float) -> Dict[int, float]:
    """z_k = demand / (alpha_k sum_j 1/alpha_j) over the users in ALPHAS."""
    level = demand / np.sum([1.0 / a for a in alphas.values()])
    return {k: level / a for k, a in alphas.items()}


def allocate(assignment: AssignmentResult, users: Sequence, size: float, strict: bool = False) -> AllocationResult:
    """
    Optimal min-max allocation of SIZE bits over the matched users.

    :argument strict: take the pointwise min of the cap and the equal-time share
                      without redistributing, which may leave demand unmet
    """
    if size <= 0:
        raise AllocationError('demand must be positive, got %r' % (size,))
    if not assignment.matching:
        return build_allocation(assignment, users, {}, size)

    caps = energy_caps(assignment, users)
    if strict:
        shares = equal_time_sizes(assignment.per_user_alpha, size)
        return build_allocation(assignment, users, {k: min(caps[k], z) for k, z in shares.items()}, size)

    sizes = {}  # type: Dict[int, float]
    active = dict(assignment.per_user_alpha)
    remaining = float(size)
    while active and remaining > 0:
        shares = equal_time_sizes(active, remaining)
        over = [k for k, z in shares.items() if z > caps[k]]
        if not over:
            sizes.update(shares)
            remaining = 0.0
            break
        # Raising the water level can only push more users over, so all of these stay capped.
        for k in over:
            sizes[k] = caps[k]
            remaining -= caps[k]
            del active[k]
    for k in active:
        sizes.setdefault(k, 0.0)

    return build_allocation(assignment, users, sizes, size)


def system_latency(allocation: AllocationResult) -> float:
    """Largest sensing plus transmission time among the selected users."""
    return max(allocation.completion_times.values()) if allocation.completion_times else 0.0


def energy_check(allocation: AllocationResult, users: Sequence, rtol: float = 1e-12) -> Dict[int, bool]:
    """Per selected user: does e_k z_k + P_k z_k / r_k stay within E_k?"""
    return {
        k: energy <= users[k].energy_budget * (1.0 + rtol)
        for k, energy in allocation.energies.items()
    }
