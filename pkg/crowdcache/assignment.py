"""
User to subchannel assignment.

With the equal-completion-time allocation, the latency of a slot is
V / sum(1/alpha) over the matched pairs, so minimizing latency is a
maximum-weight bipartite matching with edge weights 1/alpha[k][n]. It is
solved with the Hungarian method (scipy's ``linear_sum_assignment``), which
handles rectangular matrices directly: the matching has min(K, N) pairs.
"""
from __future__ import generator_stop

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from crowdcache import CrowdcacheError
from crowdcache.channel import ChannelRealization, subchannel_rate


#: Relative slack under which two matchings count as equally good.
TIE_TOLERANCE = 1e-9


class AssignmentError(CrowdcacheError):
    pass


@dataclass(frozen=True)
class AlphaMatrix:
    """
    Per-bit processing time alpha[k][n] = 1/o_k + 1/r_{k,n} (s/bit), the rates
    r[k][n] (bit/s) it was built from and the gains behind them.
    """
    alpha: np.ndarray
    rates: np.ndarray
    gains: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.alpha.shape

    @classmethod
    def from_alpha(cls, alpha) -> 'AlphaMatrix':
        """Wrap a bare alpha matrix (rates and gains unknown, set to NaN)."""
        alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
        blank = np.full(alpha.shape, np.nan)
        return cls(alpha=alpha, rates=blank, gains=blank)


@dataclass(frozen=True)
class AssignmentResult:
    """
    A feasible matching: every user and every subchannel appears at most once.
    ``matching`` is sorted by user id.
    """
    matching: Tuple[Tuple[int, int], ...]
    per_user_rate: Dict[int, float]
    per_user_alpha: Dict[int, float]
    per_user_gain: Dict[int, float]
    objective_weight_sum: float

    @property
    def selected_set(self) -> FrozenSet[int]:
        return frozenset(k for k, _ in self.matching)

    @property
    def subchannel_of(self) -> Dict[int, int]:
        return dict(self.matching)

    def __len__(self):
        return len(self.matching)

    @classmethod
    def from_pairs(cls, alpha: AlphaMatrix, pairs: Iterable[Tuple[int, int]]) -> 'AssignmentResult':
        matching = tuple(sorted((int(k), int(n)) for k, n in pairs))
        users = [k for k, _ in matching]
        channels = [n for _, n in matching]
        if len(set(users)) != len(users) or len(set(channels)) != len(channels):
            raise AssignmentError('pairs %r reuse a user or a subchannel' % (matching,))
        alphas = {k: float(alpha.alpha[k, n]) for k, n in matching}
        return cls(
            matching=matching,
            per_user_rate={k: float(alpha.rates[k, n]) for k, n in matching},
            per_user_alpha=alphas,
            per_user_gain={k: float(alpha.gains[k, n]) for k, n in matching},
            objective_weight_sum=float(np.sum([1.0 / a for a in alphas.values()])),
        )


def build_alpha(users: Sequence, channels: ChannelRealization, bandwidth: float, noise_density: float) -> AlphaMatrix:
    """
    alpha[k][n] = 1/o_k + 1/r(P_k, g[k][n]).

    :argument noise_density: N0 in W/Hz
    """
    if len(users) != channels.num_users:
        raise AssignmentError('%d users but %d channel rows' % (len(users), channels.num_users))
    powers = np.array([u.transmit_power for u in users], dtype=float)[:, np.newaxis]
    sensing = np.array([u.sensing_rate for u in users], dtype=float)[:, np.newaxis]

    rates = subchannel_rate(powers, channels.gains, bandwidth, noise_density)
    if not np.all(rates > 0):
        raise AssignmentError('non-positive transmission rate in the channel realization')
    alpha = 1.0 / sensing + 1.0 / rates
    return AlphaMatrix(alpha=alpha, rates=rates, gains=channels.gains)


def solve_matching(alpha: AlphaMatrix) -> AssignmentResult:
    """
    Matching of size min(K, N) maximizing the sum of 1/alpha over its pairs.
    Among equally good matchings the one whose (user, subchannel) pairs,
    sorted by user, compare lexicographically smallest is returned.
    """
    if alpha.alpha.size == 0:
        raise AssignmentError('empty alpha matrix')
    if not np.all(np.isfinite(alpha.alpha)) or not np.all(alpha.alpha > 0):
        raise AssignmentError('alpha entries must be positive and finite')

    weights = 1.0 / alpha.alpha
    rows, cols = linear_sum_assignment(weights, maximize=True)
    partner = _lexicographic_optimum(weights, {int(k): int(n) for k, n in zip(rows, cols)})
    return AssignmentResult.from_pairs(alpha, partner.items())


def _matching_weight(weights, partner):
    return float(sum(weights[k, n] for k, n in partner.items()))


def matching_duals(weights: np.ndarray, partner: Mapping[int, int]) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """
    Smallest row potentials u and matching column potentials v with
    u[k] + v[n] >= weights[k, n], equality on the matched pairs, and zero on
    unmatched rows and columns. Such potentials exist only when PARTNER is a
    maximum-weight matching; None when the check fails.
    """
    num_rows, num_cols = weights.shape
    scale = TIE_TOLERANCE * float(np.max(weights))
    matched_rows = np.array(sorted(partner), dtype=int)
    matched_cols = np.array([partner[k] for k in matched_rows], dtype=int)
    free_cols = np.setdiff1d(np.arange(num_cols), matched_cols)

    # u[k] >= weights[k, n] for a free column n, and
    # u[k] >= weights[k, n] - weights[k', n] + u[k'] for n matched to k'.
    lower = np.zeros(len(matched_rows))
    if free_cols.size:
        lower = np.maximum(lower, weights[np.ix_(matched_rows, free_cols)].max(axis=1))
    across = weights[np.ix_(matched_rows, matched_cols)] - weights[matched_rows, matched_cols][np.newaxis, :]
    u_matched = lower
    for _ in range(len(matched_rows) + 1):
        relaxed = np.maximum(lower, (across + u_matched[np.newaxis, :]).max(axis=1))
        if np.all(relaxed <= u_matched + scale):
            break
        u_matched = relaxed

    u = np.zeros(num_rows)
    v = np.zeros(num_cols)
    u[matched_rows] = u_matched
    v[matched_cols] = weights[matched_rows, matched_cols] - u_matched

    if np.any(u < -scale) or np.any(v < -scale):
        return None
    if np.any(u[:, np.newaxis] + v[np.newaxis, :] < weights - scale):
        return None
    return u, v


def _lexicographic_optimum(weights: np.ndarray, partner: Dict[int, int]) -> Dict[int, int]:
    duals = matching_duals(weights, partner)
    num_rows, num_cols = weights.shape
    if duals is None:
        candidates = np.ones(weights.shape, dtype=bool)
    else:
        u, v = duals
        # every maximum-weight matching uses only pairs with zero slack
        candidates = u[:, np.newaxis] + v[np.newaxis, :] - weights <= TIE_TOLERANCE * float(np.max(weights))
        if np.count_nonzero(candidates) == len(partner):
            return partner

    best = _matching_weight(weights, partner)
    tolerance = TIE_TOLERANCE * best
    fixed = {}  # type: Dict[int, int]
    for k in range(num_rows):
        current = partner.get(k)
        taken = set(fixed.values())
        for n in range(num_cols if current is None else current):
            if n in taken or not candidates[k, n]:
                continue
            forced = _forced_matching(weights, fixed, k, n)
            if _matching_weight(weights, forced) >= best - tolerance:
                partner = forced
                break
        if k in partner:
            fixed[k] = partner[k]
    return partner


def _forced_matching(weights: np.ndarray, fixed: Mapping[int, int], user: int, subchannel: int) -> Dict[int, int]:
    """Best matching containing FIXED and (USER, SUBCHANNEL), using only rows after USER for the rest."""
    forced = dict(fixed)
    forced[user] = subchannel
    rows = np.arange(user + 1, weights.shape[0])
    cols = np.setdiff1d(np.arange(weights.shape[1]), list(forced.values()))
    if rows.size and cols.size:
        sub_rows, sub_cols = linear_sum_assignment(weights[np.ix_(rows, cols)], maximize=True)
        forced.update((int(rows[r]), int(cols[c])) for r, c in zip(sub_rows, sub_cols))
    return forced
