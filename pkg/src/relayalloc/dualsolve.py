"""Dual-decomposition solver for the sum-rate maximal resource allocation.

For a fixed multiplier mu the inner problem decomposes: every candidate
pair (k, l) gets a profit equal to the best water-filled metric over its
mode/user choices, and the pairing itself becomes a K x K assignment
problem.  The outer problem tunes mu by bracketing and bisection until
the allocated power lands in [p_tot - epsilon, p_tot].

Because the assignment argmax can switch discontinuously with mu, the
allocated power may jump across the budget without ever entering the
epsilon band.  When the bracket collapses onto such a jump, the solver
re-water-fills every pairing/mode configuration met along the search at
the full budget and returns the best of those (all are feasible), which
in practice closes the residual gap to the true optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assign import solve_assignment
from .gains import equiv_gain, equiv_gain_table, pair_gains_of, relay_rate
from .model import (
    Allocation,
    ChannelRealization,
    Direct,
    PairDecision,
    ProtocolKind,
    RelayAided,
    rate_of_snr,
)

_LOG2E = math.log2(math.e)
_BRACKET_COLLAPSE = 1e-14


class NonConvergenceError(RuntimeError):
    """Bisection ran out of iterations before meeting the power band.

    Carries the best feasible dual point found so callers can still
    report an allocation.
    """

    def __init__(self, message: str, best_point: "DualPoint | None" = None):
        super().__init__(message)
        self.best_point = best_point


@dataclass(frozen=True)
class SolverSettings:
    """Knobs of the outer bisection.

    epsilon is the absolute width of the acceptable power band below
    p_tot; None selects 1e-6 * p_tot, which scales across budget sweeps.
    Values below ~1e-12 * p_tot are below float resolution of the inner
    water-filling and cannot be honored.
    """

    p_tot: float
    epsilon: float | None = None
    max_bisection_iters: int = 200
    bracket_growth: float = 2.0

    def __post_init__(self):
        if not math.isfinite(self.p_tot) or self.p_tot <= 0:
            raise ValueError(f"p_tot must be finite and > 0, got {self.p_tot}")
        if self.epsilon is not None:
            if not math.isfinite(self.epsilon) or self.epsilon <= 0:
                raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
            if self.epsilon >= self.p_tot:
                raise ValueError("epsilon must be smaller than p_tot")
        if self.max_bisection_iters < 1:
            raise ValueError("max_bisection_iters must be >= 1")
        if not self.bracket_growth > 1:
            raise ValueError("bracket_growth must be > 1")

    @property
    def power_tolerance(self) -> float:
        return self.epsilon if self.epsilon is not None else 1e-6 * self.p_tot


@dataclass(frozen=True)
class DualPoint:
    """LRP maximizer at one multiplier value."""

    mu: float
    allocation: Allocation
    sum_power: float
    dual_value: float

    def __post_init__(self):
        if not math.isclose(
            self.sum_power, self.allocation.total_power, rel_tol=1e-9, abs_tol=1e-12
        ):
            raise ValueError("sum_power does not match the allocation's total power")


def waterfill_level(mu: float, g: float) -> float:
    """Optimal power of a single channel with gain g at multiplier mu.

    [log2(e) / (2 mu) - 1/g]+; zero for an unusable (g = 0) channel.
    """
    if not math.isfinite(mu) or mu <= 0:
        raise ValueError(f"mu must be finite and > 0, got {mu}")
    if not math.isfinite(g) or g < 0:
        raise ValueError(f"g must be finite and >= 0, got {g}")
    if g == 0:
        return 0.0
    return max(_LOG2E / (2.0 * mu) - 1.0 / g, 0.0)


def _lam(mu: float, gains: np.ndarray) -> np.ndarray:
    """Vectorized waterfill_level over an array of gains."""
    inv = np.where(gains > 0, 1.0 / np.where(gains > 0, gains, 1.0), np.inf)
    return np.maximum(_LOG2E / (2.0 * mu) - inv, 0.0)


def _metric(mu: float, gains: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel contribution C(G * lam) - mu * lam and the lam used."""
    lam = _lam(mu, gains)
    return rate_of_snr(gains * lam) - mu * lam, lam


class _LrpContext:
    """Per-(channel, protocol) precomputation reused across mu values."""

    def __init__(self, channel: ChannelRealization, protocol: ProtocolKind, p_tot: float):
        self.channel = channel
        self.protocol = protocol
        self.p_tot = p_tot
        self.gain_table = equiv_gain_table(channel, protocol)  # (U, K, K)

    def point(self, mu: float) -> DualPoint:
        channel = self.channel
        num_k = channel.num_subcarriers

        relay_metric, relay_lam = _metric(mu, self.gain_table)
        a_kl = relay_metric.max(axis=0)  # (K, K)
        a_user = relay_metric.argmax(axis=0)
        direct_metric, direct_lam = _metric(mu, channel.g_su)
        best_direct = direct_metric.max(axis=0)  # (K,)
        best_direct_user = direct_metric.argmax(axis=0)
        b_kl = best_direct[:, None] + best_direct[None, :]

        relay_wins = a_kl >= b_kl  # ties prefer the relay-aided mode
        c_kl = np.where(relay_wins, a_kl, b_kl)
        perm, profit = solve_assignment(c_kl)

        decisions = []
        sum_rate = 0.0
        total_power = 0.0
        for k in range(num_k):
            l = int(perm[k])
            if relay_wins[k, l]:
                u = int(a_user[k, l])
                pair_power = float(relay_lam[u, k, l])
                pg = pair_gains_of(channel, k, l, u)
                _, fractions = equiv_gain(pg, self.protocol)
                split = fractions.scaled(pair_power)
                mode = RelayAided(user=u, split=split)
                sum_rate += relay_rate(pg, split, self.protocol)
            else:
                a = int(best_direct_user[k])
                b = int(best_direct_user[l])
                p = float(direct_lam[a, k])
                q = float(direct_lam[b, l])
                mode = Direct(first_user=a, first_power=p, second_user=b, second_power=q)
                sum_rate += rate_of_snr(channel.g_su[a, k] * p)
                sum_rate += rate_of_snr(channel.g_su[b, l] * q)
            decisions.append(PairDecision(k, l, mode))
            total_power += mode.total_power

        allocation = Allocation(
            decisions=tuple(decisions), sum_rate=sum_rate, total_power=total_power
        )
        return DualPoint(
            mu=mu,
            allocation=allocation,
            sum_power=total_power,
            dual_value=mu * self.p_tot + profit,
        )


def pair_metrics(
    mu: float, channel: ChannelRealization, protocol: ProtocolKind, k: int, l: int
) -> tuple[float, PairDecision]:
    """Profit of pairing first-slot k with second-slot l, and the best decision.

    Compares the best relay-aided user (metric on the pair's equivalent
    gain) against the best pair of direct users (the slot-k and slot-l
    terms decompose, so each is maximized independently in O(U)).  Ties
    go to the relay-aided mode, then to the lowest user index.
    """
    if not math.isfinite(mu) or mu <= 0:
        raise ValueError(f"mu must be finite and > 0, got {mu}")
    num_k = channel.num_subcarriers
    if not (0 <= k < num_k and 0 <= l < num_k):
        raise ValueError(f"subcarrier indices ({k}, {l}) out of range for K={num_k}")

    best_relay = None  # (metric, user, pair_power, split)
    for u in range(channel.num_users):
        pg = pair_gains_of(channel, k, l, u)
        gain, fractions = equiv_gain(pg, protocol)
        power = waterfill_level(mu, gain)
        metric = rate_of_snr(gain * power) - mu * power
        if best_relay is None or metric > best_relay[0]:
            best_relay = (metric, u, power, fractions)

    direct_metric, direct_lam = _metric(mu, channel.g_su)
    a = int(direct_metric[:, k].argmax())
    b = int(direct_metric[:, l].argmax())
    direct_total = float(direct_metric[a, k] + direct_metric[b, l])

    if best_relay[0] >= direct_total:
        metric, u, power, fractions = best_relay
        decision = PairDecision(k, l, RelayAided(user=u, split=fractions.scaled(power)))
        return float(metric), decision
    decision = PairDecision(
        k,
        l,
        Direct(
            first_user=a,
            first_power=float(direct_lam[a, k]),
            second_user=b,
            second_power=float(direct_lam[b, l]),
        ),
    )
    return direct_total, decision


def solve_lrp(
    mu: float, channel: ChannelRealization, protocol: ProtocolKind, p_tot: float
) -> DualPoint:
    """Maximize the Lagrangian at fixed mu > 0 (water-fill + assignment)."""
    if not math.isfinite(mu) or mu <= 0:
        raise ValueError(f"mu must be finite and > 0, got {mu}")
    if not math.isfinite(p_tot) or p_tot <= 0:
        raise ValueError(f"p_tot must be finite and > 0, got {p_tot}")
    return _LrpContext(channel, protocol, p_tot).point(mu)


def _config_signature(allocation: Allocation) -> tuple:
    sig = []
    for d in allocation.decisions:
        if isinstance(d.mode, RelayAided):
            sig.append((d.first_slot_subcarrier, d.second_slot_subcarrier, "r", d.mode.user))
        else:
            sig.append(
                (
                    d.first_slot_subcarrier,
                    d.second_slot_subcarrier,
                    "d",
                    d.mode.first_user,
                    d.mode.second_user,
                )
            )
    return tuple(sig)


def _fill_budget(gains: np.ndarray, p_tot: float) -> np.ndarray:
    """Water-fill exactly p_tot over fixed entity gains by bisecting mu.

    For a fixed configuration the allocated power sum(lam(mu, g)) is
    continuous and strictly decreasing in mu wherever positive, so plain
    bisection applies.  All-zero gains return zero powers (the budget is
    unusable).
    """
    if not np.any(gains > 0):
        return np.zeros(gains.size)
    hi = 1.0
    while _lam(hi, gains).sum() >= p_tot:
        hi *= 2.0
    lo = hi / 2.0
    while _lam(lo, gains).sum() < p_tot:
        lo /= 2.0
        if lo < 1e-300:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        total = _lam(mid, gains).sum()
        if abs(total - p_tot) <= 1e-13 * p_tot:
            return _lam(mid, gains)
        if total > p_tot:
            lo = mid
        else:
            hi = mid
    return _lam(hi, gains)


def _refill(
    channel: ChannelRealization,
    protocol: ProtocolKind,
    template: Allocation,
    p_tot: float,
) -> Allocation:
    """Re-optimize powers of a fixed configuration at the full budget."""
    entity_gains = []
    relay_info = {}
    for i, d in enumerate(template.decisions):
        k, l = d.first_slot_subcarrier, d.second_slot_subcarrier
        if isinstance(d.mode, RelayAided):
            pg = pair_gains_of(channel, k, l, d.mode.user)
            gain, fractions = equiv_gain(pg, protocol)
            relay_info[i] = (pg, fractions)
            entity_gains.extend([gain, 0.0])
        else:
            entity_gains.extend(
                [channel.g_su[d.mode.first_user, k], channel.g_su[d.mode.second_user, l]]
            )
    powers = _fill_budget(np.asarray(entity_gains, dtype=float), p_tot)

    decisions = []
    sum_rate = 0.0
    total_power = 0.0
    for i, d in enumerate(template.decisions):
        k, l = d.first_slot_subcarrier, d.second_slot_subcarrier
        if isinstance(d.mode, RelayAided):
            pg, fractions = relay_info[i]
            split = fractions.scaled(float(powers[2 * i]))
            mode = RelayAided(user=d.mode.user, split=split)
            sum_rate += relay_rate(pg, split, protocol)
        else:
            a, b = d.mode.first_user, d.mode.second_user
            p, q = float(powers[2 * i]), float(powers[2 * i + 1])
            mode = Direct(first_user=a, first_power=p, second_user=b, second_power=q)
            sum_rate += rate_of_snr(channel.g_su[a, k] * p)
            sum_rate += rate_of_snr(channel.g_su[b, l] * q)
        decisions.append(PairDecision(k, l, mode))
        total_power += mode.total_power
    return Allocation(decisions=tuple(decisions), sum_rate=sum_rate, total_power=total_power)


def solve(
    channel: ChannelRealization, protocol: ProtocolKind, settings: SolverSettings
) -> Allocation:
    """Find the (at least approximately) sum-rate optimal allocation.

    Brackets mu by geometric growth while the budget is exceeded, then
    bisects until the allocated power enters [p_tot - eps, p_tot].  If
    the bracket collapses onto an assignment jump instead, the best
    budget-refilled configuration seen along the way is returned.

    Raises NonConvergenceError when max_bisection_iters runs out with a
    still-open bracket (carrying the best feasible dual point).
    """
    p_tot = settings.p_tot
    eps = settings.power_tolerance
    ctx = _LrpContext(channel, protocol, p_tot)
    pool: dict[tuple, Allocation] = {}

    def record(dp: DualPoint):
        pool.setdefault(_config_signature(dp.allocation), dp.allocation)

    def in_band(dp: DualPoint) -> bool:
        return p_tot - eps <= dp.sum_power <= p_tot

    mu_max = 1.0
    dp = ctx.point(mu_max)
    record(dp)
    if in_band(dp):
        return dp.allocation
    while dp.sum_power >= p_tot:
        mu_max *= settings.bracket_growth
        dp = ctx.point(mu_max)
        record(dp)
        if in_band(dp):
            return dp.allocation

    mu_min = 0.0
    best_feasible = dp  # the bracketing endpoint is under budget
    for _ in range(settings.max_bisection_iters):
        mu = 0.5 * (mu_min + mu_max)
        dp = ctx.point(mu)
        record(dp)
        if in_band(dp):
            return dp.allocation
        if dp.sum_power > p_tot:
            mu_min = mu
        else:
            mu_max = mu
            if dp.sum_power > best_feasible.sum_power:
                best_feasible = dp
        if mu_min > 0 and (mu_max - mu_min) <= _BRACKET_COLLAPSE * mu_max:
            # assignment jump across the budget: re-fill candidates exactly
            best = None
            for template in pool.values():
                candidate = _refill(channel, protocol, template, p_tot)
                if best is None or candidate.sum_rate > best.sum_rate:
                    best = candidate
            return best

    raise NonConvergenceError(
        f"power band not reached within {settings.max_bisection_iters} bisection steps",
        best_point=best_feasible,
    )
