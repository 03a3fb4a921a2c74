"""Brute-force reference solver for small instances.

Enumerates every subcarrier pairing and every per-pair mode/user choice,
then water-fills the total power over each configuration's effective
gains.  Exponential in K, so only usable for testing; hard limits K <= 6
and U <= 3.  The dual solver in `dualsolve` never calls into this module.
"""

from __future__ import annotations

import itertools

import numpy as np

from .gains import equiv_gain, equiv_gain_table, pair_gains_of
from .model import (
    Allocation,
    ChannelRealization,
    Direct,
    PairDecision,
    ProtocolKind,
    RelayAided,
    rate_of_snr,
)

MAX_SUBCARRIERS = 6
MAX_USERS = 3

_WF_ITERS = 100
_CHUNK_ROWS = 1 << 16


def _waterfill_rows(gain_rows: np.ndarray, p_tot: float) -> tuple[np.ndarray, np.ndarray]:
    """Water-fill budget p_tot over each row of gains independently.

    Returns (powers, rates) with powers[i].sum() == p_tot to ~1e-12
    relative, except for all-zero rows which get no power.  Bisects the
    water level nu per row; p_i = max(nu - 1/g_i, 0).
    """
    g = np.asarray(gain_rows, dtype=float)
    inv_g = np.where(g > 0, 1.0 / np.where(g > 0, g, 1.0), np.inf)
    min_inv = np.min(inv_g, axis=1)
    usable = np.isfinite(min_inv)
    lo = np.zeros(g.shape[0])
    # at nu = p_tot + 1/g_best the best channel alone absorbs the budget
    hi = np.where(usable, p_tot + np.where(usable, min_inv, 0.0), 0.0)
    for _ in range(_WF_ITERS):
        nu = 0.5 * (lo + hi)
        total = np.maximum(nu[:, None] - inv_g, 0.0).sum(axis=1)
        over = total > p_tot
        hi = np.where(over, nu, hi)
        lo = np.where(over, lo, nu)
    nu = 0.5 * (lo + hi)
    powers = np.maximum(nu[:, None] - inv_g, 0.0)
    rates = rate_of_snr(g * powers).sum(axis=1)
    return powers, rates


def waterfill_total(gains, p_tot: float) -> tuple[np.ndarray, float]:
    """Optimal powers p_i = [nu - 1/g_i]+ with sum p_i = p_tot, and the sum rate.

    Zero-gain channels get zero power.  If every gain is zero the budget
    cannot be spent: the returned powers are all zero (their sum flags
    the unassigned power) and the rate is 0.
    """
    g = np.asarray(gains, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("gains must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(g)) or np.any(g < 0):
        raise ValueError("gains must be finite and nonnegative")
    if not np.isfinite(p_tot) or p_tot < 0:
        raise ValueError(f"p_tot must be finite and >= 0, got {p_tot}")
    if p_tot == 0:
        return np.zeros(g.size), 0.0
    powers, rates = _waterfill_rows(g[None, :], p_tot)
    return powers[0], float(rates[0])


def _check_instance_size(channel: ChannelRealization):
    if channel.num_subcarriers > MAX_SUBCARRIERS or channel.num_users > MAX_USERS:
        raise ValueError(
            f"oracle limited to K <= {MAX_SUBCARRIERS}, U <= {MAX_USERS}; "
            f"got K={channel.num_subcarriers}, U={channel.num_users}"
        )


def oracle_solve(
    channel: ChannelRealization, protocol: ProtocolKind, p_tot: float
) -> Allocation:
    """Globally optimal allocation by exhaustive configuration search.

    A configuration fixes the pairing permutation and, per pair, either a
    relay-aided user or a direct user for each slot; the inner power
    problem then reduces to water-filling over the configuration's
    effective gains (one per relay pair, two per direct pair).
    Configurations are scanned in lexicographic order and ties keep the
    earliest, so results are reproducible.
    """
    _check_instance_size(channel)
    if not np.isfinite(p_tot) or p_tot <= 0:
        raise ValueError(f"p_tot must be finite and > 0, got {p_tot}")
    num_k = channel.num_subcarriers
    num_u = channel.num_users
    gain_table = equiv_gain_table(channel, protocol)  # (U, K, K)
    num_choices = num_u + num_u * num_u  # relay users first, then (a, b) pairs

    best = None  # (rate, perm, digits)
    for perm in itertools.permutations(range(num_k)):
        # option_gains[k, j] = the one-or-two effective gains of choice j
        option_gains = np.zeros((num_k, num_choices, 2))
        for k, l in enumerate(perm):
            option_gains[k, :num_u, 0] = gain_table[:, k, l]
            direct_first = np.repeat(channel.g_su[:, k], num_u)
            direct_second = np.tile(channel.g_su[:, l], num_u)
            option_gains[k, num_u:, 0] = direct_first
            option_gains[k, num_u:, 1] = direct_second

        total_rows = num_choices**num_k
        for start in range(0, total_rows, _CHUNK_ROWS):
            stop = min(start + _CHUNK_ROWS, total_rows)
            flat = np.arange(start, stop)
            digits = np.stack(
                np.unravel_index(flat, (num_choices,) * num_k), axis=1
            )  # (rows, K), first pair most significant
            rows = option_gains[np.arange(num_k)[None, :], digits, :].reshape(
                stop - start, 2 * num_k
            )
            _, rates = _waterfill_rows(rows, p_tot)
            idx = int(np.argmax(rates))
            if best is None or rates[idx] > best[0]:
                best = (float(rates[idx]), perm, digits[idx].copy())

    rate, perm, digits = best
    return _materialize(channel, protocol, p_tot, perm, digits, num_u)


def _materialize(channel, protocol, p_tot, perm, digits, num_u) -> Allocation:
    """Rebuild the winning configuration's allocation with exact powers."""
    gain_row = []
    for k, choice in enumerate(digits):
        l = perm[k]
        if choice < num_u:
            g, _ = equiv_gain(pair_gains_of(channel, k, l, choice), protocol)
            gain_row.extend([g, 0.0])
        else:
            a, b = divmod(choice - num_u, num_u)
            gain_row.extend([channel.g_su[a, k], channel.g_su[b, l]])
    powers, sum_rate = waterfill_total(np.array(gain_row), p_tot)

    decisions = []
    for k, choice in enumerate(digits):
        l = perm[k]
        if choice < num_u:
            u = int(choice)
            _, fractions = equiv_gain(pair_gains_of(channel, k, l, u), protocol)
            pair_power = float(powers[2 * k])
            mode = RelayAided(user=u, split=fractions.scaled(pair_power))
        else:
            a, b = divmod(int(choice) - num_u, num_u)
            mode = Direct(
                first_user=a,
                first_power=float(powers[2 * k]),
                second_user=b,
                second_power=float(powers[2 * k + 1]),
            )
        decisions.append(
            PairDecision(first_slot_subcarrier=k, second_slot_subcarrier=int(l), mode=mode)
        )
    total_power = float(powers.sum())
    return Allocation(decisions=tuple(decisions), sum_rate=sum_rate, total_power=total_power)
