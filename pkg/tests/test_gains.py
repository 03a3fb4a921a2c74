import math

import numpy as np
import pytest

from gridref import grid_best_benchmark, grid_best_novel, random_gain_tuples
from relayalloc import (
    ChannelRealization,
    PairGains,
    PowerSplit,
    ProtocolKind,
    direct_gain,
    equiv_gain,
    equiv_gain_benchmark,
    equiv_gain_novel,
    equiv_gain_table,
    mrc_snr,
    pair_gains_of,
    rate_of_snr,
    relay_rate,
)


def test_mrc_snr_examples():
    # p_s2 = 0 collapses to the benchmark combining g_su_k*p_s1 + g_ru_l*p_r
    g = PairGains(g_sr_k=2.0, g_su_k=1.0, g_su_l=7.0, g_ru_l=3.0)
    assert math.isclose(mrc_snr(g, PowerSplit(1.0, 0.0, 1.0)), 4.0)
    # symmetric beamforming doubles the amplitude: (1+1)^2
    g = PairGains(1.0, 1.0, 1.0, 1.0)
    assert math.isclose(mrc_snr(g, PowerSplit(0.0, 1.0, 1.0)), 4.0)
    # direct arithmetic: 0.8 + (sqrt(0.05) + sqrt(0.45))^2 = 1.6
    g = PairGains(2.0, 1.0, 1.0, 3.0)
    assert math.isclose(mrc_snr(g, PowerSplit(0.8, 0.05, 0.15)), 1.6, rel_tol=1e-12)


def test_relay_rate_examples():
    g = PairGains(2.0, 1.0, 1.0, 3.0)
    assert relay_rate(g, PowerSplit(0.0, 0.0, 0.0), ProtocolKind.NOVEL) == 0.0

    # optimal novel split balances relay and destination SNR at 1.6
    split = PowerSplit(0.8, 0.05, 0.15)
    assert math.isclose(g.g_sr_k * split.p_s1, 1.6, rel_tol=1e-12)
    assert math.isclose(mrc_snr(g, split), 1.6, rel_tol=1e-12)
    assert math.isclose(
        relay_rate(g, split, ProtocolKind.NOVEL), rate_of_snr(1.6), rel_tol=1e-12
    )

    # benchmark: min{2*0.75, 0.75 + 3*0.25} = 1.5
    bench = PowerSplit(0.75, 0.0, 0.25)
    assert math.isclose(
        relay_rate(g, bench, ProtocolKind.BENCHMARK), rate_of_snr(1.5), rel_tol=1e-12
    )


def test_relay_rate_rejects_benchmark_with_source_on_second_slot():
    g = PairGains(2.0, 1.0, 1.0, 3.0)
    with pytest.raises(ValueError):
        relay_rate(g, PowerSplit(0.8, 0.05, 0.15), ProtocolKind.BENCHMARK)


def test_benchmark_split_against_grid_search():
    # scan p_s1 in [0, 1]: max min{2p, p + 3(1-p)} is 1.5 at p = 0.75
    p = np.linspace(0.0, 1.0, 1001)
    objective = np.minimum(2.0 * p, p + 3.0 * (1.0 - p))
    assert math.isclose(objective.max(), 1.5, rel_tol=1e-12)
    assert math.isclose(p[objective.argmax()], 0.75, abs_tol=1e-9)


def test_equiv_gain_benchmark_examples():
    gain, split = equiv_gain_benchmark(PairGains(2.0, 1.0, 0.0, 3.0))
    assert math.isclose(gain, 1.5, rel_tol=1e-12)
    assert math.isclose(split.p_s1, 0.75, rel_tol=1e-12)
    assert split.p_s2 == 0.0

    # relay cannot beat a strong direct link
    gain, split = equiv_gain_benchmark(PairGains(1.0, 2.0, 0.0, 5.0))
    assert gain == 1.0
    assert split == PowerSplit(1.0, 0.0, 0.0)

    # relay cannot decode at all
    gain, _ = equiv_gain_benchmark(PairGains(0.0, 0.7, 0.0, 9.0))
    assert gain == 0.0


def test_equiv_gain_novel_examples():
    gain, split = equiv_gain_novel(PairGains(2.0, 1.0, 1.0, 3.0))
    assert math.isclose(gain, 1.6, rel_tol=1e-12)
    assert math.isclose(split.p_s1, 0.8, rel_tol=1e-12)
    assert math.isclose(split.p_s2, 0.05, rel_tol=1e-12)
    assert math.isclose(split.p_r, 0.15, rel_tol=1e-12)

    # no second-slot source link: novel degrades to the benchmark form
    novel = equiv_gain_novel(PairGains(2.0, 1.0, 0.0, 3.0))
    bench = equiv_gain_benchmark(PairGains(2.0, 1.0, 0.0, 3.0))
    assert math.isclose(novel[0], bench[0], rel_tol=1e-12)
    assert math.isclose(novel[1].p_s1, bench[1].p_s1, rel_tol=1e-12)

    # strong direct link dominates: min{5, 2+2} <= 6
    gain, split = equiv_gain_novel(PairGains(5.0, 6.0, 2.0, 2.0))
    assert gain == 5.0
    assert split == PowerSplit(1.0, 0.0, 0.0)


def test_equiv_gain_zero_degenerate():
    for fn in (equiv_gain_novel, equiv_gain_benchmark):
        gain, split = fn(PairGains(0.0, 0.0, 0.0, 0.0))
        assert gain == 0.0
        assert split == PowerSplit(1.0, 0.0, 0.0)


def test_direct_gain():
    assert direct_gain(0.0) == 0.0
    assert direct_gain(2.5) == 2.5
    with pytest.raises(ValueError):
        direct_gain(-1.0)
    # consistency: a relay pair with an unbreakable source-relay link and
    # no second-slot power behaves like the bare direct link
    g, p = 1.7, 0.6
    pair = PairGains(1e12, g, 0.0, 0.0)
    assert math.isclose(
        relay_rate(pair, PowerSplit(p, 0.0, 0.0), ProtocolKind.NOVEL),
        rate_of_snr(direct_gain(g) * p),
        rel_tol=1e-12,
    )


def test_dominance_novel_vs_benchmark_bulk():
    rng = np.random.default_rng(2024)
    gains = random_gain_tuples(rng, 10_000)
    for g_sr, g_su_k, g_su_l, g_ru_l in gains:
        pg = PairGains(g_sr, g_su_k, g_su_l, g_ru_l)
        assert equiv_gain_novel(pg)[0] >= equiv_gain_benchmark(pg)[0]


def test_balance_and_split_feasibility():
    """In the relay-active branch the relay SNR equals the destination SNR."""
    rng = np.random.default_rng(77)
    checked = 0
    for g_sr, g_su_k, g_su_l, g_ru_l in random_gain_tuples(rng, 4000):
        pg = PairGains(g_sr, g_su_k, g_su_l, g_ru_l)
        for protocol, fn in (
            (ProtocolKind.NOVEL, equiv_gain_novel),
            (ProtocolKind.BENCHMARK, equiv_gain_benchmark),
        ):
            gain, split = fn(pg)
            assert split.p_s1 >= 0 and split.p_s2 >= 0 and split.p_r >= 0
            assert math.isclose(split.total, 1.0, rel_tol=1e-12)
            assert gain <= pg.g_sr_k * (1 + 1e-12)  # relay decoding bottleneck
            if split.p_r > 0 or split.p_s2 > 0:  # relay-active branch
                relay_snr = pg.g_sr_k * split.p_s1
                assert math.isclose(relay_snr, mrc_snr(pg, split), rel_tol=1e-12)
                assert math.isclose(relay_snr, gain, rel_tol=1e-12)
                checked += 1
    assert checked > 500  # the sample must actually exercise the branch


def test_closed_forms_match_grid_search():
    """Grid never beats the closed form; closed form never beats the grid
    by more than the grid's resolution error."""
    rng = np.random.default_rng(31)
    gains = random_gain_tuples(rng, 2000)
    g_sr, g_su_k, g_su_l, g_ru_l = gains.T
    grid_n = grid_best_novel(g_sr, g_su_k, g_su_l, g_ru_l)
    grid_b = grid_best_benchmark(g_sr, g_su_k, g_ru_l)
    closed_n = np.array([equiv_gain_novel(PairGains(*t))[0] for t in gains])
    closed_b = np.array([equiv_gain_benchmark(PairGains(*t))[0] for t in gains])
    assert np.all(grid_n <= closed_n + 1e-9)
    assert np.all(grid_b <= closed_b + 1e-9)
    assert np.all(closed_n - grid_n <= 2e-2 * (1.0 + closed_n))
    assert np.all(closed_b - grid_b <= 2e-2 * (1.0 + closed_b))


def test_equiv_gain_table_matches_scalar():
    rng = np.random.default_rng(5)
    channel = ChannelRealization(
        g_sr=rng.exponential(5.0, 4),
        g_su=rng.exponential(1.0, (3, 4)),
        g_ru=rng.exponential(5.0, (3, 4)),
    )
    for protocol in ProtocolKind:
        table = equiv_gain_table(channel, protocol)
        assert table.shape == (3, 4, 4)
        for u in range(3):
            for k in range(4):
                for l in range(4):
                    expected, _ = equiv_gain(pair_gains_of(channel, k, l, u), protocol)
                    assert math.isclose(table[u, k, l], expected, rel_tol=1e-12)
