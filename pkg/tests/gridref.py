"""Independent grid-search references for the per-pair closed forms.

These never use the closed-form optimal splits or equivalent-gain
expressions under test: they scan the power simplex directly.  The
novel-protocol scan is factorized: for a fixed first-slot power p1 the
destination's beamforming term scales linearly with the remaining power
(1 - p1), so a single grid over the beam split theta = p_s2 / (1 - p1)
covers the whole simplex at the same resolution as a flat scan.
"""

import numpy as np

STEP = 1e-3
_GRID = np.linspace(0.0, 1.0, int(round(1.0 / STEP)) + 1)


def grid_best_benchmark(g_sr, g_su_k, g_ru_l):
    """Best min{relay SNR, destination SNR} over p_s1 + p_r = 1, p_s2 = 0."""
    g_sr = np.atleast_1d(np.asarray(g_sr, dtype=float))
    g_su_k = np.atleast_1d(np.asarray(g_su_k, dtype=float))
    g_ru_l = np.atleast_1d(np.asarray(g_ru_l, dtype=float))
    p1 = _GRID[None, :]
    relay_snr = g_sr[:, None] * p1
    dest_snr = g_su_k[:, None] * p1 + g_ru_l[:, None] * (1.0 - p1)
    return np.minimum(relay_snr, dest_snr).max(axis=1)


def grid_best_novel(g_sr, g_su_k, g_su_l, g_ru_l):
    """Best min{relay SNR, destination SNR} over the full power simplex."""
    g_sr = np.atleast_1d(np.asarray(g_sr, dtype=float))
    g_su_k = np.atleast_1d(np.asarray(g_su_k, dtype=float))
    g_su_l = np.atleast_1d(np.asarray(g_su_l, dtype=float))
    g_ru_l = np.atleast_1d(np.asarray(g_ru_l, dtype=float))
    theta = _GRID[None, :]
    beam = (
        np.sqrt(g_su_l[:, None] * theta) + np.sqrt(g_ru_l[:, None] * (1.0 - theta))
    ) ** 2
    beam_best = beam.max(axis=1)  # per unit second-slot power
    p1 = _GRID[None, :]
    relay_snr = g_sr[:, None] * p1
    dest_snr = g_su_k[:, None] * p1 + beam_best[:, None] * (1.0 - p1)
    return np.minimum(relay_snr, dest_snr).max(axis=1)


def random_gain_tuples(rng, count):
    """Gain tuples spanning several decades, with occasional exact zeros."""
    scales = 10.0 ** rng.uniform(-1.0, 1.0, size=(count, 4))
    gains = scales * rng.exponential(1.0, size=(count, 4))
    zero_mask = rng.random((count, 4)) < 0.03
    gains[zero_mask] = 0.0
    return gains  # columns: g_sr_k, g_su_k, g_su_l, g_ru_l
