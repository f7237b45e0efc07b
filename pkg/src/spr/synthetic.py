"""Seeded synthetic league generator plus the brute-force oracles used in tests.

The generator draws a ground-truth rating vector that lies in the affine span
of a random box-score table except for a handful of planted "star" spikes,
then simulates stint margins from the linear rate model. Every draw comes
from one seeded generator, so identical seeds give bit-identical seasons.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .data_model import (
    BoxScoreTable,
    PlayerTable,
    RegPair,
    SprModel,
    Stint,
    StintSet,
)
from .errors import ValidationError
from .ingestion import VegasLines

# hard limits for the dense joint solve; it is O((p+d)^3)
ORACLE_MAX_P = 50
ORACLE_MAX_N = 2000

LINE_NOISE_SD = 2.0


@dataclass(frozen=True, eq=False)
class SyntheticTruth:
    """Ground-truth parameters behind a generated season."""

    alpha_star: float
    beta_star: np.ndarray
    z0_star: float
    z_star: np.ndarray
    spike_support: frozenset[int]
    noise_sd: float
    seed: int


def generate_season(
    p: int,
    d: int,
    n_games: int,
    stints_per_game: int,
    spike_count: int,
    noise_sd: float,
    seed: int,
) -> tuple[StintSet, BoxScoreTable, VegasLines, SyntheticTruth]:
    """Simulate a league season with known parameters.

    The truth satisfies beta* = z0*·1 + R z* + s with s nonzero only on the
    spiked players (magnitudes at least 3x the typical subspace rating), and
    beta* is centered so the minimum-norm least-squares fit can recover it
    exactly when the noise is zero. Stint margins are w_i * rate_i plus noise
    scaled by sqrt(w_i); synthetic lines are the true expected game margins
    plus Normal(0, 2) noise.
    """
    if p < 10:
        raise ValidationError("need at least 10 players to fill a stint")
    if not (0 <= spike_count <= p):
        raise ValidationError("spike_count must lie in [0, p]")
    if d < 1 or n_games < 1 or stints_per_game < 1:
        raise ValidationError("d, n_games, and stints_per_game must be positive")
    if noise_sd < 0:
        raise ValidationError("noise_sd must be nonnegative")

    rng = np.random.default_rng(seed)
    players = PlayerTable(tuple(f"Player {i:03d}" for i in range(p)))

    # box-score table with heterogeneous column scales, all entries nonnegative
    col_center = rng.uniform(5.0, 50.0, size=d)
    col_spread = rng.uniform(1.0, 10.0, size=d)
    matrix = np.maximum(rng.normal(col_center, col_spread, size=(p, d)), 0.0)
    box = BoxScoreTable(matrix, tuple(f"stat_{j}" for j in range(d)))

    # subspace part of the truth, rescaled to a realistic rating spread
    z_raw = rng.normal(0.0, 1.0, size=d)
    subspace = matrix @ z_raw
    spread = subspace.std()
    scale = 0.02 / spread if spread > 0 else 0.0
    z_star = z_raw * scale
    subspace = matrix @ z_star

    spikes = np.zeros(p)
    support = rng.choice(p, size=spike_count, replace=False) if spike_count else np.array([], dtype=int)
    if spike_count:
        # size spikes off the centered subspace spread; the raw offset of R z*
        # is gauge that z0* absorbs and would exaggerate the stars
        centered = np.abs(subspace - subspace.mean()).mean()
        typical = centered if centered > 0 else 0.02
        magnitude = rng.uniform(3.0, 5.0, size=spike_count) * typical
        spikes[support] = magnitude * rng.choice([-1.0, 1.0], size=spike_count)

    # center beta* through z0* so the sum-to-zero representative is the truth
    z0_star = float(-(subspace + spikes).mean())
    beta_star = z0_star + subspace + spikes
    alpha_star = float(rng.uniform(0.02, 0.05))

    pool = min(10, p // 2)
    stints: list[Stint] = []
    game_margins = np.zeros(n_games)
    for g in range(n_games):
        perm = rng.permutation(p)
        home_pool, away_pool = perm[:pool], perm[pool:2 * pool]
        for _ in range(stints_per_game):
            home = rng.choice(home_pool, size=5, replace=False)
            away = rng.choice(away_pool, size=5, replace=False)
            weight = float(rng.uniform(5.0, 25.0))
            rate = alpha_star + beta_star[home].sum() - beta_star[away].sum()
            margin = weight * rate
            game_margins[g] += margin
            if noise_sd > 0:
                margin += float(rng.normal(0.0, noise_sd * math.sqrt(weight)))
            stints.append(Stint(g, frozenset(home.tolist()), frozenset(away.tolist()), weight, margin))

    lines = VegasLines({
        g: float(game_margins[g] + rng.normal(0.0, LINE_NOISE_SD)) for g in range(n_games)
    })

    truth = SyntheticTruth(
        alpha_star=alpha_star,
        beta_star=beta_star,
        z0_star=z0_star,
        z_star=z_star,
        spike_support=frozenset(int(i) for i in support),
        noise_sd=float(noise_sd),
        seed=int(seed),
    )
    return StintSet(tuple(stints), players), box, lines, truth


def quadratic_oracle(data: StintSet, box: BoxScoreTable, lam2: float) -> SprModel:
    """Closed-form joint minimizer of the objective with lambda1 = 0.

    Solves the stacked stationarity system over (alpha, beta, z0, z) by a
    dense minimum-norm least-squares solve. Intentionally independent of the
    coordinate-descent path; used to certify it. Refuses large problems.
    """
    p, d, n = data.p, box.d, data.n
    if p > ORACLE_MAX_P or n > ORACLE_MAX_N:
        raise ValidationError(
            f"oracle limited to p<={ORACLE_MAX_P}, n<={ORACLE_MAX_N} (got p={p}, n={n})"
        )
    if box.p != p:
        raise ValidationError("box table row count must match p")
    lam2 = float(lam2)
    if lam2 < 0:
        raise ValidationError("lambda2 must be nonnegative")

    X = data.design_matrix.toarray()
    w = data.weights
    y = data.rates
    r_mat = box.matrix
    sum_w = w.sum()
    ones_p = np.ones(p)

    m = 2 + p + d  # order: alpha, beta (p), z0, z (d)
    h = np.zeros((m, m))
    rhs = np.zeros(m)

    xtw = X.T * w  # p x n
    h[0, 0] = 1.0  # = (1'W1)/sum_w
    h[0, 1:1 + p] = (w @ X) / sum_w
    h[1:1 + p, 0] = h[0, 1:1 + p]
    h[1:1 + p, 1:1 + p] = (xtw @ X) / sum_w + lam2 * np.eye(p)
    h[1:1 + p, 1 + p] = -lam2 * ones_p
    h[1:1 + p, 2 + p:] = -lam2 * r_mat
    h[1 + p, 1:1 + p] = -lam2 * ones_p
    h[1 + p, 1 + p] = lam2 * p
    h[1 + p, 2 + p:] = lam2 * (ones_p @ r_mat)
    h[2 + p:, 1:1 + p] = -lam2 * r_mat.T
    h[2 + p:, 1 + p] = lam2 * (r_mat.T @ ones_p)
    h[2 + p:, 2 + p:] = lam2 * (r_mat.T @ r_mat)
    rhs[0] = (w @ y) / sum_w
    rhs[1:1 + p] = (xtw @ y) / sum_w

    sol, *_ = np.linalg.lstsq(h, rhs, rcond=1e-12)
    return SprModel(
        alpha_hca=float(sol[0]),
        beta=sol[1:1 + p],
        z0=float(sol[1 + p]),
        z=sol[2 + p:],
    )


def grid_minimize_1d(f, lo: float, hi: float, step: float) -> float:
    """Argmin of f over the grid lo, lo+step, ...; ties go to the smallest x.

    f gets the whole grid as one array when it can handle that (fast path for
    fine grids); otherwise it is evaluated point by point.
    """
    if not (lo < hi):
        raise ValidationError("need lo < hi")
    if step <= 0:
        raise ValidationError("step must be positive")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    xs = lo + step * np.arange(count)
    try:
        vals = np.asarray(f(xs), dtype=float)
        if vals.shape != xs.shape:
            raise TypeError
    except Exception:
        vals = np.array([f(x) for x in xs], dtype=float)
    return float(xs[int(np.argmin(vals))])
