import numpy as np
import pytest

from spr.data_model import BoxScoreTable, PlayerTable, Stint, StintSet


def make_stint(game_id, home, away, weight, margin):
    return Stint(game_id, frozenset(home), frozenset(away), weight, margin)


def tiny_league(n_games=6, stints_per_game=3, p=10, seed=0, noise=0.0):
    """Small hand-rolled league: random lineups from p players, known rates."""
    rng = np.random.default_rng(seed)
    alpha = 0.03
    beta = rng.normal(0.0, 0.02, p)
    beta -= beta.mean()
    stints = []
    for g in range(n_games):
        for _ in range(stints_per_game):
            picks = rng.choice(p, size=10, replace=False)
            home, away = picks[:5], picks[5:]
            w = float(rng.uniform(4, 20))
            rate = alpha + beta[home].sum() - beta[away].sum()
            margin = w * rate + (rng.normal(0, noise * np.sqrt(w)) if noise else 0.0)
            stints.append(make_stint(g, home.tolist(), away.tolist(), w, margin))
    players = PlayerTable(tuple(f"P{i}" for i in range(p)))
    return StintSet(tuple(stints), players), alpha, beta


def random_box(p, d, seed=0):
    rng = np.random.default_rng(seed)
    return BoxScoreTable(rng.uniform(0, 30, (p, d)), tuple(f"s{j}" for j in range(d)))
