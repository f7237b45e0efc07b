"""Game-level evaluation: margin predictions, error metrics, and the betting rule.

Predictions are retrodictive: the realized stints of a test game (lineups and
possession counts) are known, and the model supplies the rate. A roster-based
fallback for truly prospective use lives in :func:`roster_average_prediction`
and is clearly labeled as such.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data_model import BoxScoreTable, PlayerTable, Stint, StintSet
from .errors import ValidationError
from .estimators import PER_100, RatingsModel, box_rating
from .ingestion import VegasLines

# Vigorish makes a spread strategy profitable only above this win percentage.
BREAK_EVEN_WIN_PCT = 52.5

DEFAULT_BET_DELTA = 3.0
DEFAULT_MIN_WEIGHT = 10.0


@dataclass(frozen=True)
class GamePrediction:
    """Predicted and actual home margin for one game; error = predicted - actual."""

    game_id: int
    predicted: float
    actual: float
    error: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "error", self.predicted - self.actual)


@dataclass(frozen=True)
class MetricsSummary:
    """Aggregate quality of one model's game predictions."""

    n_games: int
    wrong_winner_pct: float | None
    mean_abs_error: float
    median_abs_error: float
    rmse: float


@dataclass(frozen=True)
class BetLedger:
    """Outcome counts of the threshold betting rule at one delta."""

    bets: int
    wins: int
    losses: int
    pushes: int
    win_pct: float
    delta: float

    def __post_init__(self):
        if self.bets != self.wins + self.losses + self.pushes:
            raise ValidationError("ledger does not balance: bets != wins + losses + pushes")
        decided = self.wins + self.losses
        expect = 100.0 * self.wins / decided if decided else math.nan
        ok = (math.isnan(self.win_pct) and math.isnan(expect)) or self.win_pct == expect
        if not ok:
            raise ValidationError("win_pct inconsistent with win/loss counts")

    @property
    def profitable(self) -> bool:
        return (not math.isnan(self.win_pct)) and self.win_pct > BREAK_EVEN_WIN_PCT


def predict_margin(model: RatingsModel, game_stints) -> float:
    """Predicted home margin: sum over stints of weight * (alpha + lineup rating sum)."""
    stints = list(game_stints)
    if not stints:
        raise ValidationError("cannot predict a game with no stints")
    if len({s.game_id for s in stints}) != 1:
        raise ValidationError("stints span more than one game")
    total = 0.0
    for s in stints:
        lineup = sum(model.beta[i] for i in s.home) - sum(model.beta[i] for i in s.away)
        total += s.weight * (model.alpha_hca + lineup)
    return total


def roster_average_prediction(model: RatingsModel, home, away, possessions: float) -> float:
    """Prospective fallback: equal-weight top-5 rosters over a set possession count.

    Use only when realized stints are unavailable; retrodictive evaluation
    should always go through :func:`predict_margin`.
    """
    home = list(home)[:5]
    away = list(away)[:5]
    lineup = sum(model.beta[i] for i in home) - sum(model.beta[i] for i in away)
    return possessions * (model.alpha_hca + lineup)


def evaluate(models, test_games: StintSet, train_game_ids=None) -> list[list[GamePrediction]]:
    """Per-model game predictions over a test set.

    The actual margin of a game is the unweighted sum of its stint margins.
    If ``train_game_ids`` is given, overlap with the test games is flagged
    with a warning (the caller owns the split).
    """
    groups = test_games.games()
    if train_game_ids is not None:
        overlap = {gid for gid, _ in groups} & set(train_game_ids)
        if overlap:
            warnings.warn(
                f"{len(overlap)} test game(s) also appear in the training ids "
                f"(e.g. game {min(overlap)})",
                stacklevel=2,
            )
    out = []
    for model in models:
        preds = []
        for gid, stints in groups:
            actual = sum(s.margin for s in stints)
            preds.append(GamePrediction(gid, predict_margin(model, stints), actual))
        out.append(preds)
    return out


def metrics(preds) -> MetricsSummary:
    """Wrong-winner percentage and absolute-error summaries for one prediction list."""
    preds = list(preds)
    if not preds:
        raise ValidationError("need at least one prediction")
    errors = np.array([p.error for p in preds])
    decided = [p for p in preds if p.actual != 0]
    if decided:
        wrong = sum(1 for p in decided if np.sign(p.predicted) != np.sign(p.actual))
        wrong_pct = 100.0 * wrong / len(decided)
    else:
        wrong_pct = None  # every game tied: winner accuracy is undefined
    return MetricsSummary(
        n_games=len(preds),
        wrong_winner_pct=wrong_pct,
        mean_abs_error=float(np.abs(errors).mean()),
        median_abs_error=float(np.median(np.abs(errors))),
        rmse=float(np.sqrt((errors ** 2).mean())),
    )


def histogram(errors, bin_width: float) -> list[tuple[float, int]]:
    """Counts over bins centered on multiples of bin_width (half-up rounding)."""
    if bin_width <= 0:
        raise ValidationError("bin width must be positive")
    errors = np.asarray(list(errors), dtype=float)
    if errors.size == 0:
        return []
    idx = np.floor(errors / bin_width + 0.5).astype(int)
    centers, counts = np.unique(idx, return_counts=True)
    return [(float(c * bin_width), int(n)) for c, n in zip(centers, counts)]


def bet_decisions(preds, lines: VegasLines, delta: float):
    """Per-game decision rows for the threshold rule.

    Bet when the prediction deviates from the line by more than delta, on the
    side the model favors; win when actual and predicted fall on the same side
    of the line; a game landing exactly on the line is a push. Games without
    a line are skipped with a warning.
    """
    if delta < 0:
        raise ValidationError("delta must be nonnegative")
    rows = []
    skipped = 0
    for p in preds:
        line = lines.get(p.game_id)
        if line is None:
            skipped += 1
            rows.append((p, None, "skip", "no_line"))
            continue
        edge = p.predicted - line
        if abs(edge) > delta:
            if p.actual == line:
                outcome = "push"
            elif np.sign(p.actual - line) == np.sign(edge):
                outcome = "win"
            else:
                outcome = "loss"
            rows.append((p, line, "bet_home" if edge > 0 else "bet_away", outcome))
        else:
            rows.append((p, line, "pass", ""))
    if skipped:
        warnings.warn(f"{skipped} game(s) had no betting line and were skipped", stacklevel=2)
    return rows


def backtest(preds, lines: VegasLines, delta: float = DEFAULT_BET_DELTA) -> BetLedger:
    """Run the threshold rule over a prediction list and tally the ledger."""
    wins = losses = pushes = 0
    for _, _, decision, outcome in bet_decisions(preds, lines, delta):
        if decision.startswith("bet"):
            if outcome == "win":
                wins += 1
            elif outcome == "loss":
                losses += 1
            else:
                pushes += 1
    decided = wins + losses
    win_pct = 100.0 * wins / decided if decided else math.nan
    return BetLedger(
        bets=wins + losses + pushes,
        wins=wins,
        losses=losses,
        pushes=pushes,
        win_pct=win_pct,
        delta=float(delta),
    )


@dataclass(frozen=True)
class PlayerGap:
    """One row of the underrated/overrated report."""

    player_id: int
    name: str
    rating: float
    box_score_rating: float
    gap: float  # rating - box_score_rating; positive means underrated


def underrated_report(
    model: RatingsModel,
    box: BoxScoreTable,
    players: PlayerTable,
    floor_weights,
    min_weight: float = DEFAULT_MIN_WEIGHT,
    top: int = 10,
) -> tuple[list[PlayerGap], list[PlayerGap]]:
    """Top players whose floor impact exceeds (or trails) their box-score profile.

    The gap vector is rating minus box-score rating; only players with total
    floor weight of at least ``min_weight`` are eligible. Ties break by player
    index. Returns (underrated, overrated), each sorted strongest first.
    """
    theta = box_rating(model, box)
    gap = model.beta - theta
    floor_weights = np.asarray(floor_weights, dtype=float)
    if floor_weights.shape != (model.p,):
        raise ValidationError("floor_weights must have length p")
    eligible = [i for i in range(model.p) if floor_weights[i] >= min_weight]

    def rows(order):
        out = []
        for i in order[:top]:
            out.append(
                PlayerGap(
                    player_id=i,
                    name=players.names[i],
                    rating=float(model.beta[i]),
                    box_score_rating=float(theta[i]),
                    gap=float(gap[i]),
                )
            )
        return out

    under = sorted(eligible, key=lambda i: (-gap[i], i))
    over = sorted(eligible, key=lambda i: (gap[i], i))
    return rows(under), rows(over)


def write_predictions(path, named_preds) -> None:
    """Export (model, game_id, predicted, actual, error) rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "game_id", "predicted", "actual", "error"])
        for name, preds in named_preds:
            for p in preds:
                writer.writerow([name, p.game_id, repr(p.predicted), repr(p.actual), repr(p.error)])


def write_metrics(path, named_metrics) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["model", "n_games", "wrong_winner_pct", "mean_abs_error", "median_abs_error", "rmse"]
        )
        for name, m in named_metrics:
            wrong = "" if m.wrong_winner_pct is None else repr(m.wrong_winner_pct)
            writer.writerow(
                [name, m.n_games, wrong, repr(m.mean_abs_error), repr(m.median_abs_error), repr(m.rmse)]
            )


def write_histogram(path, named_bins) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "bin_center", "count"])
        for name, bins in named_bins:
            for center, count in bins:
                writer.writerow([name, repr(center), count])


def write_bets(path, named_rows) -> None:
    """Export (game_id, model, line, predicted, actual, decision, outcome) rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["game_id", "model", "line", "predicted", "actual", "decision", "outcome"])
        for name, rows in named_rows:
            for p, line, decision, outcome in rows:
                writer.writerow(
                    [
                        p.game_id,
                        name,
                        "" if line is None else repr(line),
                        repr(p.predicted),
                        repr(p.actual),
                        decision,
                        outcome,
                    ]
                )
