"""K-fold cross-validation over the dyadic regularization grid.

Folds partition games (never stints), so lineups from one game cannot leak
between train and test. The (fold, lambda) tasks are independent and may run
on any number of workers; results are keyed and aggregated in a fixed order,
so the output is identical regardless of scheduling. Fits consume no
randomness at all; the only random choice is the fold assignment, which is a
pure function of the seed.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ccd import CcdConfig, quadratic_loss
from .data_model import BoxScoreTable, RegPair, StintSet, standardize_columns
from .errors import SprError, ValidationError
from .estimators import fit_spr

GRID_EXPONENT_MIN = -10
GRID_EXPONENT_MAX = 9  # inclusive; 20 exponents per axis, 400 pairs
DEFAULT_FOLDS = 10


@dataclass(frozen=True, eq=False)
class CvResult:
    """Mean held-out loss per regularization pair, and the winning pair."""

    table: dict[RegPair, float]
    best: RegPair
    folds: int
    seed: int

    def __post_init__(self):
        if self.best not in self.table:
            raise ValidationError("best pair must appear in the table")
        low = min(self.table.values())
        if self.table[self.best] != low:
            raise ValidationError("best pair must attain the table minimum")


def default_grid() -> list[RegPair]:
    """The 20 x 20 dyadic grid {(2^a, 2^b) : a, b in -10..9}, sorted."""
    return dyadic_grid(GRID_EXPONENT_MIN, GRID_EXPONENT_MAX, GRID_EXPONENT_MIN, GRID_EXPONENT_MAX)


def dyadic_grid(a_min: int, a_max: int, b_min: int, b_max: int) -> list[RegPair]:
    """All pairs (2^a, 2^b) with a, b ranging over the given inclusive bounds."""
    for lo, hi in ((a_min, a_max), (b_min, b_max)):
        if lo > hi:
            raise ValidationError("exponent bounds must satisfy min <= max")
        if not (-32 <= lo and hi <= 32):
            raise ValidationError("exponent bounds must lie within [-32, 32]")
    return [
        RegPair(2.0 ** a, 2.0 ** b)
        for a in range(a_min, a_max + 1)
        for b in range(b_min, b_max + 1)
    ]


def make_folds(game_ids, k: int, seed: int) -> list[frozenset[int]]:
    """Partition distinct game ids into K folds whose sizes differ by at most one.

    Deterministic in the seed and independent of the input ordering.
    """
    ids = sorted({int(g) for g in game_ids})
    if k < 2:
        raise ValidationError("need at least two folds")
    if len(ids) < k:
        raise ValidationError(f"need at least {k} distinct games, got {len(ids)}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    chunks = np.array_split(perm, k)
    return [frozenset(ids[i] for i in chunk) for chunk in chunks]


def _score_one(train: StintSet, test: StintSet, box: BoxScoreTable, lam: RegPair, cfg: CcdConfig) -> float:
    model = fit_spr(train, box, lam, cfg=cfg, standardize=False)
    return quadratic_loss(model.alpha_hca, model.beta, test)


def cross_validate(
    data: StintSet,
    box: BoxScoreTable,
    grid,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
    cfg: CcdConfig | None = None,
    jobs: int = 1,
    standardize: bool = True,
) -> CvResult:
    """Mean held-out weighted quadratic loss for every pair in the grid.

    For each fold and pair, fits on the other folds' stints and scores the
    held-out stints; the table entry is the mean across folds. The best pair
    attains the table minimum, ties broken by smallest (lambda1, lambda2).
    Any fold fit failure aborts the whole run with the fold and pair named.
    """
    grid = sorted(set(grid))
    if not grid:
        raise ValidationError("grid must contain at least one pair")
    cfg = cfg or CcdConfig()
    if standardize and not box.is_standardized:
        box = standardize_columns(box)
    folds = make_folds(data.game_ids, k, seed)
    all_games = set(data.game_ids)
    splits = []
    for held_out in folds:
        splits.append((data.subset_games(all_games - held_out), data.subset_games(held_out)))

    scores = np.empty((len(folds), len(grid)))
    tasks = [(fi, li) for fi in range(len(folds)) for li in range(len(grid))]

    def run(task):
        fi, li = task
        train, test = splits[fi]
        lam = grid[li]
        try:
            return fi, li, _score_one(train, test, box, lam, cfg)
        except Exception as exc:
            a, b = math.log2(lam.lambda1) if lam.lambda1 > 0 else float("-inf"), \
                math.log2(lam.lambda2) if lam.lambda2 > 0 else float("-inf")
            msg = f"cv fit failed at fold {fi}, lambda=(2^{a:g}, 2^{b:g}): {exc}"
            raise (type(exc)(msg) if isinstance(exc, SprError) else SprError(msg)) from exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    for fi, li, value in results:
        scores[fi, li] = value

    means = scores.mean(axis=0)
    table = {lam: float(means[li]) for li, lam in enumerate(grid)}
    best_idx = min(range(len(grid)), key=lambda li: (means[li], grid[li]))
    return CvResult(table=table, best=grid[best_idx], folds=k, seed=int(seed))


def exponents_of(lam: RegPair) -> tuple[int, int]:
    """Integer dyadic exponents of a grid pair; errors on non-dyadic values."""
    out = []
    for value in (lam.lambda1, lam.lambda2):
        if value <= 0:
            raise ValidationError("pair is not on a dyadic grid")
        e = math.log2(value)
        if abs(e - round(e)) > 1e-9:
            raise ValidationError(f"{value} is not a power of two")
        out.append(int(round(e)))
    return out[0], out[1]


def write_cv_table(path, result: CvResult) -> None:
    """Export ``lambda1_exp,lambda2_exp,mean_heldout_loss`` rows, sorted by exponents."""
    rows = sorted((exponents_of(lam), loss) for lam, loss in result.table.items())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda1_exp", "lambda2_exp", "mean_heldout_loss"])
        for (a, b), loss in rows:
            writer.writerow([a, b, repr(float(loss))])
