"""Core domain types: players, stints, box-score tables, and fitted parameters.

All types are immutable after construction and safe to share across threads.
Weights are possessions; margins are points (home minus away). Ratings are
kept internally in points per possession and multiplied by 100 only for
display.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
import scipy.sparse as sp

from .errors import DataError, ValidationError

PLAYERS_PER_SIDE = 5


@dataclass(frozen=True)
class PlayerTable:
    """Dense player index -> display name. Index i is player id i."""

    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        if len(self.names) < 1:
            raise ValidationError("player table must contain at least one player")

    @property
    def p(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class Stint:
    """One lineup event: ten players on the floor, a weight, and an observed margin."""

    game_id: int
    home: frozenset[int]
    away: frozenset[int]
    weight: float
    margin: float

    def __post_init__(self):
        object.__setattr__(self, "game_id", int(self.game_id))
        object.__setattr__(self, "home", frozenset(int(i) for i in self.home))
        object.__setattr__(self, "away", frozenset(int(i) for i in self.away))
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "margin", float(self.margin))
        if len(self.home) != PLAYERS_PER_SIDE or len(self.away) != PLAYERS_PER_SIDE:
            raise ValidationError(
                f"a stint needs exactly {PLAYERS_PER_SIDE} home and {PLAYERS_PER_SIDE} away players"
            )
        if self.home & self.away:
            raise ValidationError("home and away rosters overlap")
        if any(i < 0 for i in self.home | self.away):
            raise DataError("negative player index")
        if not (self.weight > 0 and math.isfinite(self.weight)):
            raise ValidationError(f"stint weight must be positive and finite, got {self.weight}")
        if not math.isfinite(self.margin):
            raise ValidationError("stint margin must be finite")

    @property
    def rate(self) -> float:
        """Observed margin per unit weight (points per possession)."""
        return self.margin / self.weight


@dataclass(frozen=True, eq=False)
class StintSet:
    """An ordered collection of stints over one player table.

    Stints of the same game are adjacent; use :func:`regroup_by_game` before
    constructing if the source ordering interleaves games.
    """

    stints: tuple[Stint, ...]
    player_table: PlayerTable

    def __post_init__(self):
        object.__setattr__(self, "stints", tuple(self.stints))
        p = self.player_table.p
        seen_games: set[int] = set()
        prev_game = None
        for s in self.stints:
            if any(i >= p for i in s.home | s.away):
                raise DataError(f"stint references player index >= p={p}")
            if s.game_id != prev_game:
                if s.game_id in seen_games:
                    raise ValidationError(
                        f"stints of game {s.game_id} are not contiguous; regroup before constructing"
                    )
                seen_games.add(s.game_id)
                prev_game = s.game_id

    @property
    def n(self) -> int:
        return len(self.stints)

    @property
    def p(self) -> int:
        return self.player_table.p

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.array([s.weight for s in self.stints], dtype=float)
        w.setflags(write=False)
        return w

    @cached_property
    def margins(self) -> np.ndarray:
        m = np.array([s.margin for s in self.stints], dtype=float)
        m.setflags(write=False)
        return m

    @cached_property
    def rates(self) -> np.ndarray:
        """Regression targets: margin per possession for each stint."""
        y = self.margins / self.weights
        y.setflags(write=False)
        return y

    @cached_property
    def game_ids(self) -> tuple[int, ...]:
        """Distinct game ids in order of first appearance."""
        out: list[int] = []
        prev = None
        for s in self.stints:
            if s.game_id != prev:
                out.append(s.game_id)
                prev = s.game_id
        return tuple(out)

    @cached_property
    def design_matrix(self) -> sp.csr_matrix:
        """Signed lineup indicator matrix: +1 home, -1 away, ten nonzeros per row."""
        n = self.n
        indptr = np.arange(0, 10 * n + 1, 10)
        indices = np.empty(10 * n, dtype=np.int32)
        data = np.empty(10 * n, dtype=float)
        for i, s in enumerate(self.stints):
            lo = 10 * i
            indices[lo:lo + 5] = sorted(s.home)
            indices[lo + 5:lo + 10] = sorted(s.away)
            data[lo:lo + 5] = 1.0
            data[lo + 5:lo + 10] = -1.0
        # csr_matrix wants column indices sorted within each row
        m = sp.csr_matrix((data, indices, indptr), shape=(n, self.p))
        m.sort_indices()
        return m

    def games(self) -> list[tuple[int, tuple[Stint, ...]]]:
        """Stints grouped by game, preserving order."""
        out: list[tuple[int, list[Stint]]] = []
        for s in self.stints:
            if out and out[-1][0] == s.game_id:
                out[-1][1].append(s)
            else:
                out.append((s.game_id, [s]))
        return [(gid, tuple(group)) for gid, group in out]

    def subset_games(self, game_ids) -> "StintSet":
        """Stints belonging to the given games, in the original order."""
        keep = set(int(g) for g in game_ids)
        return StintSet(tuple(s for s in self.stints if s.game_id in keep), self.player_table)

    def floor_weights(self) -> np.ndarray:
        """Total floor weight (possessions played) per player."""
        totals = np.zeros(self.p)
        for s in self.stints:
            for i in s.home | s.away:
                totals[i] += s.weight
        return totals


def regroup_by_game(stints) -> tuple[Stint, ...]:
    """Stable re-grouping: games ordered by first appearance, row order kept within a game."""
    order: dict[int, list[Stint]] = {}
    for s in stints:
        order.setdefault(s.game_id, []).append(s)
    return tuple(s for group in order.values() for s in group)


def build_design_row(stint: Stint, p: int) -> np.ndarray:
    """Dense signed indicator row for one stint: +1 at home indices, -1 at away."""
    if any(i >= p for i in stint.home | stint.away):
        raise DataError(f"player index out of range for p={p}")
    row = np.zeros(p)
    for i in stint.home:
        row[i] = 1.0
    for i in stint.away:
        row[i] = -1.0
    return row


@dataclass(frozen=True, eq=False)
class BoxScoreTable:
    """Per-player aggregate statistics (p x d) with an optional column transform.

    ``standardization`` records per-column (shift, scale) pairs applied to the
    original data (value -> (value - shift) / scale); None means the matrix is
    on its original scale. Columns that were constant at standardization time
    are listed in ``constant_cols`` and carry scale 1.0.
    """

    matrix: np.ndarray
    stat_names: tuple[str, ...]
    standardization: tuple[tuple[float, float], ...] | None = None
    constant_cols: frozenset[int] = frozenset()

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2:
            raise ValidationError("box-score matrix must be two-dimensional")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "stat_names", tuple(str(s) for s in self.stat_names))
        if len(self.stat_names) != m.shape[1]:
            raise ValidationError("stat_names length must match column count")
        if self.standardization is not None:
            std = tuple((float(a), float(b)) for a, b in self.standardization)
            if len(std) != m.shape[1]:
                raise ValidationError("standardization length must match column count")
            if any(scale == 0 for _, scale in std):
                raise ValidationError("standardization scales must be nonzero")
            object.__setattr__(self, "standardization", std)
        object.__setattr__(self, "constant_cols", frozenset(int(c) for c in self.constant_cols))

    @property
    def p(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_standardized(self) -> bool:
        return self.standardization is not None


def aggregate_box_scores(per_game, stat_names=None) -> BoxScoreTable:
    """Entrywise sum of per-game p x d matrices into one season table."""
    mats = [np.asarray(g, dtype=float) for g in per_game]
    if not mats:
        raise ValidationError("need at least one game matrix")
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise ValidationError("game matrices disagree in shape")
    total = np.zeros(shape)
    for m in mats:
        total += m
    if stat_names is None:
        stat_names = tuple(f"stat_{j}" for j in range(shape[1]))
    return BoxScoreTable(total, stat_names)


def standardize_columns(table: BoxScoreTable) -> BoxScoreTable:
    """Shift/scale each column to mean 0, sample standard deviation 1.

    Constant columns become all zeros (scale kept at 1.0) and are flagged so
    downstream reports know no information survived. The transform is recorded
    so fitted weights can be mapped back to the original scale.
    """
    if table.is_standardized:
        raise ValidationError("table is already standardized")
    if table.d < 1:
        raise ValidationError("need at least one column")
    m = table.matrix
    shifts = m.mean(axis=0)
    scales = m.std(axis=0, ddof=1) if table.p > 1 else np.zeros(table.d)
    constant = [j for j in range(table.d) if scales[j] == 0.0]
    scales = np.where(scales == 0.0, 1.0, scales)
    out = (m - shifts) / scales
    return BoxScoreTable(
        out,
        table.stat_names,
        standardization=tuple(zip(shifts.tolist(), scales.tolist())),
        constant_cols=frozenset(constant),
    )


def inverse_standardize(table: BoxScoreTable) -> BoxScoreTable:
    """Undo :func:`standardize_columns`, recovering the original-scale matrix."""
    if not table.is_standardized:
        raise ValidationError("table carries no standardization to invert")
    shifts = np.array([a for a, _ in table.standardization])
    scales = np.array([b for _, b in table.standardization])
    return BoxScoreTable(table.matrix * scales + shifts, table.stat_names)


@dataclass(frozen=True, order=True)
class RegPair:
    """The regularization pair (lambda1, lambda2); ordering breaks ties lexicographically."""

    lambda1: float
    lambda2: float

    def __post_init__(self):
        object.__setattr__(self, "lambda1", float(self.lambda1))
        object.__setattr__(self, "lambda2", float(self.lambda2))
        for v in (self.lambda1, self.lambda2):
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"regularization parameters must be finite and >= 0, got {v}")


@dataclass(frozen=True, eq=False)
class SprModel:
    """Fitted parameters of the subspace-prior regression objective."""

    alpha_hca: float
    beta: np.ndarray
    z0: float
    z: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float).copy()
        z = np.asarray(self.z, dtype=float).copy()
        beta.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "alpha_hca", float(self.alpha_hca))
        object.__setattr__(self, "z0", float(self.z0))
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "z", z)
        if not (
            math.isfinite(self.alpha_hca)
            and math.isfinite(self.z0)
            and np.isfinite(beta).all()
            and np.isfinite(z).all()
        ):
            raise ValidationError("model parameters must be finite")
