"""CSV loaders and writers for players, stints, box scores, and betting lines.

All files are UTF-8 CSV with a mandatory header row and ``.`` decimal
separators. Loaders reject malformed input with a line-numbered error and
never return partial tables. Floats are written with ``repr`` so that
write -> load -> write round-trips are byte-identical.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .data_model import BoxScoreTable, PlayerTable, Stint, StintSet, regroup_by_game
from .errors import ParseError, ValidationError

PLAYERS_HEADER = ("player_id", "name")
STINTS_HEADER = (
    "game_id", "weight", "margin",
    "h1", "h2", "h3", "h4", "h5",
    "a1", "a2", "a3", "a4", "a5",
)
LINES_HEADER = ("game_id", "home_line")


@dataclass(frozen=True)
class VegasLines:
    """Published point spreads: game_id -> points by which the home team is favored."""

    lines: dict[int, float]

    def __post_init__(self):
        clean = {int(g): float(v) for g, v in self.lines.items()}
        if any(not math.isfinite(v) for v in clean.values()):
            raise ValidationError("betting lines must be finite")
        object.__setattr__(self, "lines", clean)

    def get(self, game_id: int):
        return self.lines.get(int(game_id))

    def __contains__(self, game_id) -> bool:
        return int(game_id) in self.lines

    def __len__(self) -> int:
        return len(self.lines)


def _fmt(x: float) -> str:
    return repr(float(x))


def _read_rows(path, expected_header):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, expected a header row", path=path, line=1) from None
        if tuple(header) != tuple(expected_header):
            raise ParseError(
                f"bad header {header!r}, expected {list(expected_header)!r}", path=path, line=1
            )
        return list(reader)


def _parse_int(value, what, path, line):
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {value!r}", path=path, line=line) from None


def _parse_float(value, what, path, line):
    try:
        out = float(value)
    except ValueError:
        raise ParseError(f"{what} must be a number, got {value!r}", path=path, line=line) from None
    if not math.isfinite(out):
        raise ParseError(f"{what} must be finite, got {value!r}", path=path, line=line)
    return out


def load_players(path) -> PlayerTable:
    """Read ``player_id,name`` with dense ids 0..p-1 (any row order)."""
    rows = _read_rows(path, PLAYERS_HEADER)
    if not rows:
        raise ParseError("no player rows", path=path, line=2)
    names: dict[int, str] = {}
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", path=path, line=lineno)
        pid = _parse_int(row[0], "player_id", path, lineno)
        if pid in names:
            raise ParseError(f"duplicate player_id {pid}", path=path, line=lineno)
        names[pid] = row[1]
    p = len(names)
    if set(names) != set(range(p)):
        raise ParseError(f"non-dense ids: expected exactly 0..{p - 1}", path=path)
    return PlayerTable(tuple(names[i] for i in range(p)))


def write_players(path, table: PlayerTable) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PLAYERS_HEADER)
        for i, name in enumerate(table.names):
            writer.writerow([i, name])


def load_stints(path, players: PlayerTable) -> StintSet:
    """Read stint rows; rows are stably re-grouped by game_id when interleaved."""
    rows = _read_rows(path, STINTS_HEADER)
    p = players.p
    stints = []
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(STINTS_HEADER):
            raise ParseError(
                f"expected {len(STINTS_HEADER)} fields, got {len(row)}", path=path, line=lineno
            )
        game_id = _parse_int(row[0], "game_id", path, lineno)
        weight = _parse_float(row[1], "weight", path, lineno)
        if weight <= 0:
            raise ParseError(f"weight must be positive, got {weight}", path=path, line=lineno)
        margin = _parse_float(row[2], "margin", path, lineno)
        ids = [_parse_int(v, "player id", path, lineno) for v in row[3:13]]
        if len(set(ids)) != 10:
            raise ParseError("duplicate player within stint", path=path, line=lineno)
        bad = [i for i in ids if i < 0 or i >= p]
        if bad:
            raise ParseError(f"unknown player id {bad[0]} (p={p})", path=path, line=lineno)
        stints.append(Stint(game_id, frozenset(ids[:5]), frozenset(ids[5:]), weight, margin))
    return StintSet(regroup_by_game(stints), players)


def write_stints(path, data: StintSet) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STINTS_HEADER)
        for s in data.stints:
            writer.writerow(
                [s.game_id, _fmt(s.weight), _fmt(s.margin)]
                + sorted(s.home)
                + sorted(s.away)
            )


def load_box_scores(path, players: PlayerTable) -> BoxScoreTable:
    """Read ``player_id,<stat...>``; players without a row get zeros and a warning."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, expected a header row", path=path, line=1) from None
        if not header or header[0] != "player_id" or len(header) < 2:
            raise ParseError(
                "header must be player_id followed by at least one stat name", path=path, line=1
            )
        stat_names = tuple(header[1:])
        d = len(stat_names)
        p = players.p
        matrix = np.zeros((p, d))
        seen: set[int] = set()
        for lineno, row in enumerate(reader, start=2):
            if len(row) != d + 1:
                raise ParseError(f"expected {d + 1} fields, got {len(row)}", path=path, line=lineno)
            pid = _parse_int(row[0], "player_id", path, lineno)
            if pid < 0 or pid >= p:
                raise ParseError(f"unknown player id {pid} (p={p})", path=path, line=lineno)
            if pid in seen:
                raise ParseError(f"duplicate row for player {pid}", path=path, line=lineno)
            seen.add(pid)
            matrix[pid] = [_parse_float(v, stat_names[j], path, lineno) for j, v in enumerate(row[1:])]
    missing = sorted(set(range(p)) - seen)
    if missing:
        warnings.warn(
            f"{len(missing)} player(s) missing from {path}; rows filled with zeros "
            f"(first missing id {missing[0]})",
            stacklevel=2,
        )
    return BoxScoreTable(matrix, stat_names)


def write_box_scores(path, table: BoxScoreTable) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["player_id", *table.stat_names])
        for i in range(table.p):
            writer.writerow([i] + [_fmt(v) for v in table.matrix[i]])


def load_vegas_lines(path) -> VegasLines:
    """Read ``game_id,home_line``; positive lines mean the home team is favored."""
    rows = _read_rows(path, LINES_HEADER)
    lines: dict[int, float] = {}
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", path=path, line=lineno)
        gid = _parse_int(row[0], "game_id", path, lineno)
        if gid in lines:
            raise ParseError(f"duplicate game_id {gid}", path=path, line=lineno)
        lines[gid] = _parse_float(row[1], "home_line", path, lineno)
    return VegasLines(lines)


def write_vegas_lines(path, lines: VegasLines) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LINES_HEADER)
        for gid in lines.lines:
            writer.writerow([gid, _fmt(lines.lines[gid])])
