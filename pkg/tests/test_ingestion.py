import numpy as np
import pytest

from spr.data_model import BoxScoreTable, PlayerTable
from spr.errors import ParseError
from spr.ingestion import (
    VegasLines,
    load_box_scores,
    load_players,
    load_stints,
    load_vegas_lines,
    write_box_scores,
    write_players,
    write_stints,
    write_vegas_lines,
)
from spr.synthetic import generate_season


def write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestPlayers:
    def test_two_rows(self, tmp_path):
        f = write_text(tmp_path / "p.csv", "player_id,name\n0,A\n1,B\n")
        table = load_players(f)
        assert table.p == 2
        assert table.names == ("A", "B")

    def test_gap_in_ids(self, tmp_path):
        f = write_text(tmp_path / "p.csv", "player_id,name\n0,A\n2,B\n")
        with pytest.raises(ParseError, match="non-dense"):
            load_players(f)

    def test_duplicate_id_reports_line(self, tmp_path):
        f = write_text(tmp_path / "p.csv", "player_id,name\n0,A\n0,B\n")
        with pytest.raises(ParseError, match="3"):
            load_players(f)

    def test_bad_header(self, tmp_path):
        f = write_text(tmp_path / "p.csv", "id,name\n0,A\n")
        with pytest.raises(ParseError):
            load_players(f)

    def test_450_row_round_trip(self, tmp_path):
        table = PlayerTable(tuple(f"Player {i}" for i in range(450)))
        f = tmp_path / "p.csv"
        write_players(f, table)
        first = f.read_bytes()
        write_players(f, load_players(f))
        assert f.read_bytes() == first


class TestStints:
    HEADER = "game_id,weight,margin,h1,h2,h3,h4,h5,a1,a2,a3,a4,a5\n"

    def players(self, p=10):
        return PlayerTable(tuple(f"P{i}" for i in range(p)))

    def test_single_row(self, tmp_path):
        f = write_text(tmp_path / "s.csv", self.HEADER + "7,12.0,4,0,1,2,3,4,5,6,7,8,9\n")
        ss = load_stints(f, self.players())
        assert ss.n == 1
        s = ss.stints[0]
        assert s.game_id == 7 and s.margin == 4.0 and s.weight == 12.0
        assert s.home == frozenset(range(5))

    def test_negative_weight(self, tmp_path):
        f = write_text(tmp_path / "s.csv", self.HEADER + "7,-1,4,0,1,2,3,4,5,6,7,8,9\n")
        with pytest.raises(ParseError, match="weight"):
            load_stints(f, self.players())

    def test_duplicate_player_in_row(self, tmp_path):
        f = write_text(tmp_path / "s.csv", self.HEADER + "7,1,4,0,0,2,3,4,5,6,7,8,9\n")
        with pytest.raises(ParseError, match="duplicate"):
            load_stints(f, self.players())

    def test_unknown_id(self, tmp_path):
        f = write_text(tmp_path / "s.csv", self.HEADER + "7,1,4,0,1,2,3,4,5,6,7,8,99\n")
        with pytest.raises(ParseError, match="unknown"):
            load_stints(f, self.players())

    def test_interleaved_games_regrouped(self, tmp_path):
        rows = (
            "1,1.0,1,0,1,2,3,4,5,6,7,8,9\n"
            "2,1.0,2,0,1,2,3,4,5,6,7,8,9\n"
            "1,1.0,3,0,1,2,3,4,5,6,7,8,9\n"
        )
        ss = load_stints(write_text(tmp_path / "s.csv", self.HEADER + rows), self.players())
        assert [s.game_id for s in ss.stints] == [1, 1, 2]
        assert [s.margin for s in ss.stints] == [1.0, 3.0, 2.0]

    def test_synthetic_season_round_trip(self, tmp_path):
        data, _, _, _ = generate_season(
            p=20, d=4, n_games=12, stints_per_game=4, spike_count=2, noise_sd=0.4, seed=2
        )
        f = tmp_path / "s.csv"
        write_stints(f, data)
        loaded = load_stints(f, data.player_table)
        assert loaded.stints == data.stints
        write_stints(tmp_path / "s2.csv", loaded)
        assert (tmp_path / "s2.csv").read_bytes() == f.read_bytes()


class TestBoxScores:
    def test_small_table(self, tmp_path):
        f = write_text(tmp_path / "b.csv", "player_id,reb,ast,pts\n0,1.5,2,3\n1,4,5,6.25\n")
        players = PlayerTable(("A", "B"))
        table = load_box_scores(f, players)
        assert table.stat_names == ("reb", "ast", "pts")
        assert np.array_equal(table.matrix, [[1.5, 2, 3], [4, 5, 6.25]])
        assert not table.is_standardized

    def test_missing_player_zero_filled_with_warning(self, tmp_path):
        f = write_text(tmp_path / "b.csv", "player_id,reb\n0,2.0\n")
        players = PlayerTable(("A", "B"))
        with pytest.warns(UserWarning, match="missing"):
            table = load_box_scores(f, players)
        assert np.array_equal(table.matrix, [[2.0], [0.0]])

    def test_non_numeric_cell(self, tmp_path):
        f = write_text(tmp_path / "b.csv", "player_id,reb\n0,two\n")
        with pytest.raises(ParseError, match="reb"):
            load_box_scores(f, PlayerTable(("A",)))

    def test_round_trip_exact_text(self, tmp_path):
        rng = np.random.default_rng(8)
        table = BoxScoreTable(rng.uniform(0, 30, (25, 5)), tuple(f"s{j}" for j in range(5)))
        players = PlayerTable(tuple(f"P{i}" for i in range(25)))
        f = tmp_path / "b.csv"
        write_box_scores(f, table)
        first = f.read_bytes()
        write_box_scores(f, load_box_scores(f, players))
        assert f.read_bytes() == first


class TestVegasLines:
    def test_single_row(self, tmp_path):
        f = write_text(tmp_path / "v.csv", "game_id,home_line\n3,-2.5\n")
        lines = load_vegas_lines(f)
        assert lines.get(3) == -2.5  # home underdog by 2.5

    def test_duplicate_game(self, tmp_path):
        f = write_text(tmp_path / "v.csv", "game_id,home_line\n3,-2.5\n3,1\n")
        with pytest.raises(ParseError, match="duplicate"):
            load_vegas_lines(f)

    def test_410_entry_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        lines = VegasLines({g: float(rng.normal(0, 6)) for g in range(410)})
        f = tmp_path / "v.csv"
        write_vegas_lines(f, lines)
        first = f.read_bytes()
        loaded = load_vegas_lines(f)
        assert len(loaded) == 410
        write_vegas_lines(f, loaded)
        assert f.read_bytes() == first
