"""Batch command-line front end: simulate | fit | cv | evaluate | bet | report.

Every subcommand honors --seed, --out-dir, and --quiet, and identical inputs
always produce byte-identical outputs (all randomness is seed-derived and no
output embeds timestamps). Exit codes: 2 for parse/validation problems, 3 for
numeric failures.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys

from . import evaluation, ingestion, model_selection
from .ccd import CcdConfig
from .data_model import RegPair, standardize_columns
from .errors import DataError, NumericError, ParseError, SprError, ValidationError
from .estimators import (
    PER_100,
    box_rating,
    fit_dummy,
    fit_ridge,
    fit_spr,
    fit_wls,
    load_model,
    save_model,
)
from .synthetic import generate_season

JOBS_ENV_VAR = "SPR_JOBS"


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV_VAR, "1")))
    except ValueError:
        return 1


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _add_common(parser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="seed for any randomized step")
    parser.add_argument("--out-dir", required=True, help="directory for output files")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")


def _add_inputs(parser, box_scores=False, lines=False) -> None:
    parser.add_argument("--stints", required=True, help="stints CSV")
    parser.add_argument("--players", required=True, help="players CSV")
    if box_scores:
        parser.add_argument("--box-scores", required=True, help="box-score CSV")
    if lines:
        parser.add_argument("--lines", required=True, help="betting-lines CSV")


def _add_split(parser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--test-after", type=int, default=None,
                       help="evaluate games after the first N (chronological split)")
    group.add_argument("--game-ids", default=None, help="file with one test game id per line")


def _add_solver(parser) -> None:
    parser.add_argument("--max-sweeps", type=int, default=CcdConfig.max_sweeps)
    parser.add_argument("--rel-tol", type=float, default=CcdConfig.rel_tol)
    parser.add_argument("--no-kkt-check", action="store_true",
                        help="skip the subgradient certificate at convergence")
    parser.add_argument("--no-standardize", action="store_true",
                        help="fit on box-score columns as given, without standardizing")


def _solver_cfg(args) -> CcdConfig:
    return CcdConfig(max_sweeps=args.max_sweeps, rel_tol=args.rel_tol,
                     check_kkt=not args.no_kkt_check)


def _load_inputs(args, box_scores=False):
    players = ingestion.load_players(args.players)
    data = ingestion.load_stints(args.stints, players)
    if box_scores:
        box = ingestion.load_box_scores(args.box_scores, players)
        return players, data, box
    return players, data


def _split_test(args, data):
    if args.test_after is not None:
        ids = data.game_ids[args.test_after:]
        if not ids:
            raise ValidationError(f"no games left after the first {args.test_after}")
        return data.subset_games(ids), data.game_ids[: args.test_after]
    if args.game_ids is not None:
        with open(args.game_ids, encoding="utf-8") as fh:
            ids = [int(line.strip()) for line in fh if line.strip()]
        if not ids:
            raise ValidationError(f"no game ids in {args.game_ids}")
        return data.subset_games(ids), None
    return data, None


def _load_models(args):
    out = []
    for model_dir in args.model_dir:
        label = os.path.basename(os.path.normpath(model_dir))
        out.append((label, load_model(model_dir)))
    return out


def cmd_simulate(args) -> int:
    data, box, lines, truth = generate_season(
        p=args.players,
        d=args.stats,
        n_games=args.games,
        stints_per_game=args.stints_per_game,
        spike_count=args.spikes,
        noise_sd=args.noise_sd,
        seed=args.seed,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    ingestion.write_players(os.path.join(args.out_dir, "players.csv"), data.player_table)
    ingestion.write_stints(os.path.join(args.out_dir, "stints.csv"), data)
    ingestion.write_box_scores(os.path.join(args.out_dir, "box_scores.csv"), box)
    ingestion.write_vegas_lines(os.path.join(args.out_dir, "vegas_lines.csv"), lines)
    with open(os.path.join(args.out_dir, "truth.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["field", "index", "value"])
        writer.writerow(["alpha_star", "", repr(truth.alpha_star)])
        writer.writerow(["z0_star", "", repr(truth.z0_star)])
        for i, b in enumerate(truth.beta_star):
            writer.writerow(["beta_star", i, repr(float(b))])
        for j, z in enumerate(truth.z_star):
            writer.writerow(["z_star", j, repr(float(z))])
        for i in sorted(truth.spike_support):
            writer.writerow(["spike", i, ""])
    _say(args, f"wrote {data.n} stints over {len(data.game_ids)} games to {args.out_dir}")
    return 0


def cmd_fit(args) -> int:
    players, data = _load_inputs(args)
    if args.train_first is not None:
        data = data.subset_games(data.game_ids[: args.train_first])

    if args.estimator == "dummy":
        model = fit_dummy(players.p)
    elif args.estimator == "wls":
        model = fit_wls(data)
    elif args.estimator == "ridge":
        if args.ridge_exp is None:
            raise ValidationError("--ridge-exp is required for the ridge estimator")
        model = fit_ridge(data, 2.0 ** args.ridge_exp)
    else:
        if args.box_scores is None:
            raise ValidationError("--box-scores is required for spr")
        if args.lambda1_exp is None or args.lambda2_exp is None:
            raise ValidationError("--lambda1-exp and --lambda2-exp are required for spr")
        box = ingestion.load_box_scores(args.box_scores, players)
        lam = RegPair(2.0 ** args.lambda1_exp, 2.0 ** args.lambda2_exp)
        model = fit_spr(data, box, lam, cfg=_solver_cfg(args),
                        standardize=not args.no_standardize)

    save_model(args.out_dir, model)
    log_lines = [f"estimator {args.estimator}", f"players {players.p}", f"stints {data.n}"]
    if model.trace is not None:
        log_lines += [
            f"sweeps {model.trace.sweeps_run}",
            f"converged {model.trace.converged}",
            f"final_objective {model.trace.objective_per_sweep[-1]!r}",
            f"kkt_residual {model.trace.kkt_residual!r}",
        ]
    if model.singular:
        log_lines.append("singular_system true (minimum-norm solution returned)")
    with open(os.path.join(args.out_dir, "fit_log.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(log_lines) + "\n")
    for line in log_lines:
        _say(args, line)
    return 0


def cmd_cv(args) -> int:
    players, data, box = _load_inputs(args, box_scores=True)
    if args.train_first is not None:
        data = data.subset_games(data.game_ids[: args.train_first])
    grid = model_selection.dyadic_grid(args.a_min, args.a_max, args.b_min, args.b_max)
    _say(args, f"grid size {len(grid)} over {args.k} folds")
    result = model_selection.cross_validate(
        data, box, grid, k=args.k, seed=args.seed, cfg=_solver_cfg(args),
        jobs=args.jobs, standardize=not args.no_standardize,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    model_selection.write_cv_table(os.path.join(args.out_dir, "cv_table.csv"), result)
    a, b = model_selection.exponents_of(result.best)
    with open(os.path.join(args.out_dir, "cv_best.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda1_exp", "lambda2_exp", "mean_heldout_loss"])
        writer.writerow([a, b, repr(result.table[result.best])])
    _say(args, f"chosen lambda exponents: a={a} b={b}")
    return 0


def cmd_evaluate(args) -> int:
    players, data = _load_inputs(args)
    test, train_ids = _split_test(args, data)
    models = _load_models(args)
    preds = evaluation.evaluate([m for _, m in models], test, train_game_ids=train_ids)
    named = [(label, pred) for (label, _), pred in zip(models, preds)]
    os.makedirs(args.out_dir, exist_ok=True)
    evaluation.write_predictions(os.path.join(args.out_dir, "predictions.csv"), named)
    summaries = [(label, evaluation.metrics(pred)) for label, pred in named]
    evaluation.write_metrics(os.path.join(args.out_dir, "metrics.csv"), summaries)
    bins = [
        (label, evaluation.histogram([p.error for p in pred], args.bin_width))
        for label, pred in named
    ]
    evaluation.write_histogram(os.path.join(args.out_dir, "histogram.csv"), bins)
    for label, m in summaries:
        wrong = "n/a" if m.wrong_winner_pct is None else f"{m.wrong_winner_pct:.2f}%"
        _say(args, f"{label}: wrong winner {wrong}, mean|error| {m.mean_abs_error:.3f} "
                   f"over {m.n_games} games")
    return 0


def cmd_bet(args) -> int:
    players, data = _load_inputs(args)
    test, _ = _split_test(args, data)
    lines = ingestion.load_vegas_lines(args.lines)
    models = _load_models(args)
    preds = evaluation.evaluate([m for _, m in models], test)
    os.makedirs(args.out_dir, exist_ok=True)
    named_rows = []
    ledger_rows = []
    for (label, _), pred in zip(models, preds):
        rows = evaluation.bet_decisions(pred, lines, args.delta)
        named_rows.append((label, rows))
        ledger = evaluation.backtest(pred, lines, args.delta)
        ledger_rows.append((label, ledger))
        pct = "n/a" if ledger.wins + ledger.losses == 0 else f"{ledger.win_pct:.2f}%"
        _say(args, f"{label}: {ledger.bets} bets, {ledger.wins}W-{ledger.losses}L-"
                   f"{ledger.pushes}P, win {pct}, profitable={ledger.profitable}")
    evaluation.write_bets(os.path.join(args.out_dir, "bets.csv"), named_rows)
    with open(os.path.join(args.out_dir, "ledger.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "delta", "bets", "wins", "losses", "pushes", "win_pct", "profitable"])
        for label, ledger in ledger_rows:
            pct = "" if ledger.wins + ledger.losses == 0 else repr(ledger.win_pct)
            writer.writerow([label, repr(ledger.delta), ledger.bets, ledger.wins,
                             ledger.losses, ledger.pushes, pct, ledger.profitable])
    return 0


def cmd_report(args) -> int:
    players, data, box = _load_inputs(args, box_scores=True)
    if not args.no_standardize:
        box = standardize_columns(box)
    label = os.path.basename(os.path.normpath(args.model_dir[0]))
    model = load_model(args.model_dir[0])
    if model.kind != "spr":
        raise ValidationError("the report needs a subspace-prior model bundle")
    floor = data.floor_weights()
    theta = box_rating(model, box)
    eligible = [i for i in range(model.p) if floor[i] >= args.min_weight]
    top_players = sorted(eligible, key=lambda i: (-model.beta[i], i))[: args.top]
    under, over = evaluation.underrated_report(
        model, box, players, floor, min_weight=args.min_weight, top=args.top
    )

    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "ratings.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "player_id", "name", "rating_per100", "floor_weight"])
        for rank, i in enumerate(top_players, start=1):
            writer.writerow([rank, i, players.names[i],
                             repr(float(model.beta[i] * PER_100)), repr(float(floor[i]))])
    for fname, rows in (("underrated.csv", under), ("overrated.csv", over)):
        with open(os.path.join(args.out_dir, fname), "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["player_id", "name", "rating_per100", "box_rating_per100", "gap_per100"])
            for row in rows:
                writer.writerow([row.player_id, row.name, repr(row.rating * PER_100),
                                 repr(row.box_score_rating * PER_100), repr(row.gap * PER_100)])
    extras = model.spr_extras
    with open(os.path.join(args.out_dir, "box_weights.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stat", "weight_std", "weight_original_scale", "per100_original_scale"])
        names = box.stat_names
        for name, zs, zo in zip(names, extras.z, extras.z_original_scale):
            writer.writerow([name, repr(float(zs)), repr(float(zo)), repr(float(zo * PER_100))])

    _say(args, f"top {len(top_players)} players by rating ({label}):")
    for rank, i in enumerate(top_players, start=1):
        _say(args, f"  {rank:2d}. {players.names[i]}  {model.beta[i] * PER_100:+.2f} per 100")
    _say(args, "most underrated (rating minus box-score rating, per 100):")
    for row in under:
        _say(args, f"  {row.name}  {row.gap * PER_100:+.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spr",
        description="Rate players from lineup data and evaluate the ratings against games and spreads.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic season with known truth")
    p.add_argument("--players", type=int, default=60)
    p.add_argument("--stats", type=int, default=10)
    p.add_argument("--games", type=int, default=100)
    p.add_argument("--stints-per-game", type=int, default=6)
    p.add_argument("--spikes", type=int, default=4)
    p.add_argument("--noise-sd", type=float, default=0.5)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit one estimator and save the model bundle")
    _add_inputs(p)
    p.add_argument("--box-scores", default=None, help="box-score CSV (required for spr)")
    p.add_argument("--estimator", choices=("dummy", "wls", "ridge", "spr"), required=True)
    p.add_argument("--lambda1-exp", type=int, default=None, help="a in lambda1 = 2^a")
    p.add_argument("--lambda2-exp", type=int, default=None, help="b in lambda2 = 2^b")
    p.add_argument("--ridge-exp", type=int, default=None, help="a in ridge penalty 2^a")
    p.add_argument("--train-first", type=int, default=None, help="fit on the first N games only")
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cv", help="cross-validate the regularization pair on a dyadic grid")
    _add_inputs(p, box_scores=True)
    p.add_argument("--k", type=int, default=model_selection.DEFAULT_FOLDS)
    p.add_argument("--a-min", type=int, default=model_selection.GRID_EXPONENT_MIN)
    p.add_argument("--a-max", type=int, default=model_selection.GRID_EXPONENT_MAX)
    p.add_argument("--b-min", type=int, default=model_selection.GRID_EXPONENT_MIN)
    p.add_argument("--b-max", type=int, default=model_selection.GRID_EXPONENT_MAX)
    p.add_argument("--train-first", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None,
                   help=f"worker threads (default ${JOBS_ENV_VAR} or 1)")
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("evaluate", help="score saved models on held-out games")
    _add_inputs(p)
    p.add_argument("--model-dir", action="append", required=True,
                   help="model bundle directory (repeatable)")
    p.add_argument("--bin-width", type=float, default=1.0)
    _add_split(p)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bet", help="backtest the threshold betting rule against lines")
    _add_inputs(p, lines=True)
    p.add_argument("--model-dir", action="append", required=True)
    p.add_argument("--delta", type=float, default=evaluation.DEFAULT_BET_DELTA,
                   help="minimum edge versus the line before betting")
    _add_split(p)
    _add_common(p)
    p.set_defaults(func=cmd_bet)

    p = sub.add_parser("report", help="rating, underrated/overrated, and weight tables")
    _add_inputs(p, box_scores=True)
    p.add_argument("--model-dir", action="append", required=True)
    p.add_argument("--min-weight", type=float, default=evaluation.DEFAULT_MIN_WEIGHT,
                   help="eligibility floor: total possessions played")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--no-standardize", action="store_true",
                   help="the model was fit with --no-standardize")
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", None) is None and args.command == "cv":
        args.jobs = _default_jobs()
    try:
        return args.func(args)
    except (ParseError, ValidationError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except SprError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
