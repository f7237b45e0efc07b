"""Player ratings from lineup-level outcome data.

A weighted quadratic rate loss plus an l1 sparsity penalty and an l2 pull
toward the affine span of box-score statistics, minimized by cyclical
coordinate descent, tuned by game-partitioned cross-validation, and evaluated
by margin prediction and a threshold betting backtest.
"""

from .ccd import (
    KKT_TOL,
    CcdConfig,
    CcdTrace,
    objective,
    quadratic_loss,
    run_ccd,
    soft_threshold,
    solve_1d_lasso,
)
from .data_model import (
    BoxScoreTable,
    PlayerTable,
    RegPair,
    SprModel,
    Stint,
    StintSet,
    aggregate_box_scores,
    build_design_row,
    inverse_standardize,
    standardize_columns,
)
from .errors import DataError, NumericError, ParseError, SprError, ValidationError
from .estimators import (
    RatingsModel,
    box_rating,
    fit_dummy,
    fit_ridge,
    fit_spr,
    fit_wls,
    load_model,
    poly_expand,
    save_model,
)
from .evaluation import (
    BetLedger,
    GamePrediction,
    MetricsSummary,
    backtest,
    evaluate,
    histogram,
    metrics,
    predict_margin,
    underrated_report,
)
from .ingestion import (
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
from .model_selection import CvResult, cross_validate, default_grid, make_folds
from .synthetic import SyntheticTruth, generate_season, grid_minimize_1d, quadratic_oracle

__version__ = "0.1.0"
