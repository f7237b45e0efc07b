"""The four rating estimators behind one model type, plus box-score ratings.

Every fit returns a :class:`RatingsModel` with a home-court term and a
length-p rating vector in points per possession; reports multiply by 100.
The subspace-prior fit additionally carries the box-score weight vector and
the table it was fit against.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
import math
import os

import numpy as np

from .ccd import CcdConfig, CcdTrace, run_ccd
from .data_model import (
    BoxScoreTable,
    RegPair,
    SprModel,
    StintSet,
    inverse_standardize,
    standardize_columns,
)
from .errors import ParseError, ValidationError

# Fixed 3.5-points-per-100-possessions home edge used by the dummy estimator.
DUMMY_HCA_PER_POSSESSION = 0.035
PER_100 = 100.0

# relative singular-value cutoff shared by the dense solvers
_RCOND = 1e-10

META_FILE = "model_meta.csv"
BETA_FILE = "beta.csv"
Z_FILE = "z.csv"


@dataclass(frozen=True, eq=False)
class SprExtras:
    """Subspace-prior specifics: weight vector on fit-time columns plus the table."""

    z0: float
    z: np.ndarray
    z_original_scale: np.ndarray
    table: BoxScoreTable | None

    def __post_init__(self):
        for name in ("z", "z_original_scale"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True, eq=False)
class RatingsModel:
    """A fitted rating model of any kind behind one common surface."""

    kind: str
    alpha_hca: float
    beta: np.ndarray
    spr_extras: SprExtras | None = None
    singular: bool = False
    trace: CcdTrace | None = None

    def __post_init__(self):
        if self.kind not in ("dummy", "wls", "ridge", "spr"):
            raise ValidationError(f"unknown estimator kind {self.kind!r}")
        if (self.spr_extras is not None) != (self.kind == "spr"):
            raise ValidationError("spr_extras must be present exactly when kind == 'spr'")
        beta = np.asarray(self.beta, dtype=float).copy()
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha_hca", float(self.alpha_hca))

    @property
    def p(self) -> int:
        return self.beta.shape[0]


def fit_dummy(p: int) -> RatingsModel:
    """Every player rated zero; home team wins 3.5 points per 100 possessions."""
    return RatingsModel("dummy", DUMMY_HCA_PER_POSSESSION, np.zeros(p))


def _minnorm_solve(gram: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, bool]:
    """Minimum-norm solution of a symmetric PSD system, flagging rank deficiency."""
    sol, _, rank, _ = np.linalg.lstsq(gram, rhs, rcond=_RCOND)
    return sol, bool(rank < gram.shape[0])


def _normal_system(data: StintSet) -> tuple[np.ndarray, np.ndarray]:
    """Gram matrix and right-hand side of the weighted normal equations on [1 | X]."""
    x = data.design_matrix
    w = data.weights
    y = data.rates
    sum_w = w.sum()
    xtw = x.T.multiply(w)  # p x n sparse
    gram = np.zeros((data.p + 1, data.p + 1))
    gram[0, 0] = 1.0
    wx = np.asarray(xtw.sum(axis=1)).ravel() / sum_w
    gram[0, 1:] = wx
    gram[1:, 0] = wx
    gram[1:, 1:] = (xtw @ x).toarray() / sum_w
    rhs = np.zeros(data.p + 1)
    rhs[0] = (w @ y) / sum_w
    rhs[1:] = (xtw @ y) / sum_w
    return gram, rhs


def fit_wls(data: StintSet) -> RatingsModel:
    """Weighted least squares on (alpha, beta); minimum-norm when lineups are collinear.

    The lineup matrix always has the all-ones rating shift in its null space
    (five +1 and five -1 per row), so the returned beta is the sum-to-zero
    representative of the optimal set.
    """
    if data.n == 0:
        raise ValidationError("need at least one stint")
    gram, rhs = _normal_system(data)
    sol, singular = _minnorm_solve(gram, rhs)
    return RatingsModel("wls", float(sol[0]), sol[1:], singular=singular)


def fit_ridge(data: StintSet, lam: float) -> RatingsModel:
    """Weighted least squares plus lam * ||beta||_2^2 with an unpenalized intercept."""
    if lam < 0 or not math.isfinite(lam):
        raise ValidationError("ridge penalty must be finite and >= 0")
    gram, rhs = _normal_system(data)
    gram[1:, 1:] += lam * np.eye(data.p)
    if lam == 0:
        sol, singular = _minnorm_solve(gram, rhs)
    else:
        sol = np.linalg.solve(gram, rhs)
        singular = False
    return RatingsModel("ridge", float(sol[0]), sol[1:], singular=singular)


def _original_scale_weights(z: np.ndarray, table: BoxScoreTable) -> np.ndarray:
    if not table.is_standardized:
        return np.asarray(z, dtype=float).copy()
    scales = np.array([b for _, b in table.standardization])
    return np.asarray(z) / scales


def fit_spr(
    data: StintSet,
    box: BoxScoreTable,
    lam: RegPair,
    cfg: CcdConfig | None = None,
    standardize: bool = True,
    start: SprModel | None = None,
) -> RatingsModel:
    """Subspace-prior regression via cyclical coordinate descent.

    By default the box-score columns are standardized before fitting so
    lambda2 is comparable across heterogeneous statistics; pass
    ``standardize=False`` to fit on the columns as given.
    """
    table = box
    if standardize and not box.is_standardized:
        table = standardize_columns(box)
    model, trace = run_ccd(data, table, lam, cfg=cfg, start=start)
    extras = SprExtras(
        z0=model.z0,
        z=model.z,
        z_original_scale=_original_scale_weights(model.z, table),
        table=table,
    )
    return RatingsModel("spr", model.alpha_hca, model.beta, spr_extras=extras, trace=trace)


def box_rating(model: RatingsModel, box: BoxScoreTable) -> np.ndarray:
    """Rating implied by box-score production alone: R z + z0 * 1.

    Accepts either the fit-time table or its original-scale counterpart; both
    paths produce identical ratings because the weights are mapped through the
    recorded column transform.
    """
    if model.kind != "spr" or model.spr_extras is None:
        raise ValidationError("box ratings require a subspace-prior fit")
    extras = model.spr_extras
    fit_table = extras.table
    if fit_table is not None and box.stat_names != fit_table.stat_names:
        raise ValidationError("stat names do not match the fit-time table")
    if box.p != model.p:
        raise ValidationError("box table row count does not match the model")
    if box.d != extras.z.shape[0]:
        raise ValidationError("box table column count does not match the model")

    if fit_table is not None and fit_table.is_standardized and not box.is_standardized:
        # original-scale path: map weights and intercept through the transform
        shifts = np.array([a for a, _ in fit_table.standardization])
        scales = np.array([b for _, b in fit_table.standardization])
        if not np.allclose(box.matrix, fit_table.matrix * scales + shifts, atol=1e-9, rtol=0.0):
            raise ValidationError("table values do not match the fit-time table")
        z_orig = extras.z / scales
        z0_orig = extras.z0 - float(shifts @ z_orig)
        return box.matrix @ z_orig + z0_orig
    if fit_table is not None and not np.allclose(
        box.matrix, fit_table.matrix, atol=1e-9, rtol=0.0
    ):
        raise ValidationError("table values do not match the fit-time table")
    return box.matrix @ extras.z + extras.z0


def poly_expand(box: BoxScoreTable) -> BoxScoreTable:
    """Append products of all distinct column pairs (computed on original scale).

    Output columns are the d originals followed by the d*(d-1)/2 products in
    lexicographic (i < j) order, named "<a>*<b>". A standardized input comes
    back restandardized; an original-scale input stays on its original scale.
    """
    if box.d < 2:
        raise ValidationError("need at least two columns to expand")
    base = inverse_standardize(box) if box.is_standardized else box
    m = base.matrix
    d = base.d
    cols = [m]
    names = list(base.stat_names)
    for i in range(d):
        for j in range(i + 1, d):
            cols.append((m[:, i] * m[:, j])[:, None])
            names.append(f"{base.stat_names[i]}*{base.stat_names[j]}")
    expanded = BoxScoreTable(np.hstack(cols), tuple(names))
    return standardize_columns(expanded) if box.is_standardized else expanded


def save_model(out_dir, model: RatingsModel) -> None:
    """Write the CSV bundle: model_meta.csv, beta.csv, and (for spr) z.csv."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, META_FILE), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "alpha", "z0"])
        z0 = repr(model.spr_extras.z0) if model.spr_extras is not None else ""
        writer.writerow([model.kind, repr(model.alpha_hca), z0])
    with open(os.path.join(out_dir, BETA_FILE), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["player_id", "beta"])
        for i, b in enumerate(model.beta):
            writer.writerow([i, repr(float(b))])
    if model.spr_extras is not None:
        extras = model.spr_extras
        names = (
            extras.table.stat_names
            if extras.table is not None
            else tuple(f"stat_{j}" for j in range(extras.z.shape[0]))
        )
        with open(os.path.join(out_dir, Z_FILE), "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["stat", "weight_std", "weight_original_scale"])
            for name, zs, zo in zip(names, extras.z, extras.z_original_scale):
                writer.writerow([name, repr(float(zs)), repr(float(zo))])


def load_model(model_dir) -> RatingsModel:
    """Read a bundle written by :func:`save_model`.

    The fit-time box table is not part of the bundle, so box ratings computed
    from a loaded model expect the table in the same state it had at fit time.
    """
    meta_path = os.path.join(model_dir, META_FILE)
    with open(meta_path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) != 2 or rows[0] != ["kind", "alpha", "z0"]:
        raise ParseError("bad model_meta.csv", path=meta_path)
    kind, alpha_s, z0_s = rows[1]

    beta_path = os.path.join(model_dir, BETA_FILE)
    with open(beta_path, encoding="utf-8", newline="") as fh:
        brows = list(csv.reader(fh))
    if not brows or brows[0] != ["player_id", "beta"]:
        raise ParseError("bad beta.csv header", path=beta_path)
    beta = np.empty(len(brows) - 1)
    for lineno, row in enumerate(brows[1:], start=2):
        idx = int(row[0])
        if idx != lineno - 2:
            raise ParseError("player ids must be dense and ordered", path=beta_path, line=lineno)
        beta[idx] = float(row[1])

    extras = None
    if kind == "spr":
        z_path = os.path.join(model_dir, Z_FILE)
        with open(z_path, encoding="utf-8", newline="") as fh:
            zrows = list(csv.reader(fh))
        if not zrows or zrows[0] != ["stat", "weight_std", "weight_original_scale"]:
            raise ParseError("bad z.csv header", path=z_path)
        z = np.array([float(r[1]) for r in zrows[1:]])
        z_orig = np.array([float(r[2]) for r in zrows[1:]])
        extras = SprExtras(z0=float(z0_s), z=z, z_original_scale=z_orig, table=None)
    return RatingsModel(kind, float(alpha_s), beta, spr_extras=extras)
