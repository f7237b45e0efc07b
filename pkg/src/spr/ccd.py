"""Cyclical coordinate descent for the subspace-prior rating objective.

The objective being minimized is

    g(alpha, beta, z0, z) = (1/sum w) * sum_i w_i (y_i - alpha - x_i' beta)^2
                            + lambda1 * ||beta||_1
                            + lambda2 * ||beta - z0*1 - R z||_2^2

where y_i is the stint margin rate (points per possession), x_i the signed
lineup indicator row, R the box-score table, and (lambda1, lambda2) the
regularization pair. Every coordinate update below is an exact one-variable
minimizer, so the objective never increases; the whole problem is convex, so
any run converges to a global minimum value.

Each sweep cycles alpha, z0, beta_1..beta_p, then the z block. The z block is
updated by its closed-form least-squares solution (minimum-norm when R'R is
singular), which jointly minimizes over z and therefore can only help
monotonicity. The beta sweep runs in a compiled kernel that keeps the
weighted residual vector incrementally updated, O(nnz) per full pass.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .data_model import BoxScoreTable, RegPair, SprModel, StintSet
from .errors import NumericError, ValidationError

# Coordinatewise subgradient tolerance certifying optimality at convergence.
KKT_TOL = 1e-6
# Relative singular-value cutoff for the minimum-norm z update.
RANK_TOL = 1e-10


@dataclass(frozen=True)
class CcdConfig:
    """Stopping controls for the solver.

    The solver stops at ``max_sweeps`` or once the relative objective decrease
    over one sweep falls below ``rel_tol``. With ``check_kkt`` set, the
    objective criterion alone is not enough: the coordinatewise subgradient
    residual must also be below ``KKT_TOL`` before the fit reports convergence.
    """

    max_sweeps: int = 10_000
    rel_tol: float = 1e-8
    check_kkt: bool = True

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValidationError("max_sweeps must be >= 1")
        if not (0 < self.rel_tol < 1):
            raise ValidationError("rel_tol must lie strictly between 0 and 1")


@dataclass
class CcdTrace:
    """Diagnostic record of one solver run."""

    objective_per_sweep: list[float]
    sweeps_run: int
    converged: bool
    kkt_residual: float


def soft_threshold(tau, x):
    """Shrink x toward zero by tau: 0 inside [-tau, tau], else move |x| down by tau."""
    if np.any(np.asarray(tau) < 0):
        raise ValidationError("soft-threshold parameter must be nonnegative")
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def solve_1d_lasso(a, b, tau):
    """Minimizer of (1/2) a x^2 - b x + tau |x| for a > 0: soft_threshold(tau, b) / a."""
    if a <= 0:
        raise ValidationError("quadratic coefficient must be positive")
    return soft_threshold(tau, b) / a


def quadratic_loss(alpha, beta, data: StintSet) -> float:
    """Weighted mean squared rate error: (1/sum w) * sum_i w_i (y_i - alpha - x_i' beta)^2."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.p,):
        raise ValidationError(f"beta must have length p={data.p}")
    if data.n == 0:
        raise ValidationError("need at least one stint")
    w = data.weights
    r = data.rates - alpha - data.design_matrix @ beta
    return float((w @ (r * r)) / w.sum())


def objective(model: SprModel, data: StintSet, box: BoxScoreTable, lam: RegPair) -> float:
    """Full objective at the given parameters."""
    if box.p != data.p or model.z.shape != (box.d,):
        raise ValidationError("dimension mismatch between model, stints, and box table")
    loss = quadratic_loss(model.alpha_hca, model.beta, data)
    prior = model.beta - model.z0 - box.matrix @ model.z
    return float(
        loss
        + lam.lambda1 * np.abs(model.beta).sum()
        + lam.lambda2 * (prior @ prior)
    )


@njit(cache=True, nogil=True)
def _beta_sweep(indptr, indices, signs, w, resid, beta, theta, wxx, c, lam1, lam2):
    """One cyclic pass over all beta coordinates; updates beta and resid in place."""
    for k in range(beta.shape[0]):
        a = c * wxx[k] + 2.0 * lam2
        if a <= 0.0:
            # player never on floor with lam2 == 0: coordinate has no effect, leave it
            continue
        lo = indptr[k]
        hi = indptr[k + 1]
        s = 0.0
        for t in range(lo, hi):
            s += w[indices[t]] * signs[t] * resid[indices[t]]
        b_old = beta[k]
        b = c * (s + wxx[k] * b_old) + 2.0 * lam2 * theta[k]
        if b > lam1:
            b_new = (b - lam1) / a
        elif b < -lam1:
            b_new = (b + lam1) / a
        else:
            b_new = 0.0
        if b_new != b_old:
            delta = b_new - b_old
            for t in range(lo, hi):
                resid[indices[t]] -= signs[t] * delta
            beta[k] = b_new


@njit(cache=True, nogil=True)
def _beta_kkt(indptr, indices, signs, w, resid, beta, theta, wxx, c, lam1, lam2):
    """Worst coordinatewise subgradient violation over the beta block."""
    worst = 0.0
    for k in range(beta.shape[0]):
        a = c * wxx[k] + 2.0 * lam2
        if a <= 0.0:
            continue
        lo = indptr[k]
        hi = indptr[k + 1]
        s = 0.0
        for t in range(lo, hi):
            s += w[indices[t]] * signs[t] * resid[indices[t]]
        b = c * (s + wxx[k] * beta[k]) + 2.0 * lam2 * theta[k]
        if beta[k] != 0.0:
            sign = 1.0 if beta[k] > 0 else -1.0
            v = abs(a * beta[k] - b + lam1 * sign) / (1.0 + abs(b))
        else:
            v = abs(b) - lam1
            if v < 0.0:
                v = 0.0
        if v > worst:
            worst = v
    return worst


class CcdState:
    """Mutable working state of one solver run.

    Holds the data in solver form (CSC lineup arrays, SVD factors of the box
    table) together with the current iterate and its residual vector. The
    ``update_*`` functions below mutate a state in place, each performing one
    exact coordinate(-block) minimization.
    """

    def __init__(self, data: StintSet, box: BoxScoreTable, lam: RegPair, start: SprModel | None = None):
        if box.p != data.p:
            raise ValidationError(f"box table has {box.p} rows but data has p={data.p}")
        if data.n == 0 or data.weights.sum() <= 0:
            raise ValidationError("need stints with positive total weight")
        self.data = data
        self.box = box
        self.lam = lam
        self.y = data.rates
        self.w = data.weights
        self.sum_w = float(self.w.sum())
        self.c = 2.0 / self.sum_w
        self.X = data.design_matrix
        xc = self.X.tocsc()
        self.indptr = xc.indptr
        self.indices = xc.indices
        self.signs = xc.data
        # total floor weight per player: sum_i w_i x_ik^2
        self.wxx = np.zeros(data.p)
        for k in range(data.p):
            lo, hi = self.indptr[k], self.indptr[k + 1]
            self.wxx[k] = self.w[self.indices[lo:hi]].sum()
        self.R = box.matrix
        u, s, vt = np.linalg.svd(self.R, full_matrices=False)
        keep = s > (RANK_TOL * s[0] if s.size and s[0] > 0 else np.inf)
        self._svd_u = u[:, keep]
        self._svd_inv_s = 1.0 / s[keep]
        self._svd_v = vt[keep].T
        self.rank_deficient = bool(keep.sum() < min(self.R.shape))

        if start is None:
            self.alpha = 0.0
            self.z0 = 0.0
            self.beta = np.zeros(data.p)
            self.z = np.zeros(box.d)
        else:
            if start.beta.shape != (data.p,) or start.z.shape != (box.d,):
                raise ValidationError("warm start has wrong dimensions")
            self.alpha = float(start.alpha_hca)
            self.z0 = float(start.z0)
            self.beta = start.beta.copy()
            self.z = start.z.copy()
        self.Rz = self.R @ self.z
        self.resid = np.asarray(self.y - self.alpha - self.X @ self.beta)

        pinned = int(np.count_nonzero(self.wxx == 0.0))
        if pinned and lam.lambda2 == 0.0:
            warnings.warn(
                f"{pinned} player(s) never on the floor with lambda2=0; their ratings stay pinned at 0",
                stacklevel=3,
            )

    def refresh_residual(self) -> None:
        """Recompute the residual from scratch, clearing incremental drift."""
        self.resid = np.asarray(self.y - self.alpha - self.X @ self.beta)

    def theta(self) -> np.ndarray:
        """Current box-score rating z0 + R z, the pull target for each beta_k."""
        return self.z0 + self.Rz

    def objective(self) -> float:
        loss = float((self.w @ (self.resid * self.resid)) / self.sum_w)
        prior = self.beta - self.z0 - self.Rz
        return (
            loss
            + self.lam.lambda1 * float(np.abs(self.beta).sum())
            + self.lam.lambda2 * float(prior @ prior)
        )

    def model(self) -> SprModel:
        return SprModel(self.alpha, self.beta, self.z0, self.z)

    def kkt_residual(self) -> float:
        return float(
            _beta_kkt(
                self.indptr, self.indices, self.signs, self.w, self.resid,
                self.beta, self.theta(), self.wxx, self.c,
                self.lam.lambda1, self.lam.lambda2,
            )
        )


def update_alpha(state: CcdState) -> float:
    """Exact minimizer in alpha: the weighted mean of (y - X beta)."""
    delta = float((state.w @ state.resid) / state.sum_w)
    state.alpha += delta
    state.resid -= delta
    return state.alpha


def update_z0(state: CcdState) -> float:
    """Exact minimizer in z0: the mean of (beta - R z)."""
    state.z0 = float((state.beta - state.Rz).mean())
    return state.z0


def update_z(state: CcdState) -> np.ndarray:
    """Least-squares update of the z block: argmin ||beta - z0*1 - R z||_2.

    Computed through the cached SVD of R; singular directions are dropped at
    a relative tolerance of RANK_TOL, which yields the minimum-norm solution.
    """
    target = state.beta - state.z0
    state.z = state._svd_v @ (state._svd_inv_s * (state._svd_u.T @ target))
    state.Rz = state.R @ state.z
    return state.z


def update_beta_k(state: CcdState, k: int) -> float:
    """Exact minimizer in the single coordinate beta_k (soft-thresholded update).

    Reference implementation of the compiled sweep kernel: accumulation order
    matches the kernel exactly, so a full pass of these equals one kernel sweep
    bit for bit.
    """
    lam1, lam2 = state.lam.lambda1, state.lam.lambda2
    a = state.c * state.wxx[k] + 2.0 * lam2
    if a <= 0.0:
        return float(state.beta[k])
    lo, hi = state.indptr[k], state.indptr[k + 1]
    rows = state.indices[lo:hi]
    signs = state.signs[lo:hi]
    s = 0.0
    for row, sign in zip(rows, signs):
        s += state.w[row] * sign * state.resid[row]
    b_old = state.beta[k]
    b = state.c * (s + state.wxx[k] * b_old) + 2.0 * lam2 * float(state.theta()[k])
    if b > lam1:
        b_new = (b - lam1) / a
    elif b < -lam1:
        b_new = (b + lam1) / a
    else:
        b_new = 0.0
    if b_new != b_old:
        delta = b_new - b_old
        for row, sign in zip(rows, signs):
            state.resid[row] -= sign * delta
        state.beta[k] = b_new
    return b_new


def sweep_beta(state: CcdState) -> None:
    """One full cyclic pass over beta_1..beta_p (compiled kernel)."""
    _beta_sweep(
        state.indptr, state.indices, state.signs, state.w, state.resid,
        state.beta, state.theta(), state.wxx, state.c,
        state.lam.lambda1, state.lam.lambda2,
    )


def run_ccd(
    data: StintSet,
    box: BoxScoreTable,
    lam: RegPair,
    cfg: CcdConfig | None = None,
    start: SprModel | None = None,
) -> tuple[SprModel, CcdTrace]:
    """Minimize the objective by cyclical coordinate descent.

    Variables start at zero (or at ``start`` for warm starts) and each sweep
    cycles alpha, z0, beta_1..beta_p, and the z block. The run stops at
    ``cfg.max_sweeps`` or once the relative per-sweep objective decrease falls
    below ``cfg.rel_tol`` (and, with ``cfg.check_kkt``, the subgradient
    residual is below KKT_TOL). The trace records the objective after every
    sweep and the final subgradient residual.
    """
    cfg = cfg or CcdConfig()
    state = CcdState(data, box, lam, start=start)

    g_prev = state.objective()
    if not math.isfinite(g_prev):
        raise NumericError("initial objective is not finite; input data is corrupt")

    objective_per_sweep: list[float] = []
    converged = False
    kkt = None
    sweeps = 0
    for _ in range(cfg.max_sweeps):
        sweeps += 1
        update_alpha(state)
        update_z0(state)
        sweep_beta(state)
        update_z(state)
        state.refresh_residual()
        g = state.objective()
        if not math.isfinite(g):
            raise NumericError(f"objective became non-finite at sweep {sweeps}")
        objective_per_sweep.append(g)
        rel_decrease = (g_prev - g) / max(abs(g_prev), 1e-300)
        stalled = g == g_prev
        g_prev = g
        if rel_decrease < cfg.rel_tol:
            kkt = state.kkt_residual()
            if not cfg.check_kkt or kkt <= KKT_TOL:
                converged = True
                break
            if stalled:
                # numeric floor: no sweep changes anything anymore
                break
    if kkt is None:
        kkt = state.kkt_residual()

    trace = CcdTrace(
        objective_per_sweep=objective_per_sweep,
        sweeps_run=sweeps,
        converged=converged,
        kkt_residual=kkt,
    )
    return state.model(), trace
