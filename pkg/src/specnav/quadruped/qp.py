"""Dense active-set solver for strictly convex inequality QPs.

    minimize    0.5 x'Hx + g'x
    subject to  Ax <= b

The stance-force problems this serves are small (tens of variables), so
dense linear algebra per iteration is the right trade.  The solver needs
a feasible start; zero force is always feasible for friction-pyramid
constraint sets, and callers pass it when nothing better is available.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-9
LAMBDA_TOL = 1e-9
GRAD_TOL = 1e-7   # reduced-gradient stationarity target, comfortably < 1e-6


@dataclass
class QpResult:
    x: np.ndarray
    lam: np.ndarray            # multipliers, one per constraint row
    objective: float
    status: str                # "optimal" | "infeasible" | "iteration_limit"
    n_iter: int
    active: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def kkt_residual(H: np.ndarray, g: np.ndarray, A: np.ndarray, b: np.ndarray,
                 x: np.ndarray, lam: np.ndarray) -> float:
    """Max violation over stationarity, feasibility, dual sign, and
    complementary slackness.  Zero at an exact KKT point."""
    slack = b - A @ x
    stationarity = H @ x + g + A.T @ lam
    parts = [np.abs(stationarity).max() if stationarity.size else 0.0,
             max(0.0, -slack.min()) if slack.size else 0.0,
             max(0.0, -lam.min()) if lam.size else 0.0,
             np.abs(lam * slack).max() if lam.size else 0.0]
    return float(max(parts))


def _equality_step(H, grad, Aw):
    """Step p minimizing the quadratic on {p : Aw p = 0} and the
    reduced-gradient norm (the stationarity residual on that face).

    QR of Aw' yields a null-space basis that stays valid when working-set
    rows go dependent, which degenerate vertex geometry can produce.
    Termination must test the reduced gradient, not ||p||: with a 1e-6
    control regularizer the Newton step amplifies rounding noise in the
    gradient a million-fold and a step-norm test never settles.
    """
    n = H.shape[0]
    if Aw.shape[0] == 0:
        rg = float(np.abs(grad).max(initial=0.0))
        p = np.linalg.solve(H, -grad)
        return p, rg
    Q, R = np.linalg.qr(Aw.T, mode="complete")
    diag = np.abs(np.diag(R[:min(Aw.shape[0], n)])) if min(Aw.shape) else np.zeros(0)
    rank = int((diag > 1e-12 * max(1.0, diag.max() if diag.size else 1.0)).sum())
    Z = Q[:, rank:]
    if Z.shape[1] == 0:
        return np.zeros(n), 0.0
    zg = Z.T @ grad
    rg = float(np.abs(zg).max(initial=0.0))
    q = np.linalg.solve(Z.T @ H @ Z, -zg)
    return Z @ q, rg


def _multipliers(grad, Aw):
    """Least-squares working-set multipliers at a stationary face point."""
    lam_w, *_ = np.linalg.lstsq(Aw.T, -grad, rcond=None)
    return lam_w


def solve_qp(H: np.ndarray, g: np.ndarray, A: np.ndarray, b: np.ndarray,
             x0: np.ndarray | None = None, max_iter: int | None = None) -> QpResult:
    """Primal active-set iteration from a feasible start.

    A start violating the constraints yields status "infeasible"; the
    force-allocation callers detect truly infeasible problems (demanded
    support exceeding force bounds) before building the QP.
    """
    H = np.asarray(H, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64).reshape(-1, H.shape[0])
    b = np.asarray(b, dtype=np.float64).ravel()
    n, m = H.shape[0], A.shape[0]
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    if max_iter is None:
        max_iter = 10 * (m + n) + 100

    if m and (A @ x - b).max() > FEAS_TOL:
        return QpResult(x, np.zeros(m), _objective(H, g, x), "infeasible", 0)

    work = list(np.flatnonzero(b - A @ x <= FEAS_TOL)) if m else []
    for it in range(1, max_iter + 1):
        grad = H @ x + g
        Aw = A[work] if work else np.zeros((0, n))
        p, rg = _equality_step(H, grad, Aw)

        # tolerances track the gradient magnitude so pathological states
        # (huge tracking errors) cannot churn on rounding noise
        scale = max(1.0, float(np.abs(grad).max(initial=0.0)))
        if rg <= max(GRAD_TOL, 1e-13 * scale):
            lam_w = _multipliers(grad, Aw) if work else np.zeros(0)
            lam_tol = max(LAMBDA_TOL, 1e-13 * scale)
            if lam_w.size == 0 or lam_w.min() >= -lam_tol:
                lam_full = np.zeros(m)
                if work:
                    lam_full[work] = np.maximum(lam_w, 0.0)
                return QpResult(x, lam_full, _objective(H, g, x), "optimal",
                                it, np.asarray(sorted(work), dtype=int))
            # Bland's rule: drop the lowest-index negative multiplier
            # to rule out cycling on degenerate working sets.
            drop = min(w for w, l in zip(work, lam_w) if l < -lam_tol)
            work.remove(drop)
            continue

        slack = b - A @ x if m else np.zeros(0)
        denom = A @ p if m else np.zeros(0)
        alpha, block = 1.0, -1
        for i in range(m):
            if i in work or denom[i] <= 1e-14:
                continue
            step = slack[i] / denom[i]
            if step < alpha - 1e-15:
                alpha, block = step, i
        x = x + max(alpha, 0.0) * p
        if block >= 0:
            work.append(block)
            work.sort()

    return QpResult(x, np.zeros(m), _objective(H, g, x), "iteration_limit",
                    max_iter)


def _objective(H, g, x) -> float:
    return float(0.5 * x @ H @ x + g @ x)
