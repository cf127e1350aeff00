"""Constrained least squares: min ||M theta||^2 with the last entry of
theta fixed to 1 and selected entries bounded below by tau.

The fixed coordinate is eliminated up front (its column moves to the
right-hand side), leaving a lower-bound-constrained least-squares problem
that a primal active-set method solves exactly: at each step the working
set pins some constrained coordinates at tau and an ordinary least-squares
solve (min-norm under rank deficiency) handles the rest. Because the
minimizer set can be a whole face of the feasible box whenever M has a
feasible null space, a second active-set pass then picks the
minimum-Euclidean-norm point of the optimal face, which makes results
deterministic and platform-independent. KKT conditions are checked before
returning.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-12
KKT_TOL = 1e-8


@dataclass(frozen=True)
class CLSProblem:
    """min ||matrix @ theta||^2 over {theta[-1] = 1, theta[j] >= tau for
    j in constrained}. Indices are 0-based positions into theta; the fixed
    last position may not be constrained."""

    matrix: np.ndarray
    constrained: tuple[int, ...]
    tau: float

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 2:
            raise ValueError(f"matrix must be (m, L) with m >= 1, L >= 2, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("matrix has non-finite entries")
        object.__setattr__(self, "matrix", mat)
        L = mat.shape[1]
        idx = tuple(sorted(set(int(j) for j in self.constrained)))
        if any(j < 0 or j >= L - 1 for j in idx):
            raise ValueError(
                f"constrained indices must lie in [0, {L - 2}] "
                f"(the fixed last coordinate cannot be constrained), got {idx}"
            )
        object.__setattr__(self, "constrained", idx)
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class CLSSolution:
    theta: np.ndarray
    residual: float
    active: tuple[int, ...]
    iterations: int
    status: str


def _lstsq(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    if A.shape[1] == 0:
        return np.zeros(0)
    return np.linalg.lstsq(A, b, rcond=None)[0]


def _step_to_feasible(phi, cand, constrained, tau):
    """Largest step from phi toward cand keeping constrained coords >= tau;
    returns (new phi, indices that hit the bound)."""
    lam = 1.0
    for j in constrained:
        if cand[j] < tau - FEAS_TOL and phi[j] > cand[j]:
            lam = min(lam, (phi[j] - tau) / (phi[j] - cand[j]))
    lam = max(lam, 0.0)
    new = phi + lam * (cand - phi)
    hit = [j for j in constrained if new[j] <= tau + FEAS_TOL]
    for j in hit:
        new[j] = tau
    return new, hit


def solve_cls(problem: CLSProblem) -> CLSSolution:
    """Exact minimizer of the constrained least-squares problem.

    On a non-unique optimum the returned theta is the minimum-norm point of
    the optimal face. The iteration budget is 10 L working-set changes
    across both passes; if it runs out the best feasible iterate so far is
    returned with status "iteration_cap" (never observed on nondegenerate
    data).
    """
    M = problem.matrix
    L = problem.dim
    d = L - 1
    A = M[:, :d]
    b = -M[:, d]
    con = list(problem.constrained)
    con_set = set(con)
    tau = problem.tau
    max_iter = 10 * L

    scale = max(1.0, float(np.abs(A.T @ b).max(initial=0.0)))
    release_tol = 1e-11 * scale

    phi = np.zeros(d)
    phi[con] = tau
    working = set(con)
    iterations = 0
    best_phi, best_obj = phi.copy(), float(np.sum((A @ phi - b) ** 2))
    status = "optimal"

    # Pass 1: minimize the residual.
    while True:
        free = [j for j in range(d) if j not in working]
        rhs = b - tau * A[:, sorted(working)].sum(axis=1) if working else b
        cand = np.full(d, tau)
        cand[free] = _lstsq(A[:, free], rhs)
        bad = [j for j in free if j in con_set and cand[j] < tau - FEAS_TOL]
        if bad:
            if iterations >= max_iter:
                status = "iteration_cap"
                phi = best_phi
                break
            iterations += 1
            phi, hit = _step_to_feasible(phi, cand, [j for j in free if j in con_set], tau)
            working.update(hit)
            continue
        for j in free:
            if j in con_set and cand[j] < tau:
                cand[j] = tau
        phi = cand
        obj = float(np.sum((A @ phi - b) ** 2))
        if obj < best_obj:
            best_phi, best_obj = phi.copy(), obj
        grad = 2.0 * (A.T @ (A @ phi - b))
        releasable = [(grad[j], j) for j in working if grad[j] < -release_tol]
        if not releasable or iterations >= max_iter:
            if releasable:
                status = "iteration_cap"
                phi = best_phi
            break
        iterations += 1
        working.discard(min(releasable)[1])

    # Pass 2: minimum-norm point of the optimal face {A phi = y_star}.
    y_star = A @ phi
    pinned = {j for j in con if phi[j] <= tau + FEAS_TOL}
    while status == "optimal":
        free = [j for j in range(d) if j not in pinned]
        rhs = y_star - tau * A[:, sorted(pinned)].sum(axis=1) if pinned else y_star
        cand = np.full(d, tau)
        cand[free] = _lstsq(A[:, free], rhs)
        bad = [j for j in free if j in con_set and cand[j] < tau - FEAS_TOL]
        if bad:
            if iterations >= max_iter:
                status = "iteration_cap"
                break
            iterations += 1
            phi, hit = _step_to_feasible(phi, cand, [j for j in free if j in con_set], tau)
            pinned.update(hit)
            continue
        for j in free:
            if j in con_set and cand[j] < tau:
                cand[j] = tau
        phi = cand
        if not pinned:
            break
        # Multipliers of the min-norm problem: phi_free must equal
        # (A' nu)_free; release pinned coords whose multiplier is negative.
        nu = _lstsq(A[:, free].T, phi[free]) if free else np.zeros(A.shape[0])
        mu = [(tau - A[:, j] @ nu, j) for j in sorted(pinned)]
        worst = min(mu) if mu else (0.0, -1)
        if worst[0] >= -release_tol * max(1.0, tau) or iterations >= max_iter:
            if mu and worst[0] < -release_tol * max(1.0, tau):
                status = "iteration_cap"
            break
        iterations += 1
        pinned.discard(worst[1])

    theta = np.append(phi, 1.0)
    residual = float(np.sum((M @ theta) ** 2))
    active = tuple(j for j in con if theta[j] <= tau + 1e-12 * max(1.0, tau))
    return CLSSolution(
        theta=theta, residual=residual, active=active, iterations=iterations, status=status
    )


def kkt_report(problem: CLSProblem, theta: np.ndarray) -> dict[str, float]:
    """Stationarity and feasibility residuals of theta for the problem.

    stationarity: max over decision coordinates of |grad_j| for inactive
    coordinates and max(0, -grad_j) for coordinates at the bound (their
    multiplier must be nonnegative). feasibility: largest bound violation.
    Both are ~0 at an exact KKT point.
    """
    M = problem.matrix
    tau = problem.tau
    grad = 2.0 * (M.T @ (M @ theta))
    stat = 0.0
    for j in range(problem.dim - 1):
        if j in problem.constrained and theta[j] <= tau + 1e-9 * max(1.0, tau):
            stat = max(stat, max(0.0, -float(grad[j])))
        else:
            stat = max(stat, abs(float(grad[j])))
    feas = max((tau - float(theta[j]) for j in problem.constrained), default=0.0)
    return {"stationarity": stat, "feasibility": max(0.0, feas)}


def solve_cls_oracle(problem: CLSProblem, grid_resolution: float = 1e-3) -> CLSSolution:
    """Brute-force grid search used only to validate solve_cls in tests.

    The search box is seeded by enumerating every clamp-at-tau face (at most
    2^(L-1) plain least-squares solves): the best feasibility-clipped face
    candidate becomes the initial center, and the box is sized to cover all
    candidates. Each stage then lays a 17-point grid per decision axis
    around the incumbent (constrained axes clipped at tau, with tau itself
    always a grid point) and shrinks the spacing until it reaches
    grid_resolution. Restricted to L <= 5 (at most 4 decision coordinates).
    """
    L = problem.dim
    if L > 5:
        raise ValueError(f"oracle is limited to L <= 5, got L = {L}")
    if not 0 < grid_resolution:
        raise ValueError(f"grid_resolution must be > 0, got {grid_resolution}")
    M = problem.matrix
    d = L - 1
    A = M[:, :d]
    m_last = M[:, d]
    con_set = set(problem.constrained)
    tau = problem.tau

    corner = np.zeros(d)
    corner[list(con_set)] = tau
    # the constrained optimum is stationary on some clamp-at-tau face;
    # binding constraints can push the free coordinates far beyond the
    # unconstrained guess, so every face solution must land inside the box
    candidates = [corner]
    for r in range(len(con_set) + 1):
        for clamped in itertools.combinations(sorted(con_set), r):
            free = [j for j in range(d) if j not in clamped]
            rhs = -m_last - tau * A[:, list(clamped)].sum(axis=1)
            face = np.full(d, tau)
            face[free] = _lstsq(A[:, free], rhs)
            for j in con_set:
                face[j] = max(face[j], tau)
            candidates.append(face)
    objectives = [float(np.sum((A @ c + m_last) ** 2)) for c in candidates]
    center = candidates[int(np.argmin(objectives))].copy()
    span = max(
        float(np.abs(c - center).max(initial=0.0)) for c in candidates
    )
    radius = max(1.0, 2.0 * span, 2.0 * tau)

    h = radius / 8.0
    stages = 0
    while True:
        axes = []
        for j in range(d):
            pts = center[j] + np.arange(-8, 9) * h
            if j in con_set:
                pts = pts[pts >= tau]
                pts = np.append(pts, tau)
            axes.append(np.unique(pts))
        grid = np.meshgrid(*axes, indexing="ij")
        phis = np.stack([g.ravel() for g in grid])  # (d, n_points)
        vals = np.sum((A @ phis + m_last[:, None]) ** 2, axis=0)
        center = phis[:, int(np.argmin(vals))].copy()
        stages += 1
        if h <= grid_resolution:
            break
        h = max(h / 6.0, grid_resolution)

    theta = np.append(center, 1.0)
    residual = float(np.sum((M @ theta) ** 2))
    active = tuple(j for j in problem.constrained if theta[j] <= tau + grid_resolution / 2)
    return CLSSolution(
        theta=theta, residual=residual, active=active, iterations=stages, status="oracle"
    )
