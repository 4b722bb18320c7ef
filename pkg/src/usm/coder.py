"""Sparse coding solvers.

The Lagrangian problem  min_a ||x - D a||^2 + lambda * sum_k psi(|a_k|)  is
attacked by linearizing the concave regularizer: each round freezes weights
w_k = lambda * psi'(|a_k|) and solves the convex weighted-l1 subproblem with
an accelerated proximal-gradient loop. The constrained problem
min sum_k psi(|a_k|) s.t. ||x - D a||^2 <= epsilon  is solved by bisecting on
lambda until the residual lands in [0.95*epsilon, epsilon].

Everything is written against column batches: ``*_columns`` functions treat
each column of X as an independent sample and keep per-column iteration
state, so results never depend on which columns happen to share a batch.
The single-sample wrappers are thin views over the batch engines.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .priors import Joe, Laplacian, Moe, PriorModel

__all__ = [
    "CodeOptions",
    "CodeResult",
    "soft_threshold",
    "scalar_threshold",
    "weighted_l1",
    "weighted_l1_columns",
    "lla_code",
    "lla_code_columns",
    "constrained_code",
    "constrained_code_columns",
    "omp",
    "omp_columns",
    "objective",
    "objective_columns",
    "kkt_max_violation",
    "lla_init_magnitude",
    "zeta_moe",
]

_WINDOW_LO = 0.95  # accepted residual window is [0.95*eps, eps]
_MAX_BISECT = 30
_MAX_DOUBLING = 40  # lambda_hi search caps at 2**40


@dataclass
class CodeOptions:
    """Knobs shared by the coding entry points.

    Attributes:
        lam: regularization weight (>= 0).
        lla_iters: reweighting rounds for concave regularizers.
        inner_tol: relative objective-change tolerance of the inner solver.
        inner_max_iters: hard cap on inner iterations per subproblem.
        epsilon: optional residual target for constrained coding.
    """

    lam: float = 0.1
    lla_iters: int = 5
    inner_tol: float = 1e-8
    inner_max_iters: int = 2000
    epsilon: float | None = None


@dataclass
class CodeResult:
    """Outcome of coding one sample."""

    coeffs: np.ndarray
    objective: float
    iterations: list[int] = field(default_factory=list)
    residual_sq: float = 0.0
    info: dict = field(default_factory=dict)


def soft_threshold(x, lam):
    """Scalar map argmin_a (x-a)^2 + lam*|a|, elementwise: shrink |x| by lam/2."""
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.maximum(np.abs(x) - np.asarray(lam) / 2.0, 0.0)
    return float(out) if out.ndim == 0 else out


def _shrink(v: np.ndarray, amount: np.ndarray) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - amount, 0.0)


def _lipschitz(D: np.ndarray) -> float:
    """2 * largest eigenvalue of D^T D by power iteration (30 rounds, tol 1e-10)."""
    k = D.shape[1]
    v = np.full(k, 1.0 / np.sqrt(k))
    lam = 0.0
    for _ in range(30):
        w = D.T @ (D @ v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            break
        lam_new = float(v @ w)
        v = w / nw
        if abs(lam_new - lam) <= 1e-10 * max(lam_new, 1.0):
            lam = lam_new
            break
        lam = lam_new
    if not np.isfinite(lam) or lam <= 0.0:
        raise ValueError("step-size estimation failed: dictionary has no energy")
    # tiny inflation guards the descent property against eigenvalue underestimation
    return 2.0 * lam * (1.0 + 1e-7)


def _check_batch(X: np.ndarray, D: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2:
        raise ValueError(f"dictionary must be 2-d, got shape {D.shape}")
    if X.ndim != 2 or X.shape[0] != D.shape[0]:
        raise ValueError(f"sample shape {X.shape} does not match dictionary {D.shape}")
    if not np.isfinite(D).all() or not np.isfinite(X).all():
        raise ValueError("non-finite entries in samples or dictionary")
    return X, D


def weighted_l1_columns(
    X, D, W, opts: CodeOptions | None = None, a_init: np.ndarray | None = None
):
    """Solve min_a ||x - D a||^2 + sum_k w_k |a_k| for every column.

    Accelerated proximal gradient with per-column momentum, a monotone
    safeguard (a plain proximal step is substituted whenever the accelerated
    step would raise the objective), and per-column freezing once the
    objective change stays below ``inner_tol`` three checks in a row.

    Returns ``(A, info)`` with info arrays ``objective``, ``residual_sq``,
    ``iterations`` indexed by column.
    """
    opts = opts or CodeOptions()
    X, D = _check_batch(X, D)
    m, n = X.shape
    k = D.shape[1]
    W = np.asarray(W, dtype=np.float64)
    if W.shape != (k, n):
        raise ValueError(f"weights shape {W.shape}, expected {(k, n)}")
    if (W < 0).any():
        raise ValueError("weights must be nonnegative")

    L = _lipschitz(D)
    step = 2.0 / L  # gradient of the fidelity term is 2 D^T (Da - x)

    if a_init is None:
        A = np.zeros((k, n))
        DA = np.zeros((m, n))
    else:
        A = np.array(a_init, dtype=np.float64, copy=True)
        if A.shape != (k, n):
            raise ValueError(f"a_init shape {A.shape}, expected {(k, n)}")
        DA = D @ A

    out_A = np.zeros((k, n))
    out_f = np.zeros(n)
    out_res = np.zeros(n)
    out_iter = np.zeros(n, dtype=np.int64)

    def col_obj(Amat, DAmat, Xmat, Wmat):
        resid = Xmat - DAmat
        return np.einsum("ij,ij->j", resid, resid), np.einsum(
            "ij,ij->j", Wmat, np.abs(Amat)
        )

    res2, pen = col_obj(A, DA, X, W)
    f = res2 + pen

    A_prev = A.copy()
    DA_prev = DA.copy()
    t = np.ones(n)
    streak = np.zeros(n, dtype=np.int64)
    alive = np.arange(n)
    Xa, Wa = X, W

    def freeze(mask_done: np.ndarray, it: int) -> None:
        nonlocal A, DA, A_prev, DA_prev, f, t, streak, alive, Xa, Wa, res2
        cols = alive[mask_done]
        out_A[:, cols] = A[:, mask_done]
        out_f[cols] = f[mask_done]
        out_res[cols] = res2[mask_done]
        out_iter[cols] = it
        keep = ~mask_done
        alive = alive[keep]
        A = A[:, keep]
        DA = DA[:, keep]
        A_prev = A_prev[:, keep]
        DA_prev = DA_prev[:, keep]
        f = f[keep]
        res2 = res2[keep]
        t = t[keep]
        streak = streak[keep]
        Xa = Xa[:, keep]
        Wa = Wa[:, keep]

    it = 0
    while alive.size and it < opts.inner_max_iters:
        it += 1
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        gam = (t - 1.0) / t_next
        Y = A + gam * (A - A_prev)
        DY = DA + gam * (DA - DA_prev)
        V = Y - step * (D.T @ (DY - Xa))
        A_new = _shrink(V, Wa / L)
        DA_new = D @ A_new
        res2_new, pen_new = col_obj(A_new, DA_new, Xa, Wa)
        f_new = res2_new + pen_new

        bad = f_new > f * (1.0 + 1e-12) + 1e-15
        if bad.any():
            Vb = A[:, bad] - step * (D.T @ (DA[:, bad] - Xa[:, bad]))
            Ab = _shrink(Vb, Wa[:, bad] / L)
            DAb = D @ Ab
            rb, pb = col_obj(Ab, DAb, Xa[:, bad], Wa[:, bad])
            fb = rb + pb
            still = fb > f[bad] * (1.0 + 1e-12) + 1e-15
            # where even the plain step stalls, keep the old iterate
            Ab[:, still] = A[:, bad][:, still]
            DAb[:, still] = DA[:, bad][:, still]
            fb[still] = f[bad][still]
            rb[still] = res2[bad][still]
            A_new[:, bad] = Ab
            DA_new[:, bad] = DAb
            f_new[bad] = fb
            res2_new[bad] = rb
            t_next[bad] = 1.0  # momentum restart after a safeguarded step

        delta = f - f_new
        small = delta <= opts.inner_tol * (1.0 + np.abs(f_new))
        streak = np.where(small, streak + 1, 0)

        A_prev, A = A, A_new
        DA_prev, DA = DA, DA_new
        f = f_new
        res2 = res2_new
        t = t_next

        done = streak >= 3
        if done.any():
            freeze(done, it)

    if alive.size:
        freeze(np.ones(alive.size, dtype=bool), it)

    return out_A, {"objective": out_f, "residual_sq": out_res, "iterations": out_iter}


def weighted_l1(x, D, weights, opts: CodeOptions | None = None, a_init=None) -> CodeResult:
    """Single-sample weighted-l1 coding; see ``weighted_l1_columns``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    w = np.asarray(weights, dtype=np.float64).ravel()
    init = None if a_init is None else np.asarray(a_init, dtype=np.float64).reshape(-1, 1)
    A, info = weighted_l1_columns(x[:, None], D, w[:, None], opts, a_init=init)
    return CodeResult(
        coeffs=A[:, 0],
        objective=float(info["objective"][0]),
        iterations=[int(info["iterations"][0])],
        residual_sq=float(info["residual_sq"][0]),
    )


def lla_init_magnitude(model: PriorModel) -> float:
    """Magnitude a0 at which the first reweighting round evaluates psi'.

    Chosen so psi'(a0) equals the mean mixing rate of the prior; for the
    Laplacian (single round, constant weights) there is nothing to choose.
    """
    if isinstance(model, Laplacian):
        return 0.0
    if isinstance(model, Moe):
        return model.beta / model.kappa
    if isinstance(model, Joe):
        target = model.expected_rate()

        def gap(a: float) -> float:
            return float(model.reg_deriv(a)) - target

        lo = 1e-300
        hi = 1.0 / (model.theta2 - model.theta1)
        while gap(hi) > 0:
            hi *= 2.0
            if hi > 1e300:
                raise ValueError("failed to bracket the reweighting anchor")
        return float(brentq(gap, lo, hi, xtol=1e-300, rtol=8.9e-16))
    raise TypeError(f"unsupported prior {model!r}")


def lla_code_columns(
    X,
    D,
    model: PriorModel,
    opts: CodeOptions | None = None,
    lam=None,
    a_init: np.ndarray | None = None,
):
    """Reweighted-l1 coding of every column under ``model``.

    Each round freezes weights lam * psi'(|a|) at the previous iterate and
    solves the weighted-l1 subproblem warm-started from it, which makes the
    true objective non-increasing across rounds. Round one evaluates psi' at
    the constant magnitude ``lla_init_magnitude(model)`` (or at ``a_init``
    when given) and its subproblem starts from zeros (or ``a_init``).
    The Laplacian prior needs no reweighting and runs exactly one round.

    ``lam`` may be a scalar or a length-N vector (per-column weight); when
    omitted it falls back to ``opts.lam``.

    Returns ``(A, info)``; info carries per-round per-column ``objective``
    (the true regularized objective), inner ``iterations``, and final
    ``residual_sq``.
    """
    opts = opts or CodeOptions()
    X, D = _check_batch(X, D)
    k, n = D.shape[1], X.shape[1]
    lam_col = np.broadcast_to(
        np.asarray(opts.lam if lam is None else lam, dtype=np.float64), (n,)
    )
    if (lam_col < 0).any():
        raise ValueError("lambda must be nonnegative")

    rounds = 1 if isinstance(model, Laplacian) else max(1, int(opts.lla_iters))

    if a_init is not None:
        a_init = np.asarray(a_init, dtype=np.float64)
        if a_init.shape != (k, n):
            raise ValueError(f"a_init shape {a_init.shape}, expected {(k, n)}")

    if isinstance(model, Laplacian):
        mags = np.ones((k, n))  # psi' is constant; value irrelevant
    elif a_init is not None:
        mags = np.abs(a_init)
    else:
        mags = np.full((k, n), lla_init_magnitude(model))

    A = a_init
    round_obj = []
    round_iters = []
    info_inner = {}
    for _ in range(rounds):
        W = np.asarray(model.reg_deriv(mags)) * lam_col
        A, info_inner = weighted_l1_columns(X, D, W, opts, a_init=A)
        mags = np.abs(A)
        resid = X - D @ A
        res2 = np.einsum("ij,ij->j", resid, resid)
        pen = lam_col * np.asarray(model.reg_value(mags)).sum(axis=0)
        round_obj.append(res2 + pen)
        round_iters.append(info_inner["iterations"])

    return A, {
        "objective": round_obj[-1],
        "residual_sq": res2,
        "round_objectives": np.array(round_obj),
        "iterations": np.array(round_iters),
        "lam": np.array(lam_col),
    }


def lla_code(x, D, model: PriorModel, opts: CodeOptions | None = None) -> CodeResult:
    """Single-sample reweighted-l1 coding; see ``lla_code_columns``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    A, info = lla_code_columns(x[:, None], D, model, opts)
    return CodeResult(
        coeffs=A[:, 0],
        objective=float(info["objective"][0]),
        iterations=[int(i) for i in info["iterations"][:, 0]],
        residual_sq=float(info["residual_sq"][0]),
        info={"round_objectives": info["round_objectives"][:, 0]},
    )


def constrained_code_columns(
    X, D, model: PriorModel, epsilon, opts: CodeOptions | None = None
):
    """Code every column subject to ||x - D a||^2 <= epsilon.

    Bisects the Lagrange weight lambda per column: lambda_lo starts at 0
    (least-squares residual), lambda_hi is found by doubling from 1 (capped
    at 2**40), and bisection stops once the residual lands in
    [0.95*epsilon, epsilon] or after 30 steps, whichever comes first. Every
    feasible iterate seen is ranked by regularizer value and the best one is
    returned, so a missed window still yields a feasible answer.

    Exact-fit requests are softened to epsilon_eff = max(epsilon,
    1e-14*||x||^2); full-column-rank dictionaries take a direct solve path
    instead. Columns whose energy is already <= epsilon return zeros.

    Returns ``(A, info)``; info carries per-column ``lam``, ``residual_sq``,
    ``objective``, ``regularizer``, ``iterations`` and the bisection
    ``trace`` (list of (lambda, residual_sq) pairs per column).
    """
    opts = opts or CodeOptions()
    X, D = _check_batch(X, D)
    m, n = X.shape
    k = D.shape[1]
    eps = np.broadcast_to(np.asarray(epsilon, dtype=np.float64), (n,)).copy()
    if (eps < 0).any():
        raise ValueError("epsilon must be nonnegative")

    out_A = np.zeros((k, n))
    out_lam = np.zeros(n)
    out_res = np.zeros(n)
    out_reg = np.zeros(n)
    out_iter = np.zeros(n, dtype=np.int64)
    traces: list[list[tuple[float, float]]] = [[] for _ in range(n)]

    norms2 = np.einsum("ij,ij->j", X, X)
    eps_eff = np.maximum(eps, 1e-14 * norms2)

    zero_ok = norms2 <= eps
    out_reg[zero_ok] = float(np.asarray(model.reg_value(0.0))) * k
    out_res[zero_ok] = norms2[zero_ok]

    todo = np.flatnonzero(~zero_ok)

    rank = np.linalg.matrix_rank(D)
    if rank < m and todo.size:
        # rank-deficient dictionary: epsilon below the LS floor is infeasible
        sol, *_ = np.linalg.lstsq(D, X[:, todo], rcond=None)
        resid = X[:, todo] - D @ sol
        floor = np.einsum("ij,ij->j", resid, resid)
        bad = eps_eff[todo] < floor * (1.0 - 1e-9)
        if bad.any():
            j = int(todo[np.flatnonzero(bad)[0]])
            raise ValueError(
                f"epsilon {eps[j]:.3g} below least-squares floor "
                f"{floor[np.flatnonzero(bad)[0]]:.3g} for column {j}"
            )

    exact = (eps < 1e-14 * norms2) & ~zero_ok
    if exact.any() and k <= m and rank == k:
        cols = np.flatnonzero(exact)
        sol, *_ = np.linalg.lstsq(D, X[:, cols], rcond=None)
        resid = X[:, cols] - D @ sol
        r2 = np.einsum("ij,ij->j", resid, resid)
        bad = r2 > eps_eff[cols] * (1.0 + 1e-9) + 1e-30
        if bad.any():
            j = int(cols[np.flatnonzero(bad)[0]])
            raise ValueError(f"exact fit unreachable for column {j}")
        out_A[:, cols] = sol
        out_res[cols] = r2
        out_reg[cols] = np.asarray(model.reg_value(np.abs(sol))).sum(axis=0)
        todo = np.setdiff1d(todo, cols, assume_unique=True)

    if todo.size == 0:
        obj = out_res + out_lam * out_reg
        return out_A, {
            "lam": out_lam,
            "residual_sq": out_res,
            "objective": obj,
            "regularizer": out_reg,
            "iterations": out_iter,
            "trace": traces,
        }

    # the inner solver must resolve objective changes at the scale of the
    # feasibility target; near-exact fits need a tighter tolerance than the
    # default relative one can certify
    tiny = float(np.min(eps_eff[todo] / np.maximum(norms2[todo], 1e-300)))
    if tiny < 1e2 * opts.inner_tol:
        opts = replace(
            opts,
            inner_tol=max(1e-16, 0.1 * tiny),
            inner_max_iters=max(opts.inner_max_iters, 20000),
        )

    # per-column bisection state over the active set
    idx = todo.copy()
    lo = np.zeros(idx.size)
    hi = np.full(idx.size, np.nan)
    dbl = np.zeros(idx.size, dtype=np.int64)  # doubling exponent while hi unknown
    bis = np.zeros(idx.size, dtype=np.int64)
    best_reg = np.full(idx.size, np.inf)
    best_lam = np.zeros(idx.size)
    best_res = np.zeros(idx.size)
    best_A = np.zeros((k, idx.size))
    have_best = np.zeros(idx.size, dtype=bool)
    warm = np.zeros((k, idx.size))
    iters_used = np.zeros(idx.size, dtype=np.int64)

    def finish(mask: np.ndarray) -> None:
        nonlocal idx, lo, hi, dbl, bis, best_reg, best_lam, best_res, best_A
        nonlocal have_best, warm, iters_used
        cols = idx[mask]
        missing = ~have_best[mask]
        if missing.any():
            j = int(cols[np.flatnonzero(missing)[0]])
            raise ValueError(f"no feasible iterate found for column {j}")
        out_A[:, cols] = best_A[:, mask]
        out_lam[cols] = best_lam[mask]
        out_res[cols] = best_res[mask]
        out_reg[cols] = best_reg[mask]
        out_iter[cols] = iters_used[mask]
        keep = ~mask
        idx = idx[keep]
        lo, hi, dbl, bis = lo[keep], hi[keep], dbl[keep], bis[keep]
        best_reg, best_lam, best_res = best_reg[keep], best_lam[keep], best_res[keep]
        best_A = best_A[:, keep]
        have_best = have_best[keep]
        warm = warm[:, keep]
        iters_used = iters_used[keep]

    guard = 0
    while idx.size:
        guard += 1
        if guard > _MAX_DOUBLING + _MAX_BISECT + 8:
            raise RuntimeError("lambda bisection failed to terminate")
        lam_try = np.where(np.isnan(hi), 2.0**dbl, 0.5 * (lo + hi))
        A_try, info = lla_code_columns(
            X[:, idx], D, model, opts, lam=lam_try, a_init=warm
        )
        res2 = info["residual_sq"]
        reg = np.asarray(model.reg_value(np.abs(A_try))).sum(axis=0)
        iters_used += info["iterations"].sum(axis=0)
        warm = A_try
        e = eps_eff[idx]
        for t, j in enumerate(idx):
            traces[j].append((float(lam_try[t]), float(res2[t])))

        feas = res2 <= e * (1.0 + 1e-12)
        better = feas & (~have_best | (reg < best_reg))
        if better.any():
            best_A[:, better] = A_try[:, better]
            best_reg[better] = reg[better]
            best_lam[better] = lam_try[better]
            best_res[better] = res2[better]
            have_best |= better

        in_window = feas & (res2 >= _WINDOW_LO * e)
        low = res2 < _WINDOW_LO * e  # lambda too small
        doubling = np.isnan(hi)

        lo = np.where(low, lam_try, lo)
        dbl = np.where(doubling & low, dbl + 1, dbl)
        hi = np.where(~low & ~doubling & ~in_window, lam_try, hi)
        hi = np.where(doubling & ~low, lam_try, hi)
        bis = np.where(~doubling, bis + 1, bis)

        give_up = (doubling & (dbl > _MAX_DOUBLING)) | (bis >= _MAX_BISECT)
        finish_mask = in_window | give_up
        if finish_mask.any():
            finish(finish_mask)

    obj = out_res + out_lam * out_reg
    return out_A, {
        "lam": out_lam,
        "residual_sq": out_res,
        "objective": obj,
        "regularizer": out_reg,
        "iterations": out_iter,
        "trace": traces,
    }


def constrained_code(
    x, D, model: PriorModel, epsilon: float | None = None, opts: CodeOptions | None = None
) -> CodeResult:
    """Single-sample constrained coding; see ``constrained_code_columns``."""
    opts = opts or CodeOptions()
    if epsilon is None:
        epsilon = opts.epsilon
    if epsilon is None:
        raise ValueError("constrained_code needs an epsilon")
    x = np.asarray(x, dtype=np.float64).ravel()
    A, info = constrained_code_columns(x[:, None], D, model, epsilon, opts)
    return CodeResult(
        coeffs=A[:, 0],
        objective=float(info["objective"][0]),
        iterations=[int(info["iterations"][0])],
        residual_sq=float(info["residual_sq"][0]),
        info={"lam": float(info["lam"][0]), "trace": info["trace"][0]},
    )


def omp_columns(X, D, max_nonzeros: int | None = None, epsilon: float | None = None):
    """Orthogonal matching pursuit on every column.

    Greedy: pick the atom with the largest absolute correlation against the
    residual (ties break to the lowest index), re-solve least squares on the
    active set, repeat until ``max_nonzeros`` atoms or ``residual_sq <=
    epsilon``. A numerically singular active-set system stops that column
    early and is flagged.

    Returns ``(A, info)`` with ``supports`` (list of sorted index arrays),
    ``residual_sq``, and ``flags`` (0 ok, 1 singular stop).
    """
    X, D = _check_batch(X, D)
    m, n = X.shape
    k = D.shape[1]
    if max_nonzeros is None and epsilon is None:
        raise ValueError("omp needs max_nonzeros or epsilon")
    cap = m if max_nonzeros is None else min(max_nonzeros, m, k)

    G = D.T @ D
    DtX = D.T @ X
    A = np.zeros((k, n))
    R = X.copy()
    res2 = np.einsum("ij,ij->j", X, X)
    supports: list[list[int]] = [[] for _ in range(n)]
    flags = np.zeros(n, dtype=np.int64)
    # stop once the residual is gone in exact arithmetic terms, even when the
    # atom budget is not exhausted
    stop_at = np.full(n, 1e-24) * res2
    if epsilon is not None:
        stop_at = np.maximum(stop_at, epsilon)
    active = res2 > stop_at

    for _ in range(cap):
        if not active.any():
            break
        cols = np.flatnonzero(active)
        C = np.abs(D.T @ R[:, cols])
        for t, j in enumerate(cols):
            if supports[j]:
                C[supports[j], t] = -1.0  # never re-pick an atom
        picks = np.argmax(C, axis=0)
        for t, j in enumerate(cols):
            s = supports[j] + [int(picks[t])]
            sub = G[np.ix_(s, s)]
            try:
                coef = np.linalg.solve(sub, DtX[s, j])
            except np.linalg.LinAlgError:
                flags[j] = 1
                active[j] = False
                continue
            if not np.isfinite(coef).all():
                flags[j] = 1
                active[j] = False
                continue
            supports[j] = s
            A[s, j] = coef
            R[:, j] = X[:, j] - D[:, s] @ coef
            res2[j] = float(R[:, j] @ R[:, j])
            if len(s) >= cap or res2[j] <= stop_at[j]:
                active[j] = False

    return A, {
        "supports": [np.array(sorted(s), dtype=np.int64) for s in supports],
        "residual_sq": res2,
        "flags": flags,
    }


def omp(x, D, max_nonzeros: int | None = None, epsilon: float | None = None):
    """Single-sample OMP; returns (CodeResult, support index array)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    A, info = omp_columns(x[:, None], D, max_nonzeros=max_nonzeros, epsilon=epsilon)
    support = info["supports"][0]
    result = CodeResult(
        coeffs=A[:, 0],
        objective=float(info["residual_sq"][0]),
        iterations=[int(support.size)],
        residual_sq=float(info["residual_sq"][0]),
        info={"flag": int(info["flags"][0])},
    )
    return result, support


def scalar_threshold(x: float, lam: float, model: PriorModel) -> float:
    """Exact scalar shrinkage: argmin_a (x - a)^2 + lam * psi(|a|).

    Stationary points on the smooth branch are found in closed form for the
    Moe regularizer and by sign-change search plus root polishing for the
    Joe; every candidate is compared against a = 0 and ties prefer 0.
    """
    x = float(x)
    lam = float(lam)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam == 0 or x == 0:
        return x
    if isinstance(model, Laplacian):
        return soft_threshold(x, lam)
    s = 1.0 if x > 0 else -1.0
    t = abs(x)

    def h(a: float) -> float:
        return (t - a) ** 2 + lam * float(model.reg_value(a))

    candidates = [0.0]
    if isinstance(model, Moe):
        b = model.beta
        disc = (t + b) ** 2 - 2.0 * lam
        if disc >= 0.0:
            root = np.sqrt(disc)
            for a in ((t - b) + root, (t - b) - root):
                if a > 0:
                    candidates.append(0.5 * a)
    elif isinstance(model, Joe):
        def q(a: float) -> float:
            return 2.0 * (a - t) + lam * float(model.reg_deriv(a))

        grid = np.unique(
            np.concatenate(
                [np.geomspace(t * 1e-9, t, 257), np.linspace(t * 1e-9, t, 65)]
            )
        )
        vals = [q(a) for a in grid]
        for i in range(len(grid) - 1):
            if vals[i] == 0.0:
                candidates.append(float(grid[i]))
            elif vals[i] * vals[i + 1] < 0:
                candidates.append(float(brentq(q, grid[i], grid[i + 1], rtol=8.9e-16)))
        if vals[-1] == 0.0:
            candidates.append(float(grid[-1]))
    else:
        raise TypeError(f"unsupported prior {model!r}")

    best = min(candidates, key=lambda a: (h(a), a))
    return s * best


def objective_columns(X, D, A, lam, model: PriorModel) -> np.ndarray:
    """Per-column value of ||x - D a||^2 + lam * sum_k psi(|a_k|)."""
    X, D = _check_batch(X, D)
    A = np.asarray(A, dtype=np.float64)
    resid = X - D @ A
    res2 = np.einsum("ij,ij->j", resid, resid)
    pen = np.asarray(model.reg_value(np.abs(A))).sum(axis=0)
    return res2 + np.asarray(lam) * pen


def objective(x, D, a, lam, model: PriorModel) -> float:
    """Value of ||x - D a||^2 + lam * sum_k psi(|a_k|) for one sample."""
    x = np.asarray(x, dtype=np.float64).ravel()
    a = np.asarray(a, dtype=np.float64).ravel()
    return float(objective_columns(x[:, None], D, a[:, None], lam, model)[0])


def kkt_max_violation(x, D, a, weights) -> float:
    """Largest first-order optimality violation of a weighted-l1 solution.

    For c = 2 D^T (D a - x): zero coordinates need |c_k| <= w_k, active ones
    need c_k = -sign(a_k) * w_k. Returns the max absolute slack violation.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    a = np.asarray(a, dtype=np.float64).ravel()
    w = np.asarray(weights, dtype=np.float64).ravel()
    c = 2.0 * (D.T @ (D @ a - x))
    zero = a == 0
    v_zero = np.maximum(np.abs(c[zero]) - w[zero], 0.0)
    v_act = np.abs(c[~zero] + np.sign(a[~zero]) * w[~zero])
    parts = np.concatenate([v_zero, v_act])
    return float(parts.max()) if parts.size else 0.0


def zeta_moe(a0: float, model: Moe) -> float:
    """Expected codelength overhead (nats) of reweighting anchored at a0.

    For a Moe with kappa > 1 and mean magnitude mu = beta/(kappa-1):
    zeta(a0) = log(a0+beta) + (mu-a0)/(a0+beta) - log(beta) - 1/kappa.
    Minimized at a0 = mu; zeta(mu) is the irreducible linearization cost.
    """
    if not isinstance(model, Moe):
        raise TypeError("zeta_moe needs a Moe prior")
    if model.kappa <= 1.0:
        raise ValueError(f"zeta_moe needs kappa > 1, got {model.kappa}")
    if a0 < 0:
        raise ValueError(f"anchor magnitude must be >= 0, got {a0}")
    b = model.beta
    mu = b / (model.kappa - 1.0)
    return float(
        np.log(a0 + b) + (mu - a0) / (a0 + b) - np.log(b) - 1.0 / model.kappa
    )
