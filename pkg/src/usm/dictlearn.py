"""Dictionary learning with an incoherence penalty.

Alternates reweighted-l1 sparse coding of all samples with a projected
gradient descent on the dictionary objective

    f(D) = (1/N) ||X - D A||_F^2 + mu * ||D^T D||_F^2,

where the second term discourages correlated atoms. Columns are kept inside
the unit ball: after every accepted gradient step any column with norm > 1
is rescaled to norm 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coder import CodeOptions, lla_code_columns, objective_columns
from .priors import PriorModel

__all__ = [
    "LearnOptions",
    "LearnResult",
    "init_dictionary",
    "incoherence",
    "dict_objective",
    "dict_gradient",
    "dict_update",
    "learn",
    "overcomplete_dct_dictionary",
]


@dataclass
class LearnOptions:
    """Configuration for ``learn``.

    Attributes:
        n_atoms: dictionary size K.
        prior: sparsity prior driving the coding step.
        lam: coding regularization weight.
        mu: incoherence penalty weight.
        outer_iters: alternation rounds.
        dict_step: initial gradient step (None picks 1/L from power iteration).
        dict_max_steps: gradient steps per dictionary update.
        dict_tol: relative decrease below which the dictionary update stops.
        code_opts: inner solver options for the coding step.
        seed: seed for data-column initialization.
    """

    n_atoms: int
    prior: PriorModel
    lam: float = 0.1
    mu: float = 1.0
    outer_iters: int = 30
    dict_step: float | None = None
    dict_max_steps: int = 100
    dict_tol: float = 1e-8
    code_opts: CodeOptions | None = None
    seed: int = 0


@dataclass
class LearnResult:
    """Outcome of ``learn``: final dictionary, codes, and objective trace."""

    dictionary: np.ndarray
    coeffs: np.ndarray
    trace: np.ndarray
    reseeds: list = field(default_factory=list)


def init_dictionary(X, n_atoms: int, seed: int = 0) -> np.ndarray:
    """Seed a dictionary from ``n_atoms`` distinct data columns, normalized."""
    X = np.asarray(X, dtype=np.float64)
    m, n = X.shape
    if n_atoms < 1 or n_atoms > n:
        raise ValueError(f"n_atoms must be in 1..{n}, got {n_atoms}")
    rng = np.random.default_rng(seed)
    cols = np.sort(rng.choice(n, size=n_atoms, replace=False))
    D = X[:, cols].copy()
    norms = np.linalg.norm(D, axis=0)
    dead = norms == 0
    if dead.any():
        D[:, dead] = rng.standard_normal((m, int(dead.sum())))
        norms = np.linalg.norm(D, axis=0)
    return D / norms


def incoherence(D) -> float:
    """Frobenius norm squared of the Gram matrix D^T D."""
    D = np.asarray(D, dtype=np.float64)
    G = D.T @ D
    return float(np.sum(G * G))


def dict_objective(D, X, A, mu: float) -> float:
    """(1/N) ||X - D A||_F^2 + mu * ||D^T D||_F^2."""
    resid = X - D @ A
    return float(np.sum(resid * resid)) / X.shape[1] + mu * incoherence(D)


def dict_gradient(D, X, A, mu: float) -> np.ndarray:
    """Gradient of ``dict_objective`` in D: (2/N)(DA - X)A^T + 4 mu D (D^T D)."""
    n = X.shape[1]
    return (2.0 / n) * ((D @ A - X) @ A.T) + 4.0 * mu * (D @ (D.T @ D))


def _project_columns(D: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(D, axis=0)
    scale = np.where(norms > 1.0, norms, 1.0)
    return D / scale


def _spectral_norm_sq(M: np.ndarray) -> float:
    v = np.full(M.shape[1], 1.0 / np.sqrt(M.shape[1]))
    lam = 0.0
    for _ in range(30):
        w = M.T @ (M @ v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        lam = float(v @ w)
        v = w / nw
    return max(lam, 1e-30)


def dict_update(
    D,
    X,
    A,
    mu: float,
    step: float | None = None,
    max_steps: int = 100,
    tol: float = 1e-8,
):
    """Projected gradient descent on ``dict_objective`` for fixed codes.

    Backtracking halves the step (Armijo constant 1e-4, at most 30 halvings)
    and evaluates the Armijo condition at the projected candidate, so the
    traced objective never increases. Stops when no acceptable step exists,
    the relative decrease drops below ``tol``, or after ``max_steps`` steps.

    Returns ``(D_new, trace)`` where trace[0] is the starting objective.
    """
    D = np.array(D, dtype=np.float64, copy=True)
    X = np.asarray(X, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    n = X.shape[1]
    if step is None:
        lip = 2.0 * _spectral_norm_sq(A.T) / n + 12.0 * mu * _spectral_norm_sq(D)
        step = 1.0 / max(lip, 1e-12)
    f = dict_objective(D, X, A, mu)
    trace = [f]
    for _ in range(max_steps):
        grad = dict_gradient(D, X, A, mu)
        s = step
        accepted = False
        for _ in range(30):
            cand = _project_columns(D - s * grad)
            f_cand = dict_objective(cand, X, A, mu)
            gain = float(np.sum(grad * (cand - D)))
            if f_cand <= f + 1e-4 * gain:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        D = cand
        drop = f - f_cand
        f = f_cand
        trace.append(f)
        step = s * 2.0  # let the step grow back after cautious rounds
        if drop <= tol * (1.0 + abs(f)):
            break
    return D, np.array(trace)


def learn(X, opts: LearnOptions, dict_init=None) -> LearnResult:
    """Alternate sparse coding and dictionary updates.

    Each round codes all columns (warm-started from the previous codes),
    re-seeds atoms that no sample uses from the worst-reconstructed data
    column, then updates the dictionary. The trace records the full
    objective (1/N) sum_j [||x_j - D a_j||^2 + lam * sum_k psi(|a_kj|)]
    + mu * ||D^T D||_F^2 after every round.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d sample matrix, got shape {X.shape}")
    m, n = X.shape
    D = init_dictionary(X, opts.n_atoms, opts.seed) if dict_init is None else np.array(
        dict_init, dtype=np.float64, copy=True
    )
    if D.shape[0] != m:
        raise ValueError(f"dictionary rows {D.shape[0]} do not match data rows {m}")
    norms = np.linalg.norm(D, axis=0)
    if (norms > 1.0 + 1e-12).any():
        raise ValueError("initial dictionary has columns with norm > 1")

    code_opts = opts.code_opts or CodeOptions(lam=opts.lam)
    A = None
    trace = []
    reseeds: list[tuple[int, int]] = []
    step = opts.dict_step
    for rnd in range(opts.outer_iters):
        A, _ = lla_code_columns(X, D, opts.prior, code_opts, lam=opts.lam, a_init=A)

        unused = np.flatnonzero(~np.any(A != 0.0, axis=1))
        if unused.size:
            resid = X - D @ A
            worst = np.argsort(-np.einsum("ij,ij->j", resid, resid))
            for t, atom in enumerate(unused):
                col = X[:, worst[t % n]]
                nn = np.linalg.norm(col)
                if nn == 0.0:
                    continue
                v = col / nn
                s = 1.0
                if opts.mu > 0:
                    # the atom's coefficient row is zero, so only the Gram
                    # penalty moves; scale the newcomer so it cannot rise
                    u = D[:, atom]
                    others = np.arange(D.shape[1]) != atom
                    c_old = 2.0 * float(
                        ((D[:, others].T @ u) ** 2).sum()
                    ) + float(u @ u) ** 2
                    c_new = 2.0 * float(((D[:, others].T @ v) ** 2).sum()) + 1.0
                    s = min(1.0, float(np.sqrt(max(c_old, 0.0) / c_new)))
                D[:, atom] = s * v
                reseeds.append((rnd, int(atom)))

        D, dtrace = dict_update(
            D, X, A, opts.mu, step=step, max_steps=opts.dict_max_steps, tol=opts.dict_tol
        )
        obj = float(
            np.mean(objective_columns(X, D, A, opts.lam, opts.prior))
        ) + opts.mu * incoherence(D)
        trace.append(obj)
        if len(trace) > 1 and trace[-2] - obj < 1e-6 * max(abs(trace[-2]), 1e-300):
            break

    return LearnResult(
        dictionary=D, coeffs=A, trace=np.array(trace), reseeds=reseeds
    )


def overcomplete_dct_dictionary(patch_width: int, atoms_per_axis: int) -> np.ndarray:
    """Separable overcomplete DCT dictionary for patch_width^2 pixels.

    Builds atoms_per_axis 1-d cosine atoms (mean-removed except the first,
    each normalized) and returns their Kronecker products: shape
    (patch_width^2, atoms_per_axis^2), every column unit norm.
    """
    w, p = patch_width, atoms_per_axis
    if w < 1 or p < 1:
        raise ValueError("patch_width and atoms_per_axis must be >= 1")
    base = np.zeros((w, p))
    i = np.arange(w)
    for f in range(p):
        atom = np.cos(np.pi * f * i / p)
        if f > 0:
            atom = atom - atom.mean()
        base[:, f] = atom / np.linalg.norm(atom)
    D = np.kron(base, base)
    return D / np.linalg.norm(D, axis=0)
