"""Codelength empirics: quantized histograms, entropy, KLD, and model fits.

Coefficients are binned on an origin-centered grid of pitch delta (default
2^-8): value v falls in bin m = round(v/delta) with halves rounded away from
zero, covering [m*delta - delta/2, m*delta + delta/2). Ideal codelengths use
the quantized-density approximation P(bin) ~ delta * pdf(v).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .priors import (
    EstimationError,
    Laplacian,
    Moe,
    PriorModel,
    cmoe_from_samples,
    joe_fit_moments,
    laplacian_mle,
    moe_fit_samples,
)

__all__ = [
    "DEFAULT_DELTA",
    "QuantHist",
    "quantize_hist",
    "entropy_bits",
    "kld_bits",
    "codelength_bits",
    "regret_bits",
    "FitRow",
    "FitReport",
    "fit_report",
]

DEFAULT_DELTA = 2.0**-8

_SIMPSON_W = np.array([1.0, 4.0, 2.0, 4.0, 2.0, 4.0, 2.0, 4.0, 1.0]) / 24.0
_Q_FLOOR = 1e-300


@dataclass
class QuantHist:
    """Histogram over origin-centered bins of pitch ``delta``.

    ``counts[i]`` is the occupancy of bin index ``m_min + i``; bin m covers
    [m*delta - delta/2, m*delta + delta/2).
    """

    delta: float
    m_min: int
    counts: np.ndarray
    total: int

    def bin_indices(self) -> np.ndarray:
        return self.m_min + np.arange(self.counts.size)

    def probs(self) -> np.ndarray:
        return self.counts / self.total


def quantize_hist(values, delta: float = DEFAULT_DELTA) -> QuantHist:
    """Bin values with halves rounded away from zero."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("cannot build a histogram from no values")
    if not np.isfinite(values).all():
        raise ValueError("histogram input has non-finite values")
    if not (delta > 0 and math.isfinite(delta)):
        raise ValueError(f"delta must be positive, got {delta}")
    m = (np.sign(values) * np.floor(np.abs(values) / delta + 0.5)).astype(np.int64)
    m_min = int(m.min())
    counts = np.bincount(m - m_min)
    return QuantHist(delta=delta, m_min=m_min, counts=counts, total=values.size)


def entropy_bits(hist: QuantHist) -> float:
    """Shannon entropy of the bin occupancy, in bits."""
    p = hist.probs()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _bin_masses(hist: QuantHist, model: PriorModel) -> tuple[np.ndarray, np.ndarray]:
    """(p, q) over occupied bins; q by 9-node Simpson quadrature per bin."""
    occupied = np.flatnonzero(hist.counts > 0)
    m = hist.m_min + occupied
    p = hist.counts[occupied] / hist.total
    lo = (m - 0.5) * hist.delta
    nodes = lo[:, None] + hist.delta * (np.arange(9) / 8.0)[None, :]
    q = hist.delta * (np.asarray(model.pdf(nodes)) @ _SIMPSON_W)
    return p, np.maximum(q, _Q_FLOOR)


def kld_bits(hist: QuantHist, model: PriorModel) -> float:
    """KLD (bits) between the empirical bin law and the model's bin masses."""
    p, q = _bin_masses(hist, model)
    return float((p * np.log2(p / q)).sum())


def codelength_bits(values, model: PriorModel, delta: float = DEFAULT_DELTA) -> float:
    """Total ideal codelength, in bits: sum of -log2(delta * pdf(v))."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("cannot compute a codelength for no values")
    log_pdf = np.asarray(model.log_pdf(values))
    return float(-values.size * np.log2(delta) - log_pdf.sum() / math.log(2.0))


def regret_bits(values, q_model: PriorModel) -> float:
    """Excess bits of ``q_model`` over the best within-sample Laplacian.

    The bin pitch cancels, so this is just the log-likelihood gap in bits;
    the reference rate is the Laplacian MLE of ``values``.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    ref = laplacian_mle(values)
    gap = np.asarray(ref.log_pdf(values)).sum() - np.asarray(
        q_model.log_pdf(values)
    ).sum()
    return float(gap / math.log(2.0))


def _params_str(model: PriorModel | None) -> str:
    if model is None:
        return ""
    if isinstance(model, Laplacian):
        return f"theta={model.theta:.6g}"
    if isinstance(model, Moe):
        return f"kappa={model.kappa:.6g} beta={model.beta:.6g}"
    return f"theta1={model.theta1:.6g} theta2={model.theta2:.6g}"


@dataclass
class FitRow:
    """One (model, fit scope, evaluation scope) cell of the fit report."""

    model: str
    fit_scope: str
    eval_scope: str
    atom: int
    params: str
    n: int
    kld_bits: float
    status: str


@dataclass
class FitReport:
    """Model-vs-histogram comparison table produced by ``fit_report``."""

    rows: list[FitRow] = field(default_factory=list)
    delta: float = DEFAULT_DELTA

    def summary_rows(self) -> list[FitRow]:
        return [r for r in self.rows if r.atom < 0]

    def atom_rows(self) -> list[FitRow]:
        return [r for r in self.rows if r.atom >= 0]

    def to_csv(self, path) -> None:
        buf = io.StringIO()
        buf.write("model,fit_scope,eval_scope,atom,params,n,kld_bits,status\n")
        for r in self.rows:
            kld = "nan" if math.isnan(r.kld_bits) else f"{r.kld_bits:.17g}"
            buf.write(
                f"{r.model},{r.fit_scope},{r.eval_scope},{r.atom},"
                f"{r.params.replace(',', ';')},{r.n},{kld},{r.status}\n"
            )
        Path(path).write_text(buf.getvalue(), encoding="ascii")

    def text(self) -> str:
        lines = [
            f"{'model':<10} {'fit':<7} {'eval':<7} {'n':>9} {'KLD bits':>12}  status",
        ]
        for r in self.summary_rows():
            kld = "nan" if math.isnan(r.kld_bits) else f"{r.kld_bits:.4f}"
            lines.append(
                f"{r.model:<10} {r.fit_scope:<7} {r.eval_scope:<7} "
                f"{r.n:>9} {kld:>12}  {r.status}"
            )
        n_atoms = len({r.atom for r in self.atom_rows()})
        if n_atoms:
            lines.append(f"(+ per-atom detail for {n_atoms} atoms in the CSV)")
        return "\n".join(lines)


def fit_report(
    A,
    delta: float = DEFAULT_DELTA,
    include_zeros: bool = False,
    row_fallback_min: int = 30,
    n0: int = 2,
) -> FitReport:
    """Fit the model zoo to a coefficient matrix and score every fit by KLD.

    Global scope fits one model of each family to all nonzero coefficients
    (column-major stream order); atom scope fits Laplacian and Moe models per
    coefficient row. Rows with fewer than ``row_fallback_min`` nonzeros reuse
    the global Moe parameters; all-zero rows are marked degenerate. Zero
    coefficients never enter fits and enter histograms only with
    ``include_zeros``.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d coefficient matrix, got shape {A.shape}")
    stream = A.ravel(order="F")
    nz = stream[stream != 0.0]
    if nz.size == 0:
        raise EstimationError("fit_report needs at least one nonzero coefficient")

    hist_g = quantize_hist(stream if include_zeros else nz, delta)
    report = FitReport(delta=delta)

    lap_g = laplacian_mle(nz)
    moe_g = moe_fit_samples(nz)
    moe_status = "capped" if moe_g.kappa == 100.0 else "ok"
    mu1 = float(np.abs(nz).mean())
    mu2 = float((nz**2).mean())
    try:
        joe_g: PriorModel | None = joe_fit_moments(mu1, mu2)
        joe_status = "ok"
    except EstimationError:
        joe_g, joe_status = None, "failed"
    head = np.abs(nz[:n0])
    try:
        cmoe_g: PriorModel | None = cmoe_from_samples(head) if head.size >= n0 else None
        cmoe_status = "ok" if cmoe_g is not None else "failed"
    except EstimationError:
        cmoe_g, cmoe_status = None, "failed"

    def add(model_name, fit_scope, eval_scope, atom, model, n, hist, status):
        kld = float("nan")
        if model is not None and hist is not None and status not in ("degenerate",):
            kld = kld_bits(hist, model)
        report.rows.append(
            FitRow(
                model=model_name,
                fit_scope=fit_scope,
                eval_scope=eval_scope,
                atom=atom,
                params=_params_str(model),
                n=n,
                kld_bits=kld,
                status=status,
            )
        )

    add("laplacian", "global", "global", -1, lap_g, nz.size, hist_g, "ok")
    add("moe", "global", "global", -1, moe_g, nz.size, hist_g, moe_status)
    add("joe", "global", "global", -1, joe_g, nz.size, hist_g, joe_status)
    add("cmoe", "global", "global", -1, cmoe_g, nz.size, hist_g, cmoe_status)

    atom_cells = []  # (atom, n_k, lap_row, moe_row, hist_k, moe_row_status)
    for k in range(A.shape[0]):
        row = A[k, :]
        nz_k = row[row != 0.0]
        if nz_k.size == 0:
            atom_cells.append((k, 0, None, None, None, "degenerate"))
            continue
        hist_k = quantize_hist(row if include_zeros else nz_k, delta)
        lap_k = laplacian_mle(nz_k)
        if nz_k.size >= row_fallback_min:
            moe_k, moe_k_status = moe_fit_samples(nz_k), "ok"
        else:
            moe_k, moe_k_status = moe_g, "fallback-global"
        atom_cells.append((k, int(nz_k.size), lap_k, moe_k, hist_k, moe_k_status))

    def aggregate(model_pick: str) -> float:
        num = den = 0.0
        for _, n_k, lap_k, moe_k, hist_k, _st in atom_cells:
            model = lap_k if model_pick == "laplacian" else moe_k
            if hist_k is None or model is None:
                continue
            num += n_k * kld_bits(hist_k, model)
            den += n_k
        return num / den if den else float("nan")

    for name in ("laplacian", "moe"):
        report.rows.append(
            FitRow(
                model=name, fit_scope="atom", eval_scope="atom", atom=-1,
                params="", n=int(nz.size), kld_bits=aggregate(name),
                status="aggregate",
            )
        )

    for k, n_k, lap_k, moe_k, hist_k, moe_k_status in atom_cells:
        st = "degenerate" if hist_k is None else "ok"
        add("laplacian", "atom", "atom", k, lap_k, n_k, hist_k, st)
        add(
            "moe", "atom", "atom", k, moe_k, n_k, hist_k,
            moe_k_status if hist_k is not None else "degenerate",
        )
        add("laplacian", "global", "atom", k, lap_g if hist_k is not None else None,
            n_k, hist_k, st)
        add("moe", "global", "atom", k, moe_g if hist_k is not None else None,
            n_k, hist_k, st)

    return report
