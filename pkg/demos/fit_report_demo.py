"""Scoring priors on heterogeneous coefficients in bits.

Builds a matrix whose rows have very different scales, the situation a
single-rate prior handles poorly, then prints the fit report: per-model
divergence from the quantized empirical distribution.
"""

import numpy as np

from usm import fit_report


def main():
    rng = np.random.default_rng(2)
    n_rows, n_cols = 12, 20_000

    rates = np.exp(rng.uniform(np.log(5.0), np.log(25.0), size=n_rows))
    A = np.vstack([rng.laplace(scale=1.0 / t, size=n_cols) for t in rates])
    print(f"rows: {n_rows}, columns: {n_cols}, rate spread "
          f"{rates.min():.1f} .. {rates.max():.1f}")

    rep = fit_report(A)
    print(rep.text())

    rows = {r.model: r for r in rep.summary_rows() if r.fit_scope == "global"}
    gap = rows["laplacian"].kld_bits - rows["moe"].kld_bits
    print(f"mixture prior saves {gap:.3f} bits/sample of divergence "
          "over the single-rate fit on this data")


if __name__ == "__main__":
    main()
