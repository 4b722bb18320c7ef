"""Tour of the coefficient priors: densities, moments, and fitting.

Draws samples from a heavy-tailed mixture prior, recovers its parameters
from empirical moments, and compares the shrinkage rates each prior
implies for the coding step.
"""

import numpy as np

from usm import Joe, Laplacian, Moe, laplacian_mle, moe_fit_samples


def main():
    rng = np.random.default_rng(0)

    lap = Laplacian(10.0)
    moe = Moe(2.8, 0.07)
    joe = Joe(5.0, 50.0)

    print("densities at a few magnitudes")
    for t in (0.0, 0.05, 0.2, 1.0):
        print(
            f"  |a| = {t:4.2f}:  laplacian {lap.pdf(t):8.4f}   "
            f"moe {moe.pdf(t):8.4f}   joe {joe.pdf(t):8.4f}"
        )

    print("\nfirst two absolute moments")
    for name, m in (("laplacian", lap), ("moe", moe), ("joe", joe)):
        print(f"  {name:9s}  mu1 = {m.moment(1):.4f}  mu2 = {m.moment(2):.4f}")

    print("\nshrinkage rate (regularizer slope) near 0 and far out")
    for name, m in (("laplacian", lap), ("moe", moe), ("joe", joe)):
        print(
            f"  {name:9s}  at 0: {m.reg_deriv(0.0):8.3f}   "
            f"at 1: {m.reg_deriv(1.0):8.3f}"
        )

    n = 200_000
    draws = moe.sample(rng, n)
    refit = moe_fit_samples(draws)
    print(f"\nrefit from {n} draws of Moe(2.8, 0.07):")
    print(f"  kappa {refit.kappa:.3f}  beta {refit.beta:.4f}")

    lap_fit = laplacian_mle(draws)
    print(f"  best single-rate fit to the same draws: theta {lap_fit.theta:.3f}")


if __name__ == "__main__":
    main()
