"""Planted support recovery across noise levels, small scale.

Runs the recovery experiment at a reduced size so it finishes in
seconds, printing per-method accuracy as noise grows. The full-size
protocol lives behind `usm recover`.
"""

from usm import RecoveryConfig, run_recovery


def main():
    cfg = RecoveryConfig(
        m=32,
        n_atoms=64,
        n_samples=100,
        sparsity=4,
        sigmas=(0.01, 0.03, 0.05, 0.08),
        methods=("l1", "moe", "omp"),
        seed=0,
    )
    rep = run_recovery(cfg)
    print(rep.text())

    acc_l1 = rep.accuracy("l1")
    acc_moe = rep.accuracy("moe")
    better = sum(acc_moe[s] >= acc_l1[s] for s in cfg.sigmas)
    print(f"\nmixture prior matches or beats l1 at {better}/{len(cfg.sigmas)} "
          "noise levels on this draw")


if __name__ == "__main__":
    main()
