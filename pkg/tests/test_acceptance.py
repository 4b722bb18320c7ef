"""Acceptance suite: one test per release criterion.

Each test prints a single summary line with its measured numbers so a
`pytest -v -s tests/test_acceptance.py` run reads as a checklist. The
slow experiment criteria (6 and 7) sit at the end of the file.
"""

import time

import numpy as np
import pytest

from usm import (
    CodeOptions,
    Joe,
    Laplacian,
    Moe,
    RecoveryConfig,
    denoise_image,
    dict_gradient,
    dict_objective,
    extract_patches,
    joe_fit_moments,
    kld_bits,
    laplacian_mle,
    lla_code,
    moe_fit_moments,
    moe_fit_samples,
    omp,
    overcomplete_dct_dictionary,
    quantize_hist,
    reassemble,
    regret_bits,
    run_recovery,
    scalar_threshold,
    synth_texture_image,
    weighted_l1,
    zeta_moe,
)

from oracles import cd_weighted_lasso, grid_threshold, pdf_mass

TIGHT = CodeOptions(inner_tol=1e-13, inner_max_iters=40000)


def test_criterion_1_zeta_anchor_values():
    t0 = time.time()
    m = Moe(2.8, 0.07)
    at_zero = zeta_moe(0.0, m)
    at_mean = zeta_moe(m.beta / (m.kappa - 1.0), m)
    assert abs(at_zero - 0.1984) <= 5e-4
    assert abs(at_mean - 0.0847) <= 5e-4
    print(
        f"criterion 1 PASS: zeta anchors {at_zero:.5f} / {at_mean:.5f} "
        f"within 5e-4 of 0.1984 / 0.0847 ({time.time() - t0:.2f}s)"
    )


def test_criterion_2_moment_round_trips():
    t0 = time.time()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        kappa = float(rng.uniform(2.1, 10.0))
        beta = float(np.exp(rng.uniform(np.log(0.01), np.log(10.0))))
        m = Moe(kappa, beta)
        back = moe_fit_moments(m.moment(1), m.moment(2))
        worst = max(
            worst,
            abs(back.kappa - kappa) / kappa,
            abs(back.beta - beta) / beta,
        )
    for _ in range(100):
        t1 = float(rng.uniform(0.5, 20.0))
        t2 = t1 * float(rng.uniform(1.5, 50.0))
        j = Joe(t1, t2)
        back = joe_fit_moments(j.moment(1), j.moment(2))
        worst = max(
            worst,
            abs(back.theta1 - t1) / t1,
            abs(back.theta2 - t2) / t2,
        )
    assert worst <= 1e-6
    print(
        f"criterion 2 PASS: 200 moment round trips, worst relative error "
        f"{worst:.2e} <= 1e-6 ({time.time() - t0:.2f}s)"
    )


def test_criterion_3_solver_oracle_equivalence():
    t0 = time.time()
    rng = np.random.default_rng(1)
    worst_gap = 0.0
    for _ in range(100):
        D = rng.standard_normal((5, 8))
        D /= np.linalg.norm(D, axis=0)
        x = rng.standard_normal(5)
        w = rng.uniform(0.05, 1.0, size=8)
        res = weighted_l1(x, D, w, TIGHT)
        _, f_cd = cd_weighted_lasso(x, D, w)
        worst_gap = max(worst_gap, abs(res.objective - f_cd))
    assert worst_gap <= 1e-7

    models = [Laplacian(4.0), Moe(2.8, 0.07), Moe(3.0, 1.0), Joe(5.0, 50.0), Joe(20.0, 100.0)]
    for i in range(100):
        model = models[i % len(models)]
        x = float(rng.uniform(-2.5, 2.5))
        lam = float(rng.uniform(0.02, 0.6))
        a = scalar_threshold(x, lam, model)
        g, fg = grid_threshold(x, lam, model)
        fa = (abs(x) - abs(a)) ** 2 + lam * float(model.reg_value(abs(a)))
        assert fa <= fg + 1e-9 or abs(a - g) <= 1.5e-4
    print(
        f"criterion 3 PASS: 100 weighted-l1 objectives within {worst_gap:.2e} "
        f"of the CD oracle; 100 thresholds at grid resolution ({time.time() - t0:.2f}s)"
    )


def test_criterion_4_universal_fit_dominance():
    t0 = time.time()
    wins = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        rates = np.exp(rng.uniform(np.log(5.0), np.log(25.0), size=20))
        rows = [rng.laplace(scale=1.0 / t, size=5000) for t in rates]
        values = np.concatenate(rows)
        hist = quantize_hist(values)
        k_moe = kld_bits(hist, moe_fit_samples(values))
        k_lap = kld_bits(hist, laplacian_mle(values))
        wins += k_moe < k_lap
    assert wins >= 18
    print(
        f"criterion 4 PASS: global MOE beats global Laplacian KLD in "
        f"{wins}/20 heterogeneous seeds (need 18) ({time.time() - t0:.2f}s)"
    )


def test_criterion_5_lla_monotone_objectives():
    t0 = time.time()
    rng = np.random.default_rng(2)
    model = Moe(2.8, 0.07)
    worst_rise = -np.inf
    for _ in range(100):
        D = rng.standard_normal((8, 12))
        D /= np.linalg.norm(D, axis=0)
        x = rng.standard_normal(8)
        x /= np.linalg.norm(x)
        opts = CodeOptions(lam=float(rng.uniform(0.05, 0.5)), lla_iters=5)
        res = lla_code(x, D, model, opts)
        objs = np.asarray(res.info["round_objectives"])
        assert objs.shape == (5,)
        worst_rise = max(worst_rise, float(np.max(np.diff(objs))))
    assert worst_rise <= 1e-9
    print(
        f"criterion 5 PASS: 100 MOE-LLA runs, worst round-to-round rise "
        f"{worst_rise:.2e} <= 1e-9 ({time.time() - t0:.2f}s)"
    )


def test_criterion_8_regret_per_sample_sublinear():
    t0 = time.time()
    small_rates, big_rates = [], []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        values = Laplacian(10.0).sample(rng, 10_000)
        q = moe_fit_samples(values[values != 0.0])
        small_rates.append(regret_bits(values[:100], q) / 100.0)
        big_rates.append(regret_bits(values, q) / 10_000.0)
    mean_small = float(np.mean(small_rates))
    mean_big = float(np.mean(big_rates))
    assert mean_small >= 2.0 * mean_big
    print(
        f"criterion 8 PASS: regret/n {mean_small:.4f} bits at n=100 vs "
        f"{mean_big:.4f} at n=10000, ratio {mean_small / mean_big:.1f}x >= 2x "
        f"({time.time() - t0:.2f}s)"
    )


def test_criterion_9_conservation_identities():
    t0 = time.time()
    for model in [
        Laplacian(1.0),
        Laplacian(10.0),
        Moe(2.8, 0.07),
        Moe(3.0, 1.0),
        Joe(5.0, 50.0),
        Joe(20.0, 100.0),
    ]:
        assert abs(pdf_mass(model) - 1.0) <= 1e-6

    rng = np.random.default_rng(3)
    img = rng.uniform(0.0, 1.0, size=(16, 21))
    ps = extract_patches(img, width=8, stride=1)
    out = reassemble(ps.patches, ps.geometry)
    assert float(np.max(np.abs(out - img))) <= 1e-12

    D = rng.standard_normal((64, 128))
    D /= np.linalg.norm(D, axis=0)
    x = rng.standard_normal(64)
    res, support = omp(x, D, max_nonzeros=10)
    r = x - D @ res.coeffs
    assert support.size > 0
    assert float(np.max(np.abs(D[:, support].T @ r))) <= 1e-10 * np.linalg.norm(x)

    Dg = rng.standard_normal((6, 10))
    Dg /= np.linalg.norm(Dg, axis=0)
    X = rng.standard_normal((6, 40))
    A = rng.standard_normal((10, 40)) * 0.4
    h = 1e-6
    for mu in (0.0, 0.5):
        G = dict_gradient(Dg, X, A, mu)
        for _ in range(3):
            V = rng.standard_normal(Dg.shape)
            fd = (
                dict_objective(Dg + h * V, X, A, mu)
                - dict_objective(Dg - h * V, X, A, mu)
            ) / (2.0 * h)
            assert abs(float(np.sum(G * V)) - fd) <= 1e-4 * abs(fd)
    print(
        "criterion 9 PASS: density mass 1e-6, patch identity 1e-12, "
        f"OMP orthogonality 1e-10, dictionary gradient 1e-4 ({time.time() - t0:.2f}s)"
    )


@pytest.mark.slow
def test_criterion_6_support_recovery_direction():
    t0 = time.time()
    good_seeds = 0
    details = []
    for seed in range(5):
        rep = run_recovery(RecoveryConfig(seed=seed))
        acc_l1 = rep.accuracy("l1")
        acc_moe = rep.accuracy("moe")
        gaps = [acc_moe[s] - acc_l1[s] for s in sorted(acc_l1)]
        ok = all(g >= 0.0 for g in gaps)
        good_seeds += ok
        details.append(f"seed {seed}: min gap {min(gaps):+.3f} {'ok' if ok else 'MISS'}")
    assert good_seeds >= 4, "; ".join(details)
    print(
        f"criterion 6 PASS: MOE accuracy >= l1 accuracy at every sigma in "
        f"{good_seeds}/5 seeds (need 4) ({time.time() - t0:.1f}s)"
    )


@pytest.mark.slow
def test_criterion_7_denoising_direction():
    t0 = time.time()
    sigma = 20.0 / 255.0
    D0 = overcomplete_dct_dictionary(8, 16)
    strict_wins = 0
    margins = []
    for seed in range(10):
        img = synth_texture_image(64, seed=seed)
        rng = np.random.default_rng([seed, 77])
        noisy = img + sigma * rng.standard_normal(img.shape)
        res_moe = denoise_image(
            noisy, sigma, D0, Moe(2.8, 0.07), adapt_iters=2, reference=img
        )
        res_l1 = denoise_image(
            noisy, sigma, D0, Laplacian(1.0), adapt_iters=2, reference=img
        )
        margin = res_moe.image_psnr - res_l1.image_psnr
        margins.append(margin)
        assert margin >= -0.05, f"seed {seed}: MOE trails by {-margin:.3f} dB"
        strict_wins += margin > 0.0
    assert strict_wins >= 6
    print(
        f"criterion 7 PASS: MOE/MOE image PSNR within -0.05 dB everywhere, "
        f"strictly ahead in {strict_wins}/10 seeds, mean margin "
        f"{np.mean(margins):+.2f} dB ({time.time() - t0:.1f}s)"
    )
