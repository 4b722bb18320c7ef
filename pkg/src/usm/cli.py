"""Command-line interface: ``usm`` with fit/code/learn/denoise/recover/classify.

Every option can also come from a plain-text config file (``--config``,
``key = value`` lines, ``#`` comments); explicit flags win over the file and
unknown keys are rejected. Exit codes: 0 success, 1 runtime failure, 2 usage
error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coder import CodeOptions, constrained_code, constrained_code_columns, lla_code, lla_code_columns, weighted_l1_columns
from .data import FormatError, read_matrix, read_pgm, write_matrix, write_pgm
from .dictlearn import LearnOptions, learn
from .empirics import fit_report
from .experiments import (
    RecoveryConfig,
    classify_columns,
    denoise_image,
    run_recovery,
)
from .parallel import run_blocks
from .priors import EstimationError, Joe, Laplacian, Moe, cmoe_from_samples

_UNSET = object()


@dataclass(frozen=True)
class PriorSpec:
    """Parsed --prior string: family name plus numeric parameters."""

    kind: str
    params: tuple

    def build(self):
        """Instantiate the prior; cmoe has no standalone density."""
        if self.kind == "laplacian":
            return Laplacian(*self.params)
        if self.kind == "moe":
            return Moe(*self.params)
        if self.kind == "joe":
            return Joe(*self.params)
        raise ValueError("cmoe is data-conditioned; supported only by `usm code`")


def parse_prior(text: str) -> PriorSpec:
    """Parse 'laplacian:t | moe:k,b | joe:t1,t2 | cmoe:n0'."""
    kind, sep, rest = text.partition(":")
    kind = kind.strip().lower()
    arity = {"laplacian": 1, "moe": 2, "joe": 2, "cmoe": 1}
    if kind not in arity or not sep:
        raise argparse.ArgumentTypeError(
            f"bad prior {text!r}; use laplacian:t | moe:k,b | joe:t1,t2 | cmoe:n0"
        )
    try:
        params = tuple(float(p) for p in rest.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad prior parameters in {text!r}") from None
    if len(params) != arity[kind]:
        raise argparse.ArgumentTypeError(
            f"prior {kind} takes {arity[kind]} parameter(s), got {len(params)}"
        )
    if kind == "cmoe" and (params[0] < 1 or params[0] != int(params[0])):
        raise argparse.ArgumentTypeError("cmoe:n0 needs a positive integer n0")
    try:
        spec = PriorSpec(kind, params)
        if kind != "cmoe":
            spec.build()  # validate parameter ranges eagerly
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    return spec


def _floats(text: str) -> tuple:
    try:
        return tuple(float(p) for p in text.split(",") if p.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from None


def _names(text: str) -> tuple:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"bad boolean {text!r}")


@dataclass
class Opt:
    """One CLI option: flag name, converter, default, help text."""

    name: str  # long flag without leading dashes
    conv: object
    default: object
    help: str
    flag: bool = False  # presence toggle (store_true)
    required: bool = False

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


_COMMON = [
    Opt("config", str, None, "key = value config file merged under explicit flags"),
    Opt("seed", int, 0, "seed for any randomized step (default 0)"),
    Opt("out-dir", str, ".", "directory for default outputs (default .)"),
    Opt("save-artifacts", None, False, "write intermediate artifacts next to outputs",
        flag=True),
]

_PRIOR_HELP = "prior: laplacian:t | moe:k,b | joe:t1,t2 | cmoe:n0"
_THREADS = Opt("threads", int, None,
               "worker threads (default: all cores, or USM_THREADS)")

_OPTIONS: dict[str, list[Opt]] = {
    "fit": _COMMON + [
        Opt("coeffs", str, None, "coefficient matrix (.usm or .csv)", required=True),
        Opt("delta", float, 2.0**-8, "histogram bin width (default 2^-8)"),
        Opt("include-zeros", None, False, "keep zero coefficients in histograms",
            flag=True),
        Opt("out", str, None, "report CSV (default fit_report.csv)"),
    ],
    "code": _COMMON + [
        Opt("data", str, None, "sample matrix to code", required=True),
        Opt("dict", str, None, "dictionary matrix", required=True),
        Opt("prior", parse_prior, None, _PRIOR_HELP, required=True),
        Opt("lambda", float, None, "regularization weight (Lagrangian mode)"),
        Opt("epsilon", float, None, "residual budget (constrained mode)"),
        Opt("sigma", float, None, "noise std; epsilon = C*M*sigma^2"),
        Opt("sigma255", float, None, "noise std on the 0..255 scale"),
        Opt("C", float, 1.32, "epsilon scale factor (default 1.32)"),
        Opt("lla-iters", int, 5, "reweighting rounds (default 5)"),
        Opt("inner-tol", float, 1e-8, "inner solver tolerance (default 1e-8)"),
        Opt("inner-max-iters", int, 2000, "inner iteration cap (default 2000)"),
        Opt("out", str, None, "output coefficient matrix (default coeffs.usm)"),
        _THREADS,
    ],
    "learn": _COMMON + [
        Opt("data", str, None, "training sample matrix", required=True),
        Opt("K", int, None, "dictionary size", required=True),
        Opt("prior", parse_prior, None, _PRIOR_HELP, required=True),
        Opt("lambda", float, 0.1, "coding weight (default 0.1)"),
        Opt("mu", float, 1.0, "incoherence weight (default 1.0)"),
        Opt("outer-iters", int, 30, "alternation rounds (default 30)"),
        Opt("init-dict", str, None, "warm-start dictionary file"),
        Opt("dict-out", str, None, "output dictionary (default dictionary.usm)"),
    ],
    "denoise": _COMMON + [
        Opt("image", str, None, "input PGM image", required=True),
        Opt("dict", str, None, "starting dictionary", required=True),
        Opt("prior", parse_prior, None, _PRIOR_HELP, required=True),
        Opt("sigma", float, None, "noise std in [0,1] pixel units"),
        Opt("sigma255", float, None, "noise std on the 0..255 scale"),
        Opt("adapt-iters", int, 5, "dictionary adaptation rounds (default 5)"),
        Opt("C", float, 1.32, "epsilon scale factor (default 1.32)"),
        Opt("lambda", float, 0.1, "adaptation coding weight (default 0.1)"),
        Opt("mu", float, 1.0, "adaptation incoherence weight (default 1.0)"),
        Opt("reference", str, None, "clean reference PGM for PSNR"),
        Opt("add-noise", None, False,
            "treat the input as clean and add seeded noise first", flag=True),
        Opt("out", str, None, "output PGM (default denoised.pgm)"),
        _THREADS,
    ],
    "recover": _COMMON + [
        Opt("M", int, 64, "signal dimension (default 64)"),
        Opt("K", int, 256, "dictionary size (default 256)"),
        Opt("N", int, 500, "samples per run (default 500)"),
        Opt("L", int, 5, "planted sparsity (default 5)"),
        Opt("T", int, 2, "support-error tolerance (default 2)"),
        Opt("sigmas", _floats, (0.01, 0.02, 0.03, 0.04, 0.05,
                                0.06, 0.07, 0.08, 0.09, 0.10),
            "comma-separated noise levels"),
        Opt("methods", _names, ("l1", "moe"), "subset of l1,moe,joe,omp"),
        Opt("C", float, 1.32, "epsilon scale factor (default 1.32)"),
        Opt("out", str, None, "report CSV (default recovery.csv)"),
    ],
    "classify": _COMMON + [
        Opt("data", str, None, "samples to label", required=True),
        Opt("dicts", _names, None, "comma-separated class dictionaries",
            required=True),
        Opt("prior", parse_prior, None, _PRIOR_HELP, required=True),
        Opt("lambda", float, 0.1, "coding energy weight (default 0.1)"),
        Opt("out", str, None, "label CSV, one class index per line (default labels.csv)"),
        _THREADS,
    ],
}

_SUMMARY = {
    "fit": "fit priors to coefficients and score them by KLD",
    "code": "sparse-code samples against a dictionary",
    "learn": "learn an incoherent dictionary",
    "denoise": "denoise a PGM image with overlapping patches",
    "recover": "run the planted support-recovery experiment",
    "classify": "label samples by per-class coding energy",
}


def _formatter(prog: str) -> argparse.HelpFormatter:
    return argparse.HelpFormatter(prog, width=79)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="usm",
        description="universal sparse modeling: priors, coding, dictionaries",
        formatter_class=_formatter,
    )
    subs = parser.add_subparsers(dest="command", metavar="command", required=True)
    for cmd, opts in _OPTIONS.items():
        sub = subs.add_parser(cmd, help=_SUMMARY[cmd], description=_SUMMARY[cmd],
                              formatter_class=_formatter)
        for o in opts:
            if o.flag:
                sub.add_argument(f"--{o.name}", dest=o.dest, action="store_true",
                                 default=_UNSET, help=o.help)
            else:
                sub.add_argument(f"--{o.name}", dest=o.dest, type=o.conv,
                                 default=_UNSET, help=o.help, metavar="V")
    return parser


@dataclass
class RunConfig:
    """Fully resolved invocation: subcommand plus option values."""

    command: str
    options: dict


def _read_config_file(path: str, parser: argparse.ArgumentParser) -> dict:
    p = Path(path)
    if not p.exists():
        parser.error(f"config file not found: {p}")
    entries = {}
    for i, line in enumerate(p.read_text(encoding="ascii").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            parser.error(f"{p}: line {i}: expected key = value")
        entries[key.strip()] = value.strip()
    return entries


def resolve(ns: argparse.Namespace, parser: argparse.ArgumentParser) -> RunConfig:
    """Merge CLI flags, config file, and defaults; reject unknown keys."""
    opts = _OPTIONS[ns.command]
    by_dest = {o.dest: o for o in opts}
    values = {o.dest: vars(ns).get(o.dest, _UNSET) for o in opts}

    cfg_path = values.get("config")
    if cfg_path not in (_UNSET, None):
        for key, raw in _read_config_file(cfg_path, parser).items():
            dest = key.replace("-", "_")
            if dest not in by_dest or dest == "config":
                parser.error(f"unknown config key {key!r} for `usm {ns.command}`")
            if values[dest] is not _UNSET:
                continue  # explicit flag wins
            o = by_dest[dest]
            try:
                values[dest] = _bool(raw) if o.flag else o.conv(raw)
            except argparse.ArgumentTypeError as e:
                parser.error(f"config key {key!r}: {e}")

    for o in opts:
        if values[o.dest] is _UNSET:
            if o.required:
                parser.error(f"missing required option --{o.name}")
            values[o.dest] = o.default
    return RunConfig(command=ns.command, options=values)


def _need_file(path: str, parser, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        parser.error(f"{what} not found: {p}")
    return p


def _out_path(rc: RunConfig, key: str, default_name: str) -> Path:
    out_dir = Path(rc.options["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    given = rc.options.get(key)
    return Path(given) if given else out_dir / default_name


def _code_opts(o: dict) -> CodeOptions:
    lam = o.get("lambda")
    return CodeOptions(
        lam=0.1 if lam is None else lam,
        lla_iters=o.get("lla_iters", 5),
        inner_tol=o.get("inner_tol", 1e-8),
        inner_max_iters=o.get("inner_max_iters", 2000),
    )


def _cmd_fit(rc: RunConfig, parser) -> int:
    o = rc.options
    A = read_matrix(_need_file(o["coeffs"], parser, "coefficient file"))
    rep = fit_report(A, delta=o["delta"], include_zeros=o["include_zeros"])
    print(rep.text())
    out = _out_path(rc, "out", "fit_report.csv")
    rep.to_csv(out)
    print(f"wrote {out}")
    return 0


def _epsilon_from(o: dict, m: int, parser) -> float | None:
    """Residual budget from epsilon/sigma/sigma255, or None in Lagrangian mode."""
    modes = [k for k in ("lambda", "epsilon", "sigma", "sigma255") if o.get(k) is not None]
    if len(modes) != 1:
        parser.error("give exactly one of --lambda, --epsilon, --sigma, --sigma255")
    if o.get("lambda") is not None:
        return None
    if o.get("epsilon") is not None:
        return float(o["epsilon"])
    sigma = o["sigma"] if o.get("sigma") is not None else o["sigma255"] / 255.0
    return o["C"] * m * sigma * sigma


def _cmd_code(rc: RunConfig, parser) -> int:
    o = rc.options
    X = read_matrix(_need_file(o["data"], parser, "data file"))
    D = read_matrix(_need_file(o["dict"], parser, "dictionary file"))
    if X.shape[0] != D.shape[0]:
        parser.error(f"data rows {X.shape[0]} do not match dictionary rows {D.shape[0]}")
    eps = _epsilon_from(o, D.shape[0], parser)
    opts = _code_opts(o)
    spec: PriorSpec = o["prior"]
    n = X.shape[1]
    threads = o["threads"]

    if spec.kind == "cmoe":
        A = _code_cmoe(X, D, spec, eps, opts, threads)
    else:
        model = spec.build()

        def block(a: int, b: int):
            if eps is None:
                out, _ = lla_code_columns(X[:, a:b], D, model, opts)
            else:
                out, _ = constrained_code_columns(X[:, a:b], D, model, eps, opts)
            return out

        A = np.concatenate(run_blocks(block, n, threads), axis=1)

    resid = X - D @ A
    res2 = np.einsum("ij,ij->j", resid, resid)
    nnz = (A != 0).sum(axis=0)
    out = _out_path(rc, "out", "coeffs.usm")
    write_matrix(out, A)
    print(
        f"coded {n} samples: residual_sq mean {res2.mean():.6g} "
        f"max {res2.max():.6g}; mean nonzeros {nnz.mean():.2f}"
    )
    print(f"wrote {out}")
    return 0


def _code_cmoe(X, D, spec: PriorSpec, eps, opts: CodeOptions, threads) -> np.ndarray:
    """Conditional-Moe coding: seed each sample's prior from its own l1 pass."""
    n0 = int(spec.params[0])
    lap = Laplacian(1.0)  # theta enters only through lambda

    def block(a: int, b: int):
        Xb = X[:, a:b]
        if eps is None:
            A0, _ = lla_code_columns(Xb, D, lap, opts)
        else:
            A0, _ = constrained_code_columns(Xb, D, lap, eps, opts)
        out = np.zeros_like(A0)
        for j in range(Xb.shape[1]):
            mags = np.abs(A0[:, j])
            head = mags[mags > 0][:n0]
            if head.size < n0:
                out[:, j] = A0[:, j]  # too sparse to condition on; keep l1 codes
                continue
            model = cmoe_from_samples(head)
            if eps is None:
                out[:, j] = lla_code(Xb[:, j], D, model, opts).coeffs
            else:
                out[:, j] = constrained_code(Xb[:, j], D, model, eps, opts).coeffs
        return out

    return np.concatenate(run_blocks(block, X.shape[1], threads), axis=1)


def _cmd_learn(rc: RunConfig, parser) -> int:
    o = rc.options
    X = read_matrix(_need_file(o["data"], parser, "data file"))
    spec: PriorSpec = o["prior"]
    model = spec.build()
    dict_init = None
    if o["init_dict"]:
        dict_init = read_matrix(_need_file(o["init_dict"], parser, "init dictionary"))
    opts = LearnOptions(
        n_atoms=o["K"], prior=model, lam=o["lambda"], mu=o["mu"],
        outer_iters=o["outer_iters"], seed=o["seed"],
    )
    res = learn(X, opts, dict_init=dict_init)
    out = _out_path(rc, "dict_out", "dictionary.usm")
    write_matrix(out, res.dictionary)
    print(
        f"learned {o['K']} atoms over {o['outer_iters']} rounds: "
        f"objective {res.trace[0]:.6g} -> {res.trace[-1]:.6g}; "
        f"{len(res.reseeds)} reseeds"
    )
    print(f"wrote {out}")
    if o["save_artifacts"]:
        coeffs_path = _out_path(rc, None, "learn_coeffs.usm")
        write_matrix(coeffs_path, res.coeffs)
        trace_path = _out_path(rc, None, "learn_trace.csv")
        write_matrix(trace_path, res.trace[None, :])
        print(f"wrote {coeffs_path} and {trace_path}")
    return 0


def _cmd_denoise(rc: RunConfig, parser) -> int:
    o = rc.options
    img = read_pgm(_need_file(o["image"], parser, "image"))
    D = read_matrix(_need_file(o["dict"], parser, "dictionary file"))
    if o.get("sigma") is None and o.get("sigma255") is None:
        parser.error("give --sigma or --sigma255")
    if o.get("sigma") is not None and o.get("sigma255") is not None:
        parser.error("give only one of --sigma and --sigma255")
    sigma = o["sigma"] if o.get("sigma") is not None else o["sigma255"] / 255.0
    spec: PriorSpec = o["prior"]
    model = spec.build()

    reference = None
    noisy = img
    if o["add_noise"]:
        rng = np.random.default_rng(o["seed"])
        noisy = img + sigma * rng.standard_normal(img.shape)
        reference = img
    if o["reference"]:
        reference = read_pgm(_need_file(o["reference"], parser, "reference image"))

    res = denoise_image(
        noisy, sigma, D, model,
        adapt_iters=o["adapt_iters"], lam=o["lambda"], mu=o["mu"],
        c_epsilon=o["C"], reference=reference, threads=o["threads"],
    )
    out = _out_path(rc, "out", "denoised.pgm")
    write_pgm(out, res.image)
    if reference is not None:
        print(
            f"patch PSNR {res.patch_psnr:.2f} dB, image PSNR {res.image_psnr:.2f} dB "
            f"({res.n_patches} patches)"
        )
    else:
        print(f"PSNR n/a (no reference); {res.n_patches} patches")
    print(f"wrote {out}")
    if o["save_artifacts"]:
        noisy_path = _out_path(rc, None, "noisy.pgm")
        write_pgm(noisy_path, np.clip(noisy, 0.0, 1.0))
        dict_path = _out_path(rc, None, "adapted_dict.usm")
        write_matrix(dict_path, res.dictionary)
        print(f"wrote {noisy_path} and {dict_path}")
    return 0


def _cmd_recover(rc: RunConfig, parser) -> int:
    o = rc.options
    bad = [m for m in o["methods"] if m not in ("l1", "moe", "joe", "omp")]
    if bad:
        parser.error(f"unknown methods: {', '.join(bad)}")
    cfg = RecoveryConfig(
        m=o["M"], n_atoms=o["K"], n_samples=o["N"], sparsity=o["L"],
        support_tol=o["T"], sigmas=tuple(o["sigmas"]), methods=tuple(o["methods"]),
        c_epsilon=o["C"], seed=o["seed"],
    )
    rep = run_recovery(cfg)
    print(rep.text())
    out = _out_path(rc, "out", "recovery.csv")
    rep.to_csv(out)
    print(f"wrote {out}")
    return 0


def _cmd_classify(rc: RunConfig, parser) -> int:
    o = rc.options
    X = read_matrix(_need_file(o["data"], parser, "data file"))
    dicts = [read_matrix(_need_file(p, parser, "dictionary file")) for p in o["dicts"]]
    spec: PriorSpec = o["prior"]
    model = spec.build()
    opts = CodeOptions(lam=o["lambda"])
    threads = o["threads"]

    def block(a: int, b: int):
        labels, _ = classify_columns(X[:, a:b], dicts, o["lambda"], model, opts)
        return labels

    labels = np.concatenate(run_blocks(block, X.shape[1], threads))
    out = _out_path(rc, "out", "labels.csv")
    out.write_text("".join(f"{int(c)}\n" for c in labels), encoding="ascii")
    counts = np.bincount(labels, minlength=len(dicts))
    summary = ", ".join(f"class {c}: {n}" for c, n in enumerate(counts))
    print(f"labeled {labels.size} samples ({summary})")
    print(f"wrote {out}")
    return 0


_HANDLERS = {
    "fit": _cmd_fit,
    "code": _cmd_code,
    "learn": _cmd_learn,
    "denoise": _cmd_denoise,
    "recover": _cmd_recover,
    "classify": _cmd_classify,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    rc = resolve(ns, parser)
    try:
        return _HANDLERS[rc.command](rc, parser)
    except (ValueError, FormatError, EstimationError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
