"""Command-line interface.

Exit codes: 0 success, 1 validation or invariant failure, 2 I/O or format
error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import poly
from .artifacts import write_csv, write_json, write_manifest
from .eigen import eigendecompose
from .errors import ChebfilterError, FormatError, ParseError
from .graph import generate_synthetic, homophily, load_dataset, read_split
from .models import ModelConfig
from .operators import NORMALIZED_LAPLACIAN, build_operator
from .spectral import apply_exact_filter, build_ring, impulse_filter, recover_perfect_filter
from .training import Split, confidence_interval, repeat_runs, train

log = logging.getLogger("chebfilter")

APPROX_BASES = {
    # basis -> node scheme
    "chebyshev": "chebyshev",
    "lagrange": "equispaced",
    "monomial": "equispaced",
    "bernstein": "equispaced",
}


class UsageError(ChebfilterError):
    pass


# -- function registry for `approx` -----------------------------------------

def parse_function(spec: str):
    """``runge``, ``step:TAU``, ``exp_decay:A``, ``const:C`` or ``poly:c0,c1,...``."""
    name, _, arg = spec.partition(":")
    if name == "runge":
        return poly.runge
    if name == "step":
        tau = float(arg or 0.0)
        return lambda x: np.where(np.asarray(x) < tau, 1.0, 0.0)
    if name == "exp_decay":
        a = float(arg or 1.0)
        return lambda x: np.exp(-a * (np.asarray(x) + 1.0))
    if name == "const":
        c = float(arg or 1.0)
        return lambda x: np.full(np.shape(x), c)
    if name == "poly":
        coeffs = poly.FilterCoefficients("monomial", [float(c) for c in arg.split(",")])
        return lambda x: poly.eval_monomial(coeffs, x)
    raise UsageError(f"unknown function {spec!r}")


def approximant(h, basis: str, K: int):
    if basis == "chebyshev":
        return poly.cheb_interpolate(h, K)
    if basis == "lagrange":
        nodes = poly.equispaced_nodes(K)
        values = h(nodes)
        return lambda x: poly.lagrange_from_values(nodes, values, x)
    if basis == "monomial":
        return poly.vandermonde_interpolate(h, poly.equispaced_nodes(K))
    if basis == "bernstein":
        return poly.bernstein_approximate(h, max(K, 1))
    raise UsageError(f"unknown basis {basis!r}; expected one of {sorted(APPROX_BASES)}")


def cmd_approx(args) -> list:
    h = parse_function(args.fn)
    bases = [b.strip() for b in args.bases.split(",") if b.strip()]
    orders = [int(k) for k in args.orders.split(",") if k.strip()]
    rows = []
    for basis in bases:
        if basis not in APPROX_BASES:
            raise UsageError(f"unknown basis {basis!r}; expected one of {sorted(APPROX_BASES)}")
        for K in orders:
            try:
                err = poly.max_grid_error(h, approximant(h, basis, K), args.grid)
            except poly.ConditioningError as exc:
                log.warning("%s K=%d skipped: %s", basis, K, exc)
                err = float("nan")
            rows.append((basis, K, err, APPROX_BASES[basis]))
    return [write_csv(args.out / "errors.csv", ["basis", "K", "max_error", "node_scheme"], rows)]


def cmd_ring_demo(args) -> list:
    eig = eigendecompose(build_operator(build_ring(args.n), NORMALIZED_LAPLACIAN))
    x = np.zeros(args.n)
    x[0] = 1.0
    columns = {}
    for name, target in (("low_pass", 0.0), ("high_pass", 2.0), ("band_pass", 1.0)):
        h = impulse_filter(target, args.tol)
        if not h(eig.eigenvalues).any():
            log.warning("%s: no eigenvalue within %g of %g on a %d-ring; output is zero",
                        name, args.tol, target, args.n)
        columns[name] = apply_exact_filter(eig, h, x)
    rows = [(i, x[i], columns["low_pass"][i], columns["high_pass"][i], columns["band_pass"][i])
            for i in range(args.n)]
    header = ["node", "input", "low_pass", "high_pass", "band_pass"]
    return [write_csv(args.out / "ring_demo.csv", header, rows)]


def _read_vector(path) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    values.append(float(line))
                except ValueError:
                    raise ParseError(path, lineno, "expected a number") from None
    return np.array(values)


def cmd_recover(args) -> list:
    if args.ring:
        graph = build_ring(args.ring)
        y = np.where(np.arange(args.ring) % 2 == 0, 1.0, -1.0) if args.labels is None else None
        labels = None if args.labels is None else _read_vector(args.labels).astype(int)
    else:
        _require(args, "edges", "features", "labels")
        ds = load_dataset(args.edges, args.features, args.labels)
        graph, labels, y = ds.graph, ds.labels, None
    if y is None:
        classes = np.unique(labels)
        if len(labels) != graph.n or len(classes) != 2:
            raise UsageError("recovery needs exactly two label classes, one label per node")
        y = np.where(labels == classes[1], 1.0, -1.0)
    eig = eigendecompose(build_operator(graph, NORMALIZED_LAPLACIAN))
    if args.signal:
        x = _read_vector(args.signal)
    else:
        x = np.random.default_rng(args.seed).standard_normal(graph.n)
    filt = recover_perfect_filter(eig, x, y, args.eps)
    y_hat = apply_exact_filter(eig, filt, x)
    err = float(np.max(np.abs(y_hat - y)))
    log.info("round-trip max error %.3e", err)
    out = [write_csv(args.out / "filter.csv", ["lambda", "response"],
                     zip(filt.lambdas, filt.responses))]
    out.append(write_json(args.out / "recovery.json", {"n": graph.n, "max_roundtrip_error": err}))
    if err > 1e-6:
        raise ChebfilterError(f"recovered filter reproduces the labels only to {err:.3e}")
    return out


def _require(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"missing required options: {' '.join(missing)}")


def _dataset(args):
    if getattr(args, "synthetic", None):
        seed = 0 if args.seed is None else args.seed
        return generate_synthetic(args.n, args.synthetic, seed)
    _require(args, "edges", "features", "labels")
    for p in (args.edges, args.features, args.labels):
        if not Path(p).exists():
            raise FileNotFoundError(f"no such file: {p}")
    return load_dataset(args.edges, args.features, args.labels)


def _jobs(requested: int) -> int:
    cap = int(os.environ.get("CHEBFILTER_THREADS", "1"))
    return max(1, min(requested, cap))


def cmd_train(args) -> list:
    config = ModelConfig.from_json(args.config) if args.config else ModelConfig()
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    ds = _dataset(args)
    outputs = []
    if args.split:
        raw = read_split(args.split, ds.n)
        split = Split(raw["train"], raw["val"], raw["test"])
        reports = []
        for r in range(args.runs):
            reports.append(train(ds, split, config.replace(seed=config.seed + r)))
        mean, ci = confidence_interval([r.test_acc for r in reports])
    else:
        result = repeat_runs(ds, args.regime, config, args.runs, _jobs(args.jobs))
        reports, mean, ci = result.reports, result.mean, result.ci95
    for r, rep in enumerate(reports):
        outputs.append(write_csv(args.out / f"curve_run{r}.csv", ["epoch", "train_loss", "val_acc"],
                                 ((e, l, a) for e, (l, a) in enumerate(zip(rep.train_loss, rep.val_acc)))))
        if rep.filter is not None:
            outputs.append(write_csv(args.out / f"filter_run{r}.csv", ["lambda", "response"],
                                     zip(rep.filter.lambdas, rep.filter.responses)))
    ckpt = {name: ad.Tensor(v) for name, v in reports[0].state.items()}
    ad.save_checkpoint(ckpt, args.out / "checkpoint.json")
    outputs.append(args.out / "checkpoint.json")
    outputs.append(write_json(args.out / "report.json", {
        "config": config.to_dict(),
        "regime": None if args.split else args.regime,
        "runs": args.runs,
        "mean_test_acc": mean,
        "ci95": ci,
        "per_run": [rep.to_dict(include_timing=False) for rep in reports],
    }))
    print(f"test accuracy {100 * mean:.2f} +- {100 * ci:.2f} over {args.runs} run(s)")
    args._seeds = [config.seed + r for r in range(args.runs)]
    args._config = config.to_dict()
    return outputs


def cmd_stats(args) -> list:
    ds = _dataset(args)
    stats = {
        "n": ds.n,
        "m": ds.graph.m,
        "f": int(ds.features.shape[1]),
        "C": ds.num_classes,
        "homophily": homophily(ds),
    }
    print(json.dumps(stats, sort_keys=True))
    return [write_json(args.out / "stats.json", stats)]


def cmd_replay(args) -> list:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    argv = list(manifest["argv"])
    if "--out" in argv:
        i = argv.index("--out")
        argv[i + 1] = str(args.out)
    else:
        argv += ["--out", str(args.out)]
    code = main(argv)
    if code:
        raise ChebfilterError(f"replayed command exited with {code}")
    return []


def _add_dataset_flags(p):
    p.add_argument("--edges", type=Path)
    p.add_argument("--features", type=Path)
    p.add_argument("--labels", type=Path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chebfilter", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approx", help="polynomial approximation error study")
    p.add_argument("--fn", default="runge")
    p.add_argument("--bases", default="chebyshev,lagrange,bernstein")
    p.add_argument("--orders", default="2,4,6,8,10,12,14,16,18,20")
    p.add_argument("--grid", type=int, default=1001)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("ring-demo", help="impulse filters on a ring graph")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_ring_demo)

    p = sub.add_parser("recover", help="construct a perfectly separating filter")
    p.add_argument("--ring", type=int)
    _add_dataset_flags(p)
    p.add_argument("--signal", type=Path, help="one value per node; random if omitted")
    p.add_argument("--eps", type=float, default=1e-8)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("train", help="train a model over repeated random splits")
    p.add_argument("--config", type=Path)
    _add_dataset_flags(p)
    p.add_argument("--synthetic", choices=["homophilic", "heterophilic"])
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--split", type=Path, help="fixed split JSON instead of random splits")
    p.add_argument("--regime", choices=["standard", "sparse", "full"], default="standard")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("stats", help="dataset statistics")
    _add_dataset_flags(p)
    p.add_argument("--synthetic", choices=["homophilic", "heterophilic"])
    p.add_argument("--n", type=int, default=200)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest", type=Path)
    p.set_defaults(func=cmd_replay)

    for name, p in sub.choices.items():
        p.add_argument("--out", type=Path, default=Path("out"))
        if name != "train":
            p.add_argument("--seed", type=int, default=0)
        else:
            p.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        outputs = args.func(args)
        if args.command != "replay":
            inputs = [p for p in (getattr(args, k, None) for k in
                                  ("edges", "features", "labels", "config", "signal", "split"))
                      if p is not None]
            config = getattr(args, "_config", None) or {
                k: (str(v) if isinstance(v, Path) else v)
                for k, v in vars(args).items() if k not in ("func", "out") and not k.startswith("_")
            }
            seeds = getattr(args, "_seeds", None) or [getattr(args, "seed", None)]
            write_manifest(args.out, args.command, argv, config, seeds, inputs, outputs)
    except (FormatError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ChebfilterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
