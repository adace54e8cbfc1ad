"""Command-line entry point ``ising-detect``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import experiments, samplers, theory
from .model import KINDS, PLACEMENTS, build_coupling, condition_report, make_signal
from .statistics import VARIANTS, StatisticKind, evaluate_statistic
from .testing import TYPE_ONE_STREAM, ModelSpec, calibrate, estimate_power

RESULT_HEADER = "theta,n,s,B,stat,alpha,m_null,replicates,crit,p_hat,ci"


def _stat_name(text: str) -> str:
    name = text.replace("-", "_")
    if name not in VARIANTS:
        raise argparse.ArgumentTypeError(f"unknown statistic {text!r}; choose from {', '.join(VARIANTS)}")
    return name


def _kind_name(text: str) -> str:
    name = text.replace("-", "_")
    if name not in KINDS or name == "custom":
        raise argparse.ArgumentTypeError(f"unknown coupling kind {text!r}")
    return name


def _add_model_args(p: argparse.ArgumentParser, theta_default: Optional[float] = 0.5):
    p.add_argument("--kind", type=_kind_name, default="curie_weiss", help="coupling family")
    p.add_argument("--n", type=int, default=100, help="number of spins")
    p.add_argument("--theta", type=float, default=theta_default, help="coupling strength")
    p.add_argument("--p", type=float, default=None, help="edge probability (erdos_renyi)")
    p.add_argument("--graph-seed", type=int, default=None, help="graph seed (erdos_renyi)")
    p.add_argument("--degree", type=int, default=None, help="degree (regular_circulant)")


def _add_sampler_args(p: argparse.ArgumentParser):
    p.add_argument("--sampler", choices=samplers.SAMPLERS, default="auto")
    p.add_argument("--burn-in", type=int, default=None, help="Glauber burn-in sweeps")


def _coupling(args):
    return build_coupling(args.kind, args.n, args.theta, p=args.p, seed=args.graph_seed, degree=args.degree)


def _glauber(args, n):
    cfg = samplers.GlauberConfig.for_size(n)
    if args.burn_in is not None:
        cfg = samplers.GlauberConfig(burn_in_sweeps=args.burn_in, scan=cfg.scan)
    return cfg


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w"), True


def _write(text: str, path) -> None:
    fh, close = _open_out(path)
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()


def cmd_sample(args) -> int:
    Q = _coupling(args)
    rng = np.random.default_rng(args.seed)
    mu = None
    if args.s > 0 and args.B != 0:
        mu = make_signal(args.n, args.s, args.B, args.placement, rng=rng)
    x = samplers.draw(Q, mu, rng, size=args.draws, sampler=args.sampler, glauber=_glauber(args, args.n))
    if args.histogram:
        totals = x.sum(axis=1).astype(int)
        values, counts = np.unique(totals, return_counts=True)
        text = "value,count\n" + "".join(f"{v},{c}\n" for v, c in zip(values, counts))
    else:
        text = "".join(" ".join(f"{v:+d}" for v in row) + "\n" for row in x)
    _write(text, args.out)
    return 0


def read_configurations(path) -> np.ndarray:
    """One configuration per line, spins separated by spaces or commas."""
    fh = sys.stdin if path == "-" else open(path)
    try:
        rows = [line.replace(",", " ").split() for line in fh if line.strip() and not line.startswith("#")]
    finally:
        if fh is not sys.stdin:
            fh.close()
    if not rows:
        raise ValueError("no configurations in input")
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise ValueError("configurations have different lengths")
    x = np.array([[int(v) for v in r] for r in rows])
    if not np.all(np.abs(x) == 1):
        raise ValueError("spins must be -1 or +1")
    return x.astype(np.int8)


def cmd_stat(args) -> int:
    x = read_configurations(args.input)
    n = x.shape[1]
    Q = None
    if args.stat == "cond_centered":
        Q = build_coupling(args.kind, n, args.theta, p=args.p, seed=args.graph_seed, degree=args.degree)
    values = np.atleast_1d(evaluate_statistic(StatisticKind(args.stat, Q), x))
    _write("index,statistic\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(values.tolist())), args.out)
    return 0


def cmd_theory(args) -> int:
    rows = ["quantity,parameter,value"]
    theta = args.theta
    rows.append(f"magnetization,theta={theta},{theory.magnetization(theta)!r}")
    for a in args.a:
        r = theory.detection_boundary(theta, a)
        rows.append(f"boundary_r,a={a},{'undetectable' if r is None else repr(r)}")
    law = theory.null_limit(theta)
    for q in args.quantiles:
        rows.append(f"limit_quantile_{law.variant},p={q},{float(law.quantile(q))!r}")
    if args.n is not None:
        Q = _coupling(args)
        rep = condition_report(Q)
        rows.append(f"inf_norm,kind={Q.kind},{rep.inf_norm!r}")
        for t in args.t:
            rows.append(f"concentration_bound,t={t},{theory.concentration_bound(Q, t, rep.inf_norm)!r}")
    _write("\n".join(rows) + "\n", args.out)
    return 0


def _model_spec(args) -> ModelSpec:
    Q = _coupling(args)
    glauber = _glauber(args, args.n) if args.sampler in ("auto", "glauber") else None
    return ModelSpec(Q=Q, sampler=args.sampler, glauber=glauber, placement=args.placement)


def _result_row(args, s, B, stat, crit, replicates, est) -> str:
    p_hat = "" if est is None else repr(est.p_hat)
    ci = "" if est is None else repr(est.ci_halfwidth)
    return f"{args.theta},{args.n},{s},{B!r},{stat},{args.alpha},{args.m_null},{replicates},{crit.value!r},{p_hat},{ci}"


def cmd_calibrate(args) -> int:
    model = _model_spec(args)
    kind = StatisticKind(args.stat, model.Q if args.stat == "cond_centered" else None)
    crit = calibrate(model, kind, args.alpha, args.m_null, args.seed)
    est = None
    if args.replicates > 0:
        est = estimate_power(model, 0, 0.0, kind, crit, args.replicates, args.seed, key=(TYPE_ONE_STREAM,))
    _write(RESULT_HEADER + "\n" + _result_row(args, 0, 0.0, args.stat, crit, args.replicates, est) + "\n", args.out)
    return 0


def cmd_power(args) -> int:
    model = _model_spec(args)
    kind = StatisticKind(args.stat, model.Q if args.stat == "cond_centered" else None)
    crit = calibrate(model, kind, args.alpha, args.m_null, args.seed)
    rows = [RESULT_HEADER]
    for i, B in enumerate(args.B):
        est = estimate_power(model, args.s, B, kind, crit, args.replicates, args.seed, key=(1, 0, i))
        rows.append(_result_row(args, args.s, B, args.stat, crit, args.replicates, est))
    _write("\n".join(rows) + "\n", args.out)
    return 0


def figure_config(args) -> experiments.ExperimentConfig:
    overrides = dict(
        n=args.n,
        theta=args.theta,
        kind=args.kind,
        stat=args.stat,
        alpha=args.alpha,
        m_null=args.m_null,
        replicates=args.replicates,
        master_seed=args.seed,
        sampler=args.sampler,
        p=args.p,
        graph_seed=args.graph_seed,
        degree=args.degree,
    )
    if args.step is not None:
        lo_a, hi_a = args.a_range or (0.05, 0.5)
        lo_r, hi_r = args.r_range or (0.05, 0.5)
        overrides["a_grid"] = (lo_a, hi_a, args.step)
        overrides["r_grid"] = (lo_r, hi_r, args.step)
    elif args.a_range or args.r_range:
        raise SystemExit("--a-range/--r-range need --step")
    if args.config:
        return experiments.ExperimentConfig.from_json(args.config, **overrides)
    return experiments.ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def cmd_figure1(args) -> int:
    cfg = figure_config(args)
    surface = experiments.run_power_grid(cfg, threads=args.threads)
    paths = experiments.emit_surface(surface, args.out, figure=not args.no_figure)
    sys.stdout.write(experiments.surface_csv(surface))
    failed = sum(c.error is not None for c in surface.cells)
    for p in paths:
        print(f"# wrote {p}", file=sys.stderr)
    if failed:
        print(f"# {failed} cells failed", file=sys.stderr)
    return 0


def cmd_dump_coupling(args) -> int:
    _write(_coupling(args).to_csv(), args.out)
    return 0


def cmd_verify(args) -> int:
    results = experiments.verify_suite(args.scale)
    _write(experiments.format_report(results), args.out)
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ising-detect", description="Sparse signal detection under Ising models")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw spin configurations")
    _add_model_args(p)
    _add_sampler_args(p)
    p.add_argument("--s", type=int, default=0, help="signal sparsity")
    p.add_argument("--B", type=float, default=0.0, help="signal strength")
    p.add_argument("--placement", choices=PLACEMENTS, default="prefix")
    p.add_argument("--draws", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--histogram", action="store_true", help="emit value,count of the total spin instead")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("stat", help="evaluate a statistic on stored configurations")
    p.add_argument("input", help="file with one configuration per line, '-' for stdin")
    p.add_argument("--stat", type=_stat_name, default="sqrt_n_mean")
    p.add_argument("--kind", type=_kind_name, default="curie_weiss")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--graph-seed", type=int, default=None)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stat)

    p = sub.add_parser("theory", help="closed-form quantities")
    _add_model_args(p)
    p.set_defaults(n=None)
    p.add_argument("--a", type=float, nargs="*", default=[0.1, 0.25, 0.4])
    p.add_argument("--quantiles", type=float, nargs="*", default=[0.05, 0.5, 0.95])
    p.add_argument("--t", type=float, nargs="*", default=[0.1, 0.2, 0.4])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_theory)

    for name, func, help_ in (
        ("calibrate", cmd_calibrate, "Monte Carlo critical value and type I error"),
        ("power", cmd_power, "empirical power at given signals"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_model_args(p)
        _add_sampler_args(p)
        p.add_argument("--stat", type=_stat_name, default="cond_centered")
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--m-null", type=int, default=500)
        p.add_argument("--replicates", type=int, default=300 if name == "power" else 0)
        p.add_argument("--placement", choices=PLACEMENTS, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        if name == "power":
            p.add_argument("--s", type=int, required=True)
            p.add_argument("--B", type=float, nargs="+", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("figure1", help="power surface over the (a, r) grid")
    p.add_argument("--config", default=None, help="JSON file with ExperimentConfig fields")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--kind", type=_kind_name, default=None)
    p.add_argument("--stat", type=_stat_name, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--m-null", type=int, default=None)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--step", type=float, default=None, help="grid step for both exponents")
    p.add_argument("--a-range", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--r-range", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sampler", choices=samplers.SAMPLERS, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--graph-seed", type=int, default=None)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--threads", type=int, default=None, help=f"worker cap; default ${experiments.THREADS_ENV}")
    p.add_argument("--no-figure", action="store_true", help="skip the PNG heatmap")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("dump-coupling", help="write the coupling matrix as CSV")
    _add_model_args(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_dump_coupling)

    p = sub.add_parser("verify", help="run the self-check report")
    p.add_argument("--scale", choices=("quick", "full"), default="quick")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        parser.exit(2, f"ising-detect: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
