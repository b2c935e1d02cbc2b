"""Command line entry point: kdlab <subcommand> --config FILE [--seed N] [--out DIR]."""

import argparse
import sys
import time

from . import config as cfgmod
from .experiments import EXPERIMENTS
from .results import write_manifest

ORDER = ["estimate-kernel", "deterministic-limit", "substep-exactness", "generator-consistency",
         "stopping-stats", "zeta-wiener", "simulate-limit", "martingale-check", "weak-convergence",
         "tightness", "sobolev-diagnostic", "simulate-kinetic"]


def build_parser():
    p = argparse.ArgumentParser(prog="kdlab", description="Diffusion-limit lab for a stochastic kinetic BGK model.")
    p.add_argument("subcommand", choices=sorted(EXPERIMENTS) + ["all"])
    p.add_argument("--config", help="key=value configuration file (defaults to the packaged one)")
    p.add_argument("--seed", type=int, help="master seed, overrides the config")
    p.add_argument("--out", help="output directory, overrides the config")
    p.add_argument("-q", "--quiet", action="store_true", help="suppress per-check lines")
    return p


def run(names, cfg, out, echo=print):
    tables = []
    for name in names:
        t0 = time.perf_counter()
        table = EXPERIMENTS[name](cfg)
        table.write(out)
        tables.append(table)
        for r in table.checks():
            echo(f"{'PASS' if r.passed else 'FAIL'}  {name}: {r.statistic}"
                 f"{'' if r.eps is None else f' eps={r.eps:g}'} = {r.value:.6g}")
        echo(f"[{name}] {'passed' if table.passed else 'FAILED'} in {time.perf_counter() - t0:.1f}s")
    return tables


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load(args.config)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        if args.out is not None:
            cfg = cfg.replace(out=args.out)
        cfg = cfg.replace(experiment=args.subcommand)
        cfg.validate()
    except (OSError, cfgmod.ConfigError) as exc:
        print(f"kdlab: configuration error: {exc}", file=sys.stderr)
        return 2
    names = ORDER if args.subcommand == "all" else [args.subcommand]
    t0 = time.perf_counter()
    tables = run(names, cfg, cfg.out, echo=(lambda *_: None) if args.quiet else print)
    manifest = write_manifest(cfg.out, cfg, tables, time.perf_counter() - t0, " ".join(sys.argv))
    print(f"results in {cfg.out}; overall {'PASS' if manifest['passed'] else 'FAIL'}")
    return 0 if manifest["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
