"""Command-line entry point: ``run``, ``sweep``, ``convergence`` and ``validate``.

Exit codes: 0 success, 1 validation failure, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import ao, bench
from .channel import draw_channels, dump_channels
from .params import ConfigError, InvalidGeometryError, default_config, load_scenario, scenario_from_config
from .validate import run_checks

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG = 0, 1, 2


def _base_config(path: str | None) -> dict:
    if path is None:
        return default_config()
    load_scenario(path)  # validates
    with open(path) as fh:
        return {**default_config(), **json.load(fh)}


def _csv_list(text: str, cast=float) -> list:
    try:
        return [cast(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from exc


def cmd_run(args) -> int:
    sc = load_scenario(args.config) if args.config else scenario_from_config({})
    ch = draw_channels(sc.params, sc.geometry, args.seed)
    if args.dump_channels:
        with open(args.dump_channels, "w") as fh:
            fh.write(dump_channels(ch) + "\n")
    res = bench.run_scheme(bench.Scheme.parse(args.scheme), ch, sc.params, seed=args.seed)
    for slot, tr in enumerate(res.traces):
        prefix = f"slot {slot} " if len(res.traces) > 1 else ""
        print(f"{prefix}k=0 ssr={tr.initial_ssr:.9g}")
        for r in tr.records:
            print(f"{prefix}k={r.k} ssr_phase={r.ssr_phase:.9g} ssr_tx={r.ssr_tx:.9g} "
                  f"ssr_rx={r.ssr_rx:.9g} phase_accepted={int(r.phase_accepted)} rank_ratio={r.rank_ratio:.3g}")
        print(f"{prefix}termination: {tr.reason}")
    print(f"final SSR {res.ssr:.9g} bits/s/Hz")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cast = int if args.variable == "m_ris" else float
    values = _csv_list(args.values, cast) if args.values else list(bench.DEFAULT_VALUES.get(args.variable, ()))
    schemes = [s for s in args.schemes.split(",") if s.strip()] if args.schemes else list(bench.Scheme)
    spec = bench.SweepSpec(args.variable, tuple(values), args.trials, _base_config(args.config),
                           tuple(schemes), args.seed)
    rows = bench.run_sweep(spec, workers=args.workers, out=args.out)
    if args.out is None:
        sys.stdout.write(bench.rows_to_csv(rows))
    for s in bench.summarize(rows):
        print(f"{s.scheme} {spec.variable}={s.value:g} mean={s.mean:.6f} stderr={s.stderr:.6f} n={s.n}",
              file=sys.stderr)
    return EXIT_OK


def cmd_convergence(args) -> int:
    traces = bench.run_convergence(_base_config(args.config), _csv_list(args.m_list, int), args.seed)
    text = bench.convergence_csv(traces)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    results = run_checks(args.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="risfd", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single optimization run")
    p.add_argument("--config")
    p.add_argument("--scheme", default=bench.Scheme.FD_RIS_AN.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-channels", metavar="FILE", help="write the channel realization as JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="Monte Carlo sweep, CSV output")
    p.add_argument("--config")
    p.add_argument("--variable", required=True, choices=bench.SWEEP_VARIABLES)
    p.add_argument("--values", help="comma-separated; defaults depend on the variable")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--schemes", help="comma-separated scheme names (default: all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("convergence", help="per-iteration SSR traces for several M")
    p.add_argument("--config")
    p.add_argument("--m-list", default="20,40,60")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("validate", help="run the numerical self-checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, InvalidGeometryError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
