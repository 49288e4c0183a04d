"""Command-line interface.

Exit codes: 0 success, 1 contract violation, 2 no solution, 3 I/O failure.
Failures also print a one-line JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as spio
from .calibration import (
    label_conditional_thresholds,
    select_beta,
    spi_threshold,
    split_conformal_threshold,
    worst_case_bounds,
)
from .combinatorics import window_table
from .exceptions import SPIError
from .scores import jitter
from .simulation import (
    TrialConfig,
    bounds_to_csv,
    run_bound_sweep,
    run_coverage_experiment,
    run_equivalence_check,
)
from .subset_selection import select_subsets

EXIT_OK, EXIT_CONTRACT, EXIT_NO_SOLUTION, EXIT_IO = 0, 1, 2, 3
DEFAULT_BETA = 0.4


class _Exit(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code, self.kind, self.message = code, kind, message


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Exit(EXIT_CONTRACT, "UsageError", f"{self.prog}: {message}")


def _fmt(x: float) -> str:
    if x == float("inf"):
        return "+inf"
    if x == float("-inf"):
        return "-inf"
    return f"{x:.6f}"


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_bounds(args) -> int:
    b = worst_case_bounds(args.m, args.N, args.alpha, args.beta)
    if args.json:
        _emit(b.to_dict())
    else:
        print(f"lower {b.lower:.6f} upper {b.upper:.6f}")
    return EXIT_OK


def _maybe_jitter(real, synth, args):
    if args.jitter is None:
        return real, synth
    delta = None if args.jitter == "auto" else float(args.jitter)
    rng = np.random.default_rng(args.seed)
    return jitter(real, delta, rng), jitter(synth, delta, rng)


def _jitter_labeled(data, delta, rng):
    return type(data)(data.labels, np.asarray(jitter(data.scores, delta, rng).values), data.universe)


def cmd_calibrate(args) -> int:
    if args.label_conditional:
        real = spio.read_labeled_csv(args.real)
        synth = spio.read_labeled_csv(args.synth)
        if args.jitter is not None:
            delta = None if args.jitter == "auto" else float(args.jitter)
            rng = np.random.default_rng(args.seed)
            real, synth = _jitter_labeled(real, delta, rng), _jitter_labeled(synth, delta, rng)
        res = label_conditional_thresholds(real, synth, args.alpha, args.beta)
        if args.json:
            _emit({"alpha": args.alpha, "beta": args.beta, "labels": [v.to_dict() for v in res.values()]})
        else:
            for y, lt in res.items():
                note = "".join(f"  [{f}]" for f in lt.flags)
                print(f"label {y}: cutoff {_fmt(lt.threshold.cutoff)} (m={lt.m}, N={lt.N}, "
                      f"bounds {lt.bounds.lower:.6f}-{lt.bounds.upper:.6f}){note}")
        return EXIT_OK

    real = spio.read_scores_csv(args.real)
    synth = spio.read_scores_csv(args.synth) if args.synth else None
    out = {"method": args.method, "alpha": args.alpha, "m": len(real)}
    if args.method == "only-real":
        thr = split_conformal_threshold(real, args.alpha)
    elif synth is None:
        raise _Exit(EXIT_CONTRACT, "UsageError", f"--synth is required for method {args.method}")
    elif args.method == "only-synth":
        thr = split_conformal_threshold(synth, args.alpha)
        out["N"] = len(synth)
    else:
        real, synth = _maybe_jitter(real, synth, args)
        thr = spi_threshold(real, synth, args.alpha, args.beta)
        bounds = worst_case_bounds(len(real), len(synth), args.alpha, args.beta)
        out.update(N=len(synth), beta=args.beta, bounds=bounds.to_dict())
        if args.windows:
            out["windows"] = window_table(len(real), len(synth), args.beta).to_dict()
    out["threshold"] = thr.to_dict()

    if args.json:
        _emit(out)
    else:
        print(f"threshold {_fmt(thr.cutoff)}")
        if "bounds" in out:
            print(f"bounds lower {out['bounds']['lower']:.6f} upper {out['bounds']['upper']:.6f}")
        if "windows" in out:
            print(json.dumps(out["windows"]))
    return EXIT_OK


def cmd_select_beta(args) -> int:
    beta = select_beta(args.m, args.N, args.alpha, args.target_lower, args.step)
    if beta is None:
        raise _Exit(EXIT_NO_SOLUTION, "NoSolution", "no β on grid achieves target")
    b = worst_case_bounds(args.m, args.N, args.alpha, beta)
    if args.json:
        _emit({"beta": beta, "bounds": b.to_dict()})
    else:
        print(f"beta {beta:g} (lower {b.lower:.6f} upper {b.upper:.6f})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = TrialConfig.from_dict(spio.read_json(args.config))
    report = run_coverage_experiment(cfg, workers=args.workers)
    if args.out:
        out = Path(args.out)
        out.write_text(report.to_csv())
        out.with_suffix(".json").write_text(report.to_json() + "\n")
    else:
        print(report.to_json())
    return EXIT_OK


def cmd_sweep(args) -> int:
    rows = run_bound_sweep(_ints(args.m_values), _floats(args.beta_values), _floats(args.alpha_values), args.N)
    text = bounds_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_subset(args) -> int:
    real = spio.read_scores_csv(args.real)
    grouped = spio.read_grouped_csv(args.groups)
    sel = select_subsets(real, grouped, args.k)
    if args.json:
        _emit({"selected": list(sel.ids), "pooled_size": sel.size, "distances": sel.distances})
    else:
        print("selected " + ",".join(map(str, sel.ids)))
        print(f"pooled size {sel.size}")
    return EXIT_OK


def cmd_equivalence(args) -> int:
    rep = run_equivalence_check(args.instances, args.seed, args.include_synthetic_values, workers=args.workers)
    if args.json:
        _emit({"instances": rep.instances, "disagreements": rep.disagreements, "candidates": rep.candidates,
               "failing_instances": list(rep.failing_instances)})
    else:
        print(f"{rep.disagreements} disagreements over {rep.instances} instances ({rep.candidates} candidates)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spi", description="Conformal calibration powered by synthetic scores.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("bounds", help="worst-case coverage bounds")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", type=float, default=DEFAULT_BETA)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("calibrate", help="compute a prediction-set threshold from score files")
    s.add_argument("--real", required=True, help="CSV with a 'score' (or 'label,score') header")
    s.add_argument("--synth", help="CSV of synthetic scores in the same format")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", type=float, default=DEFAULT_BETA)
    s.add_argument("--method", choices=("spi", "only-real", "only-synth"), default="spi")
    s.add_argument("--label-conditional", action="store_true")
    s.add_argument("--jitter", nargs="?", const="auto", metavar="DELTA",
                   help="break ties with Uniform[-DELTA, DELTA] noise (default DELTA: 1e-9 x range)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--windows", action="store_true", help="include the window rank table")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("select-beta", help="smallest grid beta meeting a worst-case lower bound")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--target-lower", type=float, required=True)
    s.add_argument("--step", type=float, default=0.01)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_select_beta)

    s = sub.add_parser("simulate", help="Monte Carlo coverage experiment from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="CSV report path; the JSON aggregate goes next to it")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="worst-case bounds over parameter grids (CSV)")
    s.add_argument("--m-values", required=True, help="comma-separated")
    s.add_argument("--beta-values", default=str(DEFAULT_BETA))
    s.add_argument("--alpha-values", required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("subset", help="select the k synthetic groups closest to the real scores")
    s.add_argument("--real", required=True)
    s.add_argument("--groups", required=True, help="CSV with a 'group,score' header")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_subset)

    s = sub.add_parser("equivalence", help="compare direct and closed-form prediction sets")
    s.add_argument("--instances", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--include-synthetic-values", action="store_true")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_equivalence)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _Exit as exc:
        code, kind, message = exc.code, exc.kind, exc.message
    except SPIError as exc:
        code, kind, message = EXIT_CONTRACT, type(exc).__name__, str(exc)
    except OSError as exc:
        code, kind, message = EXIT_IO, type(exc).__name__, str(exc)
    print(message, file=sys.stderr)
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
