"""Command-line entry point: ``crcmap <command> [flags]``.

Exit codes: 0 success, 1 I/O or file-format error, 2 invalid input,
3 statistical infeasibility, 4 a Monte-Carlo check failed its bound.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as cio
from .bootstrap import BootstrapSpec, bootstrap_ci
from .crc_binary import calibrate_fnr, fnr_sweep
from .crc_threeway import assign_zones, calibrate_three_way
from .domain import CostSpec, RiskSpec, ShiftInterval
from .errors import CrcError, FormatError, InfeasibleError, ValidationError
from .metrics import ALL_METRICS, full_report
from .synth import (
    Link,
    generate,
    mc_fnr_guarantee,
    mc_set_size_stats,
    mc_threeway_check,
    model_from_auroc,
)

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_CHECK_FAILED = 0, 1, 2, 3, 4


class CheckFailed(Exception):
    pass


# ----------------------------------------------------------------- helpers ---


def load_scores(path):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return cio.read_csv(path)
    return cio.read_container(path)


def provenance(args, inputs=()) -> dict:
    params = {
        k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config") and v is not None
    }
    return {
        "artifact": "crcmap",
        "version": __version__,
        "command": args.command,
        "parameters": params,
        "inputs": {str(p): cio.file_digest(p) for p in inputs},
    }


def parse_grid(text: str) -> list[float]:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ValidationError(f"grid must be start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise ValidationError("grid needs step > 0 and stop >= start")
    n = math.floor((stop - start) / step + 1e-9) + 1
    return [start + i * step for i in range(n)]


def parse_ratios(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ValidationError(f"ratios must be a,b,c, got {text!r}") from None


def require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise ValidationError(f"{args.command}: missing required {flags}")


# ---------------------------------------------------------------- commands ---


def cmd_calibrate(args):
    require(args, "scores", "alpha", "out")
    cal = load_scores(args.scores)
    result = calibrate_fnr(cal, RiskSpec(args.alpha))
    cio.write_tree({"calibration": result, "provenance": provenance(args, [args.scores])}, args.out)
    return result


def cmd_evaluate(args):
    require(args, "scores", "out")
    if (args.threshold is None) == (args.lambda_ is None):
        raise ValidationError("evaluate: give exactly one of --threshold or --lambda")
    scores = load_scores(args.scores)
    inputs = [args.scores]
    if args.threshold is not None:
        lam = cio.calibration_from_tree(cio.read_tree(args.threshold)).lambda_hat
        inputs.append(args.threshold)
    else:
        lam = args.lambda_
    report = full_report(scores, lam)
    tree = {
        "lambda": lam,
        "metrics": {m: getattr(report, m) for m in ALL_METRICS},
        "notes": {
            "pooling": "all metrics pool valid pixels across images",
            "auprc": "step-wise average precision",
        },
        "provenance": provenance(args, inputs),
    }
    if args.bootstrap:
        spec = BootstrapSpec(args.bootstrap, args.confidence, args.seed)
        ci, skipped = {}, {}
        for m in ALL_METRICS:
            if getattr(report, m) is None:
                ci[m] = None
                continue
            try:
                r = bootstrap_ci(scores, m, lam, spec)
            except ValidationError:
                ci[m] = None
                continue
            ci[m] = [r.lo, r.hi]
            skipped[m] = r.skipped
        tree["bootstrap"] = {
            "method": "percentile, image-level resampling",
            "resamples": spec.resamples,
            "confidence": spec.confidence,
            "seed": spec.seed,
            "ci": ci,
            "skipped_resamples": skipped,
        }
    cio.write_tree(tree, args.out)
    return tree


def cmd_sweep(args):
    require(args, "scores", "grid", "out")
    rows = fnr_sweep(load_scores(args.scores), parse_grid(args.grid))
    cio.write_sweep_csv(rows, args.out)
    return rows


def cmd_threeway(args):
    require(args, "scores", "out")
    cal = load_scores(args.scores)
    zones = calibrate_three_way(
        cal, CostSpec(args.cfn, args.cfp), args.alpha_cw, ShiftInterval(args.rho_lo, args.rho_hi)
    )
    cio.write_tree({"zones": zones, "provenance": provenance(args, [args.scores])}, args.out)
    return zones


def cmd_apply(args):
    require(args, "scores", "zones", "out")
    scores = load_scores(args.scores)
    zones = cio.zones_from_tree(cio.read_tree(args.zones))
    codes, report = assign_zones(scores, zones)
    cio.write_zone_container(scores, codes, args.out)
    report_path = args.report or str(args.out) + ".json"
    tree = {
        "zones": zones,
        "report": dataclasses.asdict(report)
        | {"set_size_evacuate": report.set_size_evacuate, "set_size_flagged": report.set_size_flagged},
        "provenance": provenance(args, [args.scores, args.zones]),
    }
    cio.write_tree(tree, report_path)
    return report


def cmd_simulate(args):
    require(args, "auroc", "prevalence", "out")
    model = model_from_auroc(args.auroc, args.prevalence, Link(args.link))
    data = generate(model, args.images, args.height, args.width, args.seed)
    cio.write_container(data, args.out)
    return data


def cmd_mc_check(args):
    require(args, "mode", "auroc", "prevalence")
    model = model_from_auroc(args.auroc, args.prevalence, Link(args.link))
    common = dict(trials=args.trials, seed=args.seed)
    if args.cal_pixels:
        common["n_cal_pixels"] = args.cal_pixels
    if args.test_pixels:
        common["n_test_pixels"] = args.test_pixels
    if args.mode == "fnr":
        require(args, "alpha")
        res = mc_fnr_guarantee(model, args.alpha, **common)
        ok = res.within_bound(2.0)
        check = "mean test FNR <= alpha + 2 SE"
    elif args.mode == "setsize":
        require(args, "alpha")
        res = mc_set_size_stats(model, args.alpha, **common)
        ok = res.relative_error <= args.tolerance
        check = f"|MC - closed form| / closed form <= {args.tolerance}"
    else:
        require(args, "alpha_cw")
        res = mc_threeway_check(
            model,
            CostSpec(args.cfn, args.cfp),
            args.alpha_cw,
            ShiftInterval(args.rho_lo, args.rho_hi),
            rho_test=args.rho_test,
            **common,
        )
        ok = res.violation_fraction <= 0.05 and res.mean_risk <= res.target
        check = "decided risk <= alpha_cw / (1 - d) in >= 95% of trials and in the mean"
    tree = {"result": res, "check": check, "passed": ok, "provenance": provenance(args)}
    text = cio.dumps_tree(tree)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    if not ok:
        raise CheckFailed(check)
    return res


def cmd_split(args):
    require(args, "scores", "out_prefix")
    data = load_scores(args.scores)
    spec = cio.SplitSpec(args.seed, parse_ratios(args.ratios))
    parts = cio.split(data, spec)
    manifest = {}
    for name, part in zip(("train", "cal", "test"), parts):
        if part is None:
            manifest[name] = {"path": None, "n_images": 0}
            continue
        path = f"{args.out_prefix}_{name}.crcs"
        cio.write_container(part, path)
        manifest[name] = {"path": path, "n_images": len(part), "image_ids": part.image_ids}
    cio.write_tree(
        {"split": manifest, "provenance": provenance(args, [args.scores])},
        f"{args.out_prefix}_split.json",
    )
    return parts


# ------------------------------------------------------------------ parser ---


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crcmap", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"crcmap {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON file supplying defaults for any flag")
        sp.set_defaults(func=func)
        return sp

    def threeway_flags(sp):
        sp.add_argument("--alpha-cw", type=float, default=0.5)
        sp.add_argument("--cfn", type=float, default=5.0)
        sp.add_argument("--cfp", type=float, default=1.0)
        sp.add_argument("--rho-lo", type=float, default=0.9)
        sp.add_argument("--rho-hi", type=float, default=1.1)

    sp = command("calibrate", cmd_calibrate, "select a threshold with FNR <= alpha")
    sp.add_argument("--scores")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--out")

    sp = command("evaluate", cmd_evaluate, "metrics (and bootstrap CIs) at a threshold")
    sp.add_argument("--scores")
    sp.add_argument("--threshold", help="threshold file written by 'calibrate'")
    sp.add_argument("--lambda", dest="lambda_", type=float)
    sp.add_argument("--bootstrap", type=int, default=0, metavar="N")
    sp.add_argument("--confidence", type=float, default=0.95)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")

    sp = command("sweep", cmd_sweep, "FNR and set size over a threshold grid (CSV)")
    sp.add_argument("--scores")
    sp.add_argument("--grid", default="0:1:0.01", help="start:stop:step, inclusive")
    sp.add_argument("--out")

    sp = command("threeway", cmd_threeway, "calibrate SAFE/MONITOR/EVACUATE thresholds")
    sp.add_argument("--scores")
    threeway_flags(sp)
    sp.add_argument("--out")

    sp = command("apply", cmd_apply, "assign zones and write a CRZ1 zone container")
    sp.add_argument("--scores")
    sp.add_argument("--zones")
    sp.add_argument("--out")
    sp.add_argument("--report", help="zone report path (default: <out>.json)")

    sp = command("simulate", cmd_simulate, "generate bi-normal synthetic score maps")
    sp.add_argument("--auroc", type=float)
    sp.add_argument("--prevalence", type=float)
    sp.add_argument("--images", type=int, default=100)
    sp.add_argument("--height", type=int, default=64)
    sp.add_argument("--width", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--link", choices=[x.value for x in Link], default=Link.POSTERIOR.value)
    sp.add_argument("--out")

    sp = command("mc-check", cmd_mc_check, "Monte-Carlo check of a statistical guarantee")
    sp.add_argument("mode", nargs="?", choices=["fnr", "setsize", "threeway"])
    sp.add_argument("--auroc", type=float)
    sp.add_argument("--prevalence", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--cal-pixels", type=int)
    sp.add_argument("--test-pixels", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tolerance", type=float, default=0.01)
    sp.add_argument("--rho-test", type=float, default=1.0)
    sp.add_argument("--link", choices=[x.value for x in Link], default=Link.POSTERIOR.value)
    threeway_flags(sp)
    sp.add_argument("--out")

    sp = command("split", cmd_split, "deterministic train/cal/test split of images")
    sp.add_argument("--scores")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--ratios", default="0.70,0.15,0.15")
    sp.add_argument("--out-prefix")
    return p


def _apply_config(parser, argv):
    """Re-parse with defaults taken from --config; flags still win."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a key/value object")
    section = cfg.get(args.command, {})
    flat = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    defaults = {k.replace("-", "_"): v for k, v in {**flat, **section}.items()}
    if "lambda" in defaults:
        defaults["lambda_"] = defaults.pop("lambda")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        args.func(args)
    except CheckFailed as exc:
        print(f"crcmap: check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except InfeasibleError as exc:
        print(f"crcmap: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (FormatError, OSError) as exc:
        print(f"crcmap: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, CrcError) as exc:
        print(f"crcmap: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
