"""Command-line interface: JSON configs in, CSV/JSON tables (and figures) out.

Commands
--------
solve   locate all eigenvalues of one potential inside a complex rectangle
sweep   track eigenvalue branches along a parameter grid (or run a preset)
ep      bracket and refine an exceptional point
oracle  finite-difference cross-check of a spectrum
figure  run a bundled preset and render a quick-look figure next to the data

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 no exceptional point found (the sweep classification is still printed).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    AmbiguousTransition,
    BadBracket,
    ConfigError,
    NoConvergence,
    PtspectraError,
)
from .potentials import SMOOTH_FAMILIES, base_family, spec_from_json
from .oracle import default_truncation, oracle_eigenvalues
from .presets import PRESET_NAMES, run_preset
from .report import (
    ep_to_json,
    format_csv,
    format_json,
    meta_block,
    render_figure,
    rows_from_branches,
    rows_from_roots,
    transition_to_json,
)
from .rootfind import RootOptions, find_all_roots, find_ep
from .shooting import ShootingOptions, eigenvalues_shooting
from .sweep import SweepPlan, classify_transition, make_family, run_sweep
from .chareq import build_charfn


def _fail_config(msg: str) -> int:
    print(f"config error: {msg}", file=sys.stderr)
    return 2


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    return obj


def _check_keys(obj: dict, required: set, optional: set, where: str):
    keys = set(obj)
    missing = required - keys
    if missing:
        raise ConfigError(f"{where}: missing fields {sorted(missing)}")
    unknown = keys - required - optional
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")


def _parse_rect(obj, where: str) -> dict:
    if not (isinstance(obj, dict) and set(obj) == {"re", "im"}):
        raise ConfigError(f"{where}: rect must be {{'re': [lo,hi], 'im': [lo,hi]}}")
    out = {}
    for key in ("re", "im"):
        pair = obj[key]
        if not (isinstance(pair, list) and len(pair) == 2
                and all(isinstance(v, (int, float)) for v in pair)
                and pair[0] < pair[1]):
            raise ConfigError(f"{where}: rect['{key}'] must be [lo, hi] with lo < hi")
        out[key] = (float(pair[0]), float(pair[1]))
    return out


def _parse_grid(obj, where: str) -> tuple:
    if isinstance(obj, list):
        vals = [float(v) for v in obj]
    elif isinstance(obj, dict) and set(obj) == {"start", "stop", "step"}:
        start, stop, step = (float(obj[k]) for k in ("start", "stop", "step"))
        if step <= 0 or stop <= start:
            raise ConfigError(f"{where}: grid needs stop > start and step > 0")
        n = int(round((stop - start) / step))
        vals = [start + k * step for k in range(n + 1)]
    else:
        raise ConfigError(f"{where}: grid must be a list or {{start, stop, step}}")
    return tuple(vals)


def _parse_shooting(obj, where: str) -> ShootingOptions:
    _check_keys(obj, set(), {"L", "n_steps", "match_point"}, where)
    return ShootingOptions(
        L=float(obj.get("L", 10.0)),
        n_steps=int(obj.get("n_steps", 4000)),
        match_point=float(obj.get("match_point", 0.0)),
    )


def _is_smooth(spec) -> bool:
    return isinstance(base_family(spec), SMOOTH_FAMILIES)


def _write_text(path, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def _emit_table(rows, footer, config, args):
    if args.format == "json":
        _write_text(args.out, format_json(rows, footer, config))
    else:
        body = format_csv(rows, {"transition": footer, "meta": meta_block(config)}
                          if footer is not None else {"meta": meta_block(config)})
        _write_text(args.out, body)


def cmd_solve(args) -> int:
    config = _load_config(args.config)
    _check_keys(config, {"spec", "rect"}, {"options", "shooting"}, "solve config")
    spec = spec_from_json(config["spec"])
    rect = _parse_rect(config["rect"], "solve config")
    options = config.get("options", {})
    _check_keys(options, set(), {"n_real", "nx", "ny"}, "solve config.options")
    kw = {k: int(options[k]) for k in ("n_real", "nx", "ny") if k in options}
    if _is_smooth(spec):
        opts = _parse_shooting(config.get("shooting", {}), "solve config.shooting")
        roots = eigenvalues_shooting(spec, rect, opts, **kw)
    else:
        roots = find_all_roots(build_charfn(spec), rect, RootOptions(), **kw)
    _emit_table(rows_from_roots(roots), None, config, args)
    return 0


def cmd_oracle(args) -> int:
    config = _load_config(args.config)
    _check_keys(config, {"spec", "rect"}, {"L", "n", "options"}, "oracle config")
    spec = spec_from_json(config["spec"])
    rect = _parse_rect(config["rect"], "oracle config")
    L = float(config["L"]) if "L" in config else default_truncation(spec)
    n = int(config.get("n", 8000))
    options = config.get("options", {})
    _check_keys(options, set(), {"n_real", "nx", "ny"}, "oracle config.options")
    kw = {k: int(options[k]) for k in ("n_real", "nx", "ny") if k in options}
    roots = oracle_eigenvalues(spec, L, n, rect, **kw)
    _emit_table(rows_from_roots(roots), None, config, args)
    return 0


def _plan_from_config(config: dict) -> SweepPlan:
    _check_keys(
        config, {"spec", "axis", "grid", "region"},
        {"n_levels", "axis_mode", "shooting", "rescan_every", "options"},
        "sweep config",
    )
    spec = spec_from_json(config["spec"])
    shooting = None
    if _is_smooth(spec):
        shooting = _parse_shooting(config.get("shooting", {}), "sweep config.shooting")
    elif "shooting" in config:
        raise ConfigError("sweep config: 'shooting' applies to smooth families only")
    options = config.get("options", {})
    _check_keys(options, set(), {"n_real", "nx", "ny"}, "sweep config.options")
    return SweepPlan(
        spec_template=spec,
        axis=str(config["axis"]),
        grid=_parse_grid(config["grid"], "sweep config"),
        region=_parse_rect(config["region"], "sweep config"),
        n_levels=int(config.get("n_levels", 2)),
        axis_mode=str(config.get("axis_mode", "direct")),
        shooting_opts=shooting,
        rescan_every=int(config.get("rescan_every", 10)),
        scan_points=int(options.get("n_real", 2000)),
        scan_nx=int(options.get("nx", 160)),
        scan_ny=int(options.get("ny", 60)),
    )


def _progress(args):
    if args.verbose:
        return lambda msg: print(msg, file=sys.stderr)
    return None


def _sanitize(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-." else "_" for c in label)


def _emit_preset(result, args, render: bool) -> int:
    stem = args.out if args.out else result.name
    stem = str(stem)
    if stem.endswith(".csv") or stem.endswith(".json") or stem.endswith(".png"):
        stem = stem.rsplit(".", 1)[0]
    summary = {"preset": result.name, "description": result.description,
               "sub_sweeps": [], "meta": meta_block({"preset": result.name})}
    for sub in result.subs:
        rows = rows_from_branches(sub.branches)
        transition = transition_to_json(sub.report)
        config = {"preset": result.name, "sub": sub.label}
        path = f"{stem}_{_sanitize(sub.label)}.{args.format}"
        if args.format == "json":
            _write_text(path, format_json(rows, transition, config))
        else:
            _write_text(path, format_csv(rows, {"transition": transition,
                                                "meta": meta_block(config)}))
        summary["sub_sweeps"].append({"label": sub.label, "rows": path,
                                      "transition": transition})
        print(f"wrote {path}", file=sys.stderr)
    summary_path = f"{stem}_summary.json"
    _write_text(summary_path, json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(f"wrote {summary_path}", file=sys.stderr)
    if render:
        png_path = f"{stem}.png"
        render_figure(result.subs, png_path, title=result.description)
        print(f"wrote {png_path}", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    if args.preset:
        result = run_preset(args.preset, progress=_progress(args))
        return _emit_preset(result, args, render=False)
    if not args.config:
        raise ConfigError("sweep needs --config or --preset")
    config = _load_config(args.config)
    plan = _plan_from_config(config)
    branches = run_sweep(plan)
    report = None
    if len(branches) >= 2:
        lowest = sorted(branches, key=lambda b: b.points[0].energy.real)[:2]
        try:
            report = classify_transition(tuple(lowest), family=make_family(plan),
                                         opts=plan.root_opts)
        except AmbiguousTransition as exc:
            print(f"classification ambiguous: {exc}", file=sys.stderr)
    _emit_table(rows_from_branches(branches), transition_to_json(report),
                config, args)
    return 0


def cmd_ep(args) -> int:
    config = _load_config(args.config)
    _check_keys(config, {"spec", "axis", "bracket"},
                {"seed_energy", "region", "shooting", "axis_mode"}, "ep config")
    spec = spec_from_json(config["spec"])
    bracket = config["bracket"]
    if not (isinstance(bracket, list) and len(bracket) == 2
            and bracket[0] < bracket[1]):
        raise ConfigError("ep config: bracket must be [lo, hi] with lo < hi")
    lo, hi = float(bracket[0]), float(bracket[1])
    plan_cfg = {
        "spec": config["spec"], "axis": config["axis"],
        "grid": {"start": lo, "stop": hi,
                 "step": (hi - lo) / 24.0},
        "region": config["region"] if "region" in config else None,
        "n_levels": 2,
    }
    if plan_cfg["region"] is None:
        raise ConfigError("ep config: region rectangle is required")
    if "shooting" in config:
        plan_cfg["shooting"] = config["shooting"]
    if "axis_mode" in config:
        plan_cfg["axis_mode"] = config["axis_mode"]
    plan = _plan_from_config(plan_cfg)
    branches = run_sweep(plan)
    if len(branches) < 2:
        print("numerical failure: fewer than two branches in the bracket",
              file=sys.stderr)
        return 3
    lowest = sorted(branches, key=lambda b: b.points[0].energy.real)[:2]
    family = make_family(plan)
    report = classify_transition(tuple(lowest), family=family,
                                 opts=plan.root_opts)
    if report.kind != "coalescing" or report.ep is None:
        payload = {"error": "no exceptional point in the bracket",
                   "classification": transition_to_json(report),
                   "meta": meta_block(config)}
        _write_text(args.out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
        return 4
    payload = {"ep": ep_to_json(report.ep),
               "classification": transition_to_json(report),
               "meta": meta_block(config)}
    _write_text(args.out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return 0


def cmd_figure(args) -> int:
    result = run_preset(args.preset, progress=_progress(args))
    return _emit_preset(result, args, render=not args.no_plot)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptspectra",
        description="Bound-state spectra of 1D Hermitian and PT-symmetric "
                    "double wells: solve, sweep, locate exceptional points.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--verbose", "-v", action="store_true",
                       help="progress log on stderr")

    p_solve = sub.add_parser("solve", help="eigenvalues of one configuration")
    common(p_solve)
    p_solve.set_defaults(fn=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="branch continuation along a grid")
    p_sweep.add_argument("--preset", choices=PRESET_NAMES, default=None)
    p_sweep.add_argument("--config", default=None)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sweep.add_argument("--verbose", "-v", action="store_true")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_ep = sub.add_parser("ep", help="locate an exceptional point")
    common(p_ep)
    p_ep.set_defaults(fn=cmd_ep)

    p_oracle = sub.add_parser("oracle", help="finite-difference cross-check")
    common(p_oracle)
    p_oracle.set_defaults(fn=cmd_oracle)

    p_fig = sub.add_parser("figure", help="run a preset and render a figure")
    p_fig.add_argument("--preset", choices=PRESET_NAMES, required=True)
    p_fig.add_argument("--out", default=None, help="output stem (default preset name)")
    p_fig.add_argument("--format", choices=("csv", "json"), default="csv")
    p_fig.add_argument("--no-plot", action="store_true",
                       help="write data tables only")
    p_fig.add_argument("--verbose", "-v", action="store_true")
    p_fig.set_defaults(fn=cmd_figure)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        return _fail_config(str(exc))
    except BadBracket as exc:
        print(f"no exceptional point: {exc}", file=sys.stderr)
        return 4
    except (NoConvergence, AmbiguousTransition) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except PtspectraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
