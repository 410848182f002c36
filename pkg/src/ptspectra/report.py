"""Serialization of sweep results: CSV and JSON tables, quick-look figures.

All output is byte-deterministic for a fixed configuration: floats use the
%.12e format, rows are sorted by (lambda, branch id), JSON keys are sorted,
and figure files are written without volatile metadata.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from typing import Optional

from . import __version__
from .rootfind import EPResult
from .sweep import Branch, TransitionReport

CSV_HEADER = "lambda,branch_id,re_E,im_E,residual,classification,pair_id"


def fmt_float(x: float) -> str:
    x = float(x) + 0.0  # normalize negative zero
    return "%.12e" % x


def rows_from_branches(branches: list[Branch], real_axis_tol: float = 1e-9) -> list[dict]:
    """Flatten branches into SweepRow dicts, sorted by (lambda, branch_id)."""
    rows = []
    for b in branches:
        for p in b.points:
            energy = p.energy
            classification = "real" if abs(energy.imag) < real_axis_tol \
                else "conjugate_pair_member"
            rows.append({
                "lambda": float(p.lam),
                "branch_id": int(b.id),
                "re_E": float(energy.real),
                "im_E": 0.0 if classification == "real" else float(energy.imag),
                "residual": float(p.residual),
                "classification": classification,
                "pair_id": b.pair_id,
            })
    rows.sort(key=lambda r: (r["lambda"], r["branch_id"]))
    return rows


def rows_from_roots(roots) -> list[dict]:
    """Root-table rows for the solve/oracle commands (lambda column unused)."""
    rows = []
    for i, r in enumerate(roots):
        rows.append({
            "lambda": 0.0,
            "branch_id": i,
            "re_E": float(r.energy.real),
            "im_E": float(r.energy.imag),
            "residual": float(r.residual),
            "classification": r.classification,
            "pair_id": None,
        })
    return rows


def format_csv(rows: list[dict], footer: Optional[dict] = None) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        pair = "" if r["pair_id"] is None else str(r["pair_id"])
        lines.append(",".join([
            fmt_float(r["lambda"]),
            str(r["branch_id"]),
            fmt_float(r["re_E"]),
            fmt_float(r["im_E"]),
            fmt_float(r["residual"]),
            r["classification"],
            pair,
        ]))
    if footer is not None:
        lines.append("# " + json.dumps(footer, sort_keys=True,
                                       separators=(",", ":"), default=_json_default))
    return "\n".join(lines) + "\n"


def _json_default(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"not JSON serializable: {obj!r}")


def transition_to_json(report: Optional[TransitionReport]) -> Optional[dict]:
    if report is None:
        return None
    out = {
        "kind": report.kind,
        "lambda_star": report.lambda_star,
        "epsilon0": report.epsilon0,
        "contained": report.contained,
        "note": report.note,
        "ep": None,
    }
    if report.ep is not None:
        out["ep"] = ep_to_json(report.ep)
    return out


def ep_to_json(ep: EPResult) -> dict:
    return {
        "param_star": ep.param_star,
        "energy_star": {"re": ep.energy_star.real, "im": ep.energy_star.imag},
        "residual_F": ep.residual_F,
        "residual_dF": ep.residual_dF,
        "splitting_exponent": ep.splitting_exponent,
    }


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def meta_block(config: dict) -> dict:
    return {"version": __version__, "config_hash": config_hash(config)}


def format_json(rows: list[dict], transition: Optional[dict], config: dict) -> str:
    payload = {
        "rows": [
            {k: (fmt_float(v) if isinstance(v, float) else v) for k, v in row.items()}
            for row in rows
        ],
        "transition": transition,
        "meta": meta_block(config),
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


LINESTYLES = ["--", "-", ":", "-."]


def render_figure(sub_results, path: str, title: str = "") -> None:
    """Quick-look figure: Re E (and dashed Im E) of every branch vs lambda."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_re, ax_im) = plt.subplots(
        2, 1, figsize=(7.0, 7.5), sharex=True,
        gridspec_kw={"height_ratios": [2.2, 1.0]},
    )
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, sub in enumerate(sub_results):
        style = LINESTYLES[i % len(LINESTYLES)]
        color = colors[i % len(colors)]
        for j, branch in enumerate(sub.branches):
            lams = branch.lams()
            energies = branch.energies()
            label = sub.label if j == 0 else None
            ax_re.plot(lams, energies.real, style, color=color, lw=1.2,
                       label=label)
            ax_im.plot(lams, energies.imag, style, color=color, lw=1.2)
        if sub.report is not None and sub.report.lambda_star is not None:
            ax_re.axvline(sub.report.lambda_star, color=color, lw=0.6, alpha=0.5)
    ax_re.set_ylabel("Re E")
    ax_im.set_ylabel("Im E")
    ax_im.set_xlabel("swept parameter")
    if title:
        ax_re.set_title(title)
    ax_re.legend(loc="best", fontsize=8)
    ax_re.grid(alpha=0.25)
    ax_im.grid(alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=130, metadata={"Software": None})
    plt.close(fig)
