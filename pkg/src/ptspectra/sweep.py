"""Parameter continuation: track eigenvalue branches and classify transitions.

A sweep follows the n lowest eigenvalue branches of a potential family while
one parameter varies slowly, using the previous energies as polish seeds
(first-order predictor). Steps that break the continuity bound are bisected;
new branches appearing mid-sweep are picked up by periodic re-scans.

The lowest branch pair is then classified: Hermitian *merging* (both real,
splitting decays to a common limit eps0) versus PT *coalescing* (pair turns
complex-conjugate at an exceptional point, refined by the 2D Newton solver).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .chareq import CharFn, build_charfn
from .errors import AmbiguousTransition, ConfigError, NoConvergence
from .potentials import (
    DeltaInBox,
    PotentialSpec,
    base_family,
    with_param,
)
from .rootfind import (
    Deflated,
    EVAL_ERRORS,
    EPResult,
    RootOptions,
    _refine_ep,
    _splitting_exponent,
    find_all_roots,
    polish,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepPlan:
    """One continuation run: which spec, which axis, which grid."""

    spec_template: PotentialSpec
    axis: str
    grid: tuple
    region: dict
    n_levels: int = 2
    axis_mode: str = "direct"  # or "wall_with_fixed_gap" (DeltaInBox: b tracks a)
    shooting_opts: object = None
    root_opts: RootOptions = RootOptions()
    rescan_every: int = 10
    scan_points: int = 2000
    scan_nx: int = 160
    scan_ny: int = 60

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if len(g) < 2 or not (np.all(np.diff(g) > 0) or np.all(np.diff(g) < 0)):
            raise ConfigError("sweep grid must be strictly monotone with >= 2 points")
        if self.n_levels < 1:
            raise ConfigError("n_levels must be >= 1")
        if self.axis_mode not in ("direct", "wall_with_fixed_gap"):
            raise ConfigError(f"unknown axis_mode {self.axis_mode!r}")


@dataclass
class BranchPoint:
    lam: float
    energy: complex
    residual: float


@dataclass
class Branch:
    """One eigenvalue trajectory over the swept parameter."""

    id: int
    points: list = field(default_factory=list)
    pair_id: Optional[int] = None
    truncated: bool = False

    def lams(self):
        return np.array([p.lam for p in self.points])

    def energies(self):
        return np.array([p.energy for p in self.points], dtype=complex)

    def at(self, lam: float) -> Optional[BranchPoint]:
        for p in self.points:
            if p.lam == lam:
                return p
        return None


@dataclass
class TransitionReport:
    """Classification of the lowest branch pair of a sweep."""

    kind: str  # "merging" | "coalescing" | "none"
    lambda_star: Optional[float] = None
    epsilon0: Optional[float] = None
    ep: Optional[EPResult] = None
    contained: Optional[bool] = None
    note: str = ""


def make_spec(plan_or_template, axis: str, lam: float,
              axis_mode: str = "direct") -> PotentialSpec:
    """Spec at one grid point of a sweep."""
    template = plan_or_template
    if axis_mode == "wall_with_fixed_gap":
        base = base_family(template)
        if not isinstance(base, DeltaInBox):
            raise ConfigError("wall_with_fixed_gap applies to delta_in_box only")
        if axis != "a":
            raise ConfigError("wall_with_fixed_gap sweeps the wall position a")
        gap = base.a - base.b
        spec = with_param(template, "a", lam)
        return with_param(spec, "b", lam - gap)
    return with_param(template, axis, lam)


def make_family(plan: SweepPlan) -> Callable[[float], CharFn]:
    """lam -> CharFn for the plan's potential family."""
    from .potentials import SMOOTH_FAMILIES

    smooth = isinstance(base_family(plan.spec_template), SMOOTH_FAMILIES)

    def family(lam: float) -> CharFn:
        spec = make_spec(plan.spec_template, plan.axis, lam, plan.axis_mode)
        if smooth:
            from .shooting import ShootingOptions, build_charfn_shooting

            opts = plan.shooting_opts or ShootingOptions()
            return build_charfn_shooting(spec, opts)
        return build_charfn(spec)

    return family


def _jump_bound(state, dlam_ratio: float) -> float:
    """Continuity bound for one continuation step."""
    lam_e = state["history"]
    floor = 0.02 * (1.0 + abs(lam_e[-1][1]))
    if len(lam_e) < 2:
        return floor
    last_jump = abs(lam_e[-1][1] - lam_e[-2][1])
    return max(floor, 8.0 * last_jump * max(dlam_ratio, 1e-6))


def _predict(state, lam_new: float) -> complex:
    hist = state["history"]
    if len(hist) < 2:
        pred = hist[-1][1]
    else:
        (l0, e0), (l1, e1) = hist[-2], hist[-1]
        pred = e1 if l1 == l0 else e1 + (e1 - e0) * (lam_new - l1) / (l1 - l0)
    if pred.imag == 0.0:
        # PT residuals are real-valued on the real axis, so an exactly real
        # seed cannot cross an exceptional point; nudge off-axis (sign fixed
        # per branch so a coalescing pair splits into conjugate partners)
        pred = pred + 1j * state["nudge"] * 1e-7 * (1.0 + abs(pred))
    return pred


def _advance(family, state, lam_from: float, lam_to: float,
             opts: RootOptions, depth: int = 0, max_depth: int = 8) -> complex:
    """Continue one branch from lam_from to lam_to, bisecting if needed."""
    f = family(lam_to)
    seed = _predict(state, lam_to)
    try:
        root = polish(f, seed, opts)
        if not root.physical:
            raise NoConvergence(f"continuation hit an unphysical zero at {root.energy}")
        jump = abs(root.energy - state["history"][-1][1])
        ratio = abs(lam_to - lam_from) / max(
            abs(state["history"][-1][0] - state["history"][-2][0])
            if len(state["history"]) > 1 else abs(lam_to - lam_from), 1e-300)
        if jump <= _jump_bound(state, ratio):
            state["history"].append((lam_to, root.energy))
            state["residual"] = root.residual
            return root.energy
    except (NoConvergence, *EVAL_ERRORS):
        pass
    if depth >= max_depth:
        raise NoConvergence(f"branch continuation stalled near lam={lam_to}")
    mid = 0.5 * (lam_from + lam_to)
    _advance(family, state, lam_from, mid, opts, depth + 1, max_depth)
    return _advance(family, state, mid, lam_to, opts, depth + 1, max_depth)


def run_sweep(plan: SweepPlan) -> list[Branch]:
    """Track the lowest eigenvalue branches across the parameter grid.

    Branches that cannot be continued within the continuity bound after
    bisection are truncated (never silently merged); new roots discovered by
    the periodic re-scan are appended as new branches while fewer than
    n_levels are active.
    """
    grid = [float(v) for v in plan.grid]
    family = make_family(plan)
    opts = plan.root_opts
    f0 = family(grid[0])
    roots0 = find_all_roots(f0, plan.region, opts, n_real=plan.scan_points,
                            nx=plan.scan_nx, ny=plan.scan_ny)
    roots0 = sorted(roots0, key=lambda r: (r.energy.real, r.energy.imag))[: plan.n_levels]
    branches: list[Branch] = []
    states: dict[int, dict] = {}
    for i, r in enumerate(roots0):
        b = Branch(id=i, points=[BranchPoint(grid[0], r.energy, r.residual)])
        branches.append(b)
        states[i] = {"history": [(grid[0], r.energy)], "residual": r.residual,
                     "nudge": 1.0 if i % 2 == 0 else -1.0}
    next_id = len(branches)

    for k in range(1, len(grid)):
        lam_prev, lam = grid[k - 1], grid[k]
        f = family(lam)
        active = [b for b in branches if not b.truncated]
        for b in active:
            st = states[b.id]
            try:
                energy = _advance(family, st, lam_prev, lam, opts)
            except (NoConvergence, *EVAL_ERRORS):
                b.truncated = True
                log.warning("sweep: branch %d lost at lam=%g", b.id, lam)
                continue
            # keep only grid-point entries in history (bisection scaffolding out)
            st["history"] = [h for h in st["history"] if h[0] in (lam_prev, lam)][-2:]
            b.points.append(BranchPoint(lam, _snap_energy(energy, opts), st["residual"]))
        # conjugate-collision resolution: two branches on one root
        landed = [b for b in active if not b.truncated and b.points[-1].lam == lam]
        for i in range(len(landed)):
            for j in range(i + 1, len(landed)):
                bi, bj = landed[i], landed[j]
                ei, ej = bi.points[-1].energy, bj.points[-1].energy
                if abs(ei - ej) < opts.dedupe_radius:
                    fixed = _resolve_collision(f, bj, states[bj.id], ei, opts)
                    if fixed is not None:
                        bj.points[-1] = BranchPoint(lam, _snap_energy(fixed[0], opts),
                                                    fixed[1])
                        states[bj.id]["history"][-1] = (lam, fixed[0])
        # periodic rescan for newly bound branches
        if plan.rescan_every and k % plan.rescan_every == 0:
            active = [b for b in branches if not b.truncated]
            if len(active) < plan.n_levels:
                found = find_all_roots(f, plan.region, opts, n_real=plan.scan_points,
                                       nx=plan.scan_nx, ny=plan.scan_ny)
                current = [b.points[-1].energy for b in active if b.points[-1].lam == lam]
                for r in found:
                    if len(active) >= plan.n_levels:
                        break
                    if all(abs(r.energy - e) > 10 * opts.dedupe_radius for e in current):
                        nb = Branch(id=next_id,
                                    points=[BranchPoint(lam, r.energy, r.residual)])
                        branches.append(nb)
                        active.append(nb)
                        states[next_id] = {"history": [(lam, r.energy)],
                                           "residual": r.residual,
                                           "nudge": 1.0 if next_id % 2 == 0 else -1.0}
                        current.append(r.energy)
                        next_id += 1
    _assign_pairs(branches, plan.root_opts)
    return branches


def _snap_energy(e: complex, opts: RootOptions) -> complex:
    # polished imaginary parts carry noise proportional to |E| (residual
    # floor over |dF/dE|), so the real-axis snap scales with the energy
    tol = 10.0 * opts.real_axis_tol * max(1.0, abs(e))
    return complex(e.real, 0.0) if abs(e.imag) < tol else e


def _resolve_collision(f, branch, state, other_energy: complex,
                       opts: RootOptions):
    """Re-polish a branch that collided with its sibling on the same root.

    First try the conjugate of the landed root (the usual post-EP case),
    then a deflated polish from the predictor.
    """
    seed = other_energy.conjugate()
    if abs(seed - other_energy) > opts.dedupe_radius:
        try:
            root = polish(f, seed, opts)
            if abs(root.energy - other_energy) > opts.dedupe_radius:
                return root.energy, root.residual
        except (NoConvergence, *EVAL_ERRORS):
            pass
    try:
        pred = state["history"][-2][1] if len(state["history"]) > 1 else other_energy
        root = polish(Deflated(f, [other_energy]), pred, opts)
        res = abs(f(root.energy))
        if res <= opts.tol_residual and abs(root.energy - other_energy) > opts.dedupe_radius:
            return root.energy, res
    except (NoConvergence, *EVAL_ERRORS):
        pass
    return None


def _assign_pairs(branches: list[Branch], opts: RootOptions,
                  tol: float = 1e-8) -> None:
    """Mark branch pairs that are complex conjugates of each other."""
    for i, bi in enumerate(branches):
        if bi.pair_id is not None:
            continue
        for bj in branches[i + 1:]:
            if bj.pair_id is not None:
                continue
            shared = _shared_complex_points(bi, bj, opts)
            if not shared:
                continue
            if all(abs(e1.conjugate() - e2) < max(tol, 1e-8 * abs(e1)) for e1, e2 in shared):
                bi.pair_id = bj.id
                bj.pair_id = bi.id
                break


def _shared_complex_points(b1: Branch, b2: Branch, opts: RootOptions):
    pts2 = {p.lam: p.energy for p in b2.points}
    out = []
    for p in b1.points:
        if p.lam in pts2:
            e1, e2 = p.energy, pts2[p.lam]
            if abs(e1.imag) > opts.real_axis_tol and abs(e2.imag) > opts.real_axis_tol:
                out.append((e1, e2))
    return out


def pair_conjugates(energies, pair_tol: float = 1e-8,
                    real_tol: float = 1e-9) -> list[Optional[int]]:
    """Greedy conjugate pairing of a root list.

    Returns, for each input index, the index of its conjugate partner or
    None for (snapped-)real and unpaired roots.
    """
    energies = [complex(e) for e in energies]
    partner: list[Optional[int]] = [None] * len(energies)
    order = sorted(range(len(energies)),
                   key=lambda i: (energies[i].real, abs(energies[i].imag)))
    for i in order:
        if partner[i] is not None or abs(energies[i].imag) < real_tol:
            continue
        best_j, best_d = None, np.inf
        for j in order:
            if j == i or partner[j] is not None or abs(energies[j].imag) < real_tol:
                continue
            d = abs(energies[i].conjugate() - energies[j])
            if d < best_d:
                best_j, best_d = j, d
        if best_j is not None and best_d < pair_tol:
            partner[i] = best_j
            partner[best_j] = i
    return partner


def _pair_table(b1: Branch, b2: Branch):
    """Common-lambda table [(lam, E1, E2)] of two branches."""
    pts2 = {p.lam: p for p in b2.points}
    rows = []
    for p in b1.points:
        q = pts2.get(p.lam)
        if q is not None:
            rows.append((p.lam, p.energy, q.energy))
    return rows


def _richardson_eps0(rows) -> Optional[float]:
    """Two-point limit of the doublet midpoint, extrapolated in splitting^2.

    The midpoint approaches eps0 like the square of the (exponentially
    small) splitting, so m = eps0 + D s^2 fitted on the last two points
    cancels the leading correction.
    """
    tail = [(0.5 * (e1.real + e2.real), abs(e1 - e2)) for _, e1, e2 in rows[-2:]]
    if len(tail) < 2:
        return None
    (m1, s1), (m2, s2) = tail
    if s1 == s2:
        return m2
    return (m2 * s1 * s1 - m1 * s2 * s2) / (s1 * s1 - s2 * s2)


def classify_transition(pair, family: Optional[Callable[[float], CharFn]] = None,
                        hermitian_reference=None,
                        opts: RootOptions = RootOptions(),
                        merge_tol: float = 1e-6,
                        containment_rtol: float = 1e-4) -> TransitionReport:
    """Classify the lowest branch pair as merging, coalescing, or neither.

    Coalescing: the pair turns complex somewhere along the sweep; the
    exceptional point is refined with the 2D Newton solver (seeded at the
    transition) and the square-root splitting exponent is measured. When the
    pair is complex from the very first grid point the report is still
    `coalescing` but may carry no exceptional point (it lies below the
    sweep range).

    Merging: both branches stay real, approach each other monotonically and
    end closer than `merge_tol`; eps0 is the extrapolated common limit.

    When a Hermitian reference pair is supplied, `contained` records whether
    the coalesced level's Re E stays inside the reference interval at every
    shared post-transition grid point, within a resolution tolerance
    proportional to 1 + |eps0|.
    """
    b1, b2 = pair
    rows = _pair_table(b1, b2)
    if not rows:
        raise AmbiguousTransition("branch pair shares no grid points")
    status = [
        (abs(e1.imag) > 10.0 * opts.real_axis_tol * max(1.0, abs(e1))
         or abs(e2.imag) > 10.0 * opts.real_axis_tol * max(1.0, abs(e2)))
        for _, e1, e2 in rows
    ]
    flips = [i for i in range(1, len(status)) if status[i] != status[i - 1]]
    if len(flips) > 1:
        raise AmbiguousTransition(
            f"pair status flips {len(flips)} times across the real-axis tolerance"
        )

    if not any(status):
        # all real: merging or not-yet-merged
        splittings = [abs(e1 - e2) for _, e1, e2 in rows]
        tail = splittings[len(splittings) // 2:]
        # ordering is only meaningful above the splitting noise floor
        monotone = all(
            tail[i + 1] <= tail[i] * (1 + 1e-9) or tail[i + 1] < merge_tol
            for i in range(len(tail) - 1)
        )
        if splittings[-1] < merge_tol and monotone:
            eps0 = _richardson_eps0(rows)
            return TransitionReport(kind="merging", epsilon0=eps0)
        return TransitionReport(kind="none",
                                note=f"pair real throughout; final splitting "
                                     f"{splittings[-1]:.3e}")

    # some complex region: coalescing
    ep: Optional[EPResult] = None
    lambda_star: Optional[float] = None
    note = ""
    if flips:
        k = flips[0]
        if status[0]:
            raise AmbiguousTransition("pair starts complex and later becomes real")
        lam_seed = 0.5 * (rows[k - 1][0] + rows[k][0])
        e_seed = 0.5 * (rows[k - 1][1] + rows[k - 1][2])
        span = 2.0 * abs(rows[k][0] - rows[k - 1][0])
        if family is not None:
            try:
                e_star, lam_star, r_f, r_df = _refine_ep(family, e_seed, lam_seed)
                if abs(lam_star - lam_seed) > max(span, 1e-6):
                    raise NoConvergence(
                        f"EP drifted from the bracketing cell: {lam_star} vs {lam_seed}"
                    )
                beta = _splitting_exponent(family, e_star, lam_star, opts)
                ep = EPResult(param_star=float(lam_star),
                              energy_star=_snap_energy(e_star, opts),
                              residual_F=r_f, residual_dF=r_df,
                              splitting_exponent=beta)
                lambda_star = ep.param_star
            except (NoConvergence, *EVAL_ERRORS) as exc:
                note = f"EP refinement failed: {exc}"
                lambda_star = lam_seed
        else:
            lambda_star = lam_seed
    else:
        # complex from the first grid point: the EP lies below the sweep range
        note = "pair complex from sweep start"
        if family is not None:
            try:
                e_seed = 0.5 * (rows[0][1] + rows[0][2])
                e_star, lam_star, r_f, r_df = _refine_ep(family, e_seed, rows[0][0])
                if lam_star < rows[0][0]:
                    beta = _splitting_exponent(family, e_star, lam_star, opts)
                    ep = EPResult(param_star=float(lam_star),
                                  energy_star=_snap_energy(e_star, opts),
                                  residual_F=r_f, residual_dF=r_df,
                                  splitting_exponent=beta)
                    lambda_star = ep.param_star
                    note += "; EP refined below sweep range"
            except (NoConvergence, *EVAL_ERRORS):
                pass

    contained = None
    if hermitian_reference is not None:
        contained = _containment(rows, status, lambda_star, hermitian_reference,
                                 containment_rtol)
    return TransitionReport(kind="coalescing", lambda_star=lambda_star,
                            ep=ep, contained=contained, note=note)


def _containment(rows, status, lambda_star, hermitian_reference,
                 rtol: float) -> Optional[bool]:
    h1, h2 = hermitian_reference
    ref = {(p.lam): p.energy for p in h1.points}
    ref2 = {(p.lam): p.energy for p in h2.points}
    eps0_ref = _richardson_eps0(_pair_table(h1, h2))
    tol = rtol * (1.0 + (abs(eps0_ref) if eps0_ref is not None else 0.0))
    checked = 0
    ok = True
    for (lam, e1, e2), cplx in zip(rows, status):
        if not cplx:
            continue
        if lambda_star is not None and lam < lambda_star:
            continue
        if lam not in ref or lam not in ref2:
            continue
        lo = min(ref[lam].real, ref2[lam].real) - tol
        hi = max(ref[lam].real, ref2[lam].real) + tol
        re = 0.5 * (e1.real + e2.real)
        checked += 1
        if not (lo <= re <= hi):
            ok = False
    return ok if checked else None
