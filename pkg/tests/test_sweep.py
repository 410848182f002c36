"""Tests for branch continuation and transition classification."""

import numpy as np
import pytest

from ptspectra.potentials import DeltaInBox, DoubleDelta
from ptspectra.rootfind import RootOptions
from ptspectra.sweep import (
    SweepPlan,
    classify_transition,
    make_family,
    pair_conjugates,
    run_sweep,
)

REGION = {"re": (-4.6, -1e-4), "im": (-1.6, 1.6)}


def dddp_plan(g, grid, n_levels=2, **kw):
    return SweepPlan(
        spec_template=DoubleDelta(u=2.0, g=g, a=grid[0]),
        axis="a", grid=tuple(grid), region=REGION, n_levels=n_levels, **kw,
    )


def grid_of(start, stop, step):
    n = int(round((stop - start) / step))
    return [start + k * step for k in range(n + 1)]


# ---------------------------------------------------------------------------
# run_sweep


def test_hermitian_sweep_structure():
    """g=0: two real branches approach -1 from opposite sides."""
    plan = dddp_plan(0.0, grid_of(1.5, 8.0, 0.1))
    branches = run_sweep(plan)
    assert len(branches) == 2
    lower, upper = sorted(branches, key=lambda b: b.points[0].energy.real)
    for b in branches:
        assert all(p.energy.imag == 0.0 for p in b.points)
    assert lower.points[-1].energy.real < -1.0 < upper.points[-1].energy.real
    assert abs(lower.points[-1].energy.real + 1) < 2e-3
    assert abs(upper.points[-1].energy.real + 1) < 2e-3


def test_branch_birth_on_rescan():
    """The odd level binds at a = 2/u = 1 and must be picked up mid-sweep."""
    plan = dddp_plan(0.0, grid_of(0.5, 4.0, 0.05))
    branches = run_sweep(plan)
    assert len(branches) == 2
    born = sorted(branches, key=lambda b: b.points[0].lam)[-1]
    assert born.points[0].lam > 1.0  # appears after the binding threshold


def test_pt_sweep_coalesces_and_pairs():
    plan = dddp_plan(0.1, grid_of(1.5, 8.0, 0.1))
    branches = run_sweep(plan)
    assert len(branches) == 2
    b1, b2 = branches
    # real at the start, conjugate partners at the end
    assert b1.points[0].energy.imag == 0.0
    assert b2.points[0].energy.imag == 0.0
    assert abs(b1.points[-1].energy.imag) > 1e-3
    assert b1.points[-1].energy == pytest.approx(
        np.conj(b2.points[-1].energy), abs=1e-10
    )
    assert b1.pair_id == b2.id and b2.pair_id == b1.id


def test_pt_closure_along_sweep():
    plan = dddp_plan(0.1, grid_of(1.5, 8.0, 0.1))
    branches = run_sweep(plan)
    by_lam = {}
    for b in branches:
        for p in b.points:
            by_lam.setdefault(p.lam, []).append(p.energy)
    for lam, energies in by_lam.items():
        for e in energies:
            assert min(abs(np.conj(e) - t) for t in energies) < 1e-8


def test_sweep_grid_refinement_stability():
    coarse = dddp_plan(0.1, grid_of(2.0, 4.0, 0.1))
    fine = dddp_plan(0.1, grid_of(2.0, 4.0, 0.05))
    bc = run_sweep(coarse)
    bf = run_sweep(fine)
    coarse_pts = {(round(p.lam, 9), b.id): p.energy for b in bc for p in b.points}
    fine_pts = {(round(p.lam, 9), b.id): p.energy for b in bf for p in b.points}
    shared = set(coarse_pts) & set(fine_pts)
    assert len(shared) >= 20
    for key in shared:
        assert abs(coarse_pts[key] - fine_pts[key]) < 1e-8


# ---------------------------------------------------------------------------
# classification


def test_classify_merging():
    plan = dddp_plan(0.0, grid_of(1.5, 16.0, 0.1))
    branches = run_sweep(plan)
    report = classify_transition(tuple(branches), family=make_family(plan))
    assert report.kind == "merging"
    assert report.epsilon0 == pytest.approx(-1.0, abs=1e-6)
    assert report.ep is None


def test_classify_coalescing_with_ep():
    plan = dddp_plan(0.1, grid_of(1.5, 8.0, 0.1))
    branches = run_sweep(plan)
    ref_plan = dddp_plan(0.0, grid_of(1.5, 8.0, 0.1))
    ref = run_sweep(ref_plan)
    report = classify_transition(tuple(branches), family=make_family(plan),
                                 hermitian_reference=tuple(ref))
    assert report.kind == "coalescing"
    assert report.ep is not None
    assert report.lambda_star == pytest.approx(report.ep.param_star)
    assert 0.4 <= report.ep.splitting_exponent <= 0.6
    assert report.ep.residual_F <= 1e-9 and report.ep.residual_dF <= 1e-9
    # at the default (tight) resolution the O(g^2) offset of the coalesced
    # level eventually exceeds the collapsed Hermitian splitting; a coarser
    # resolution tolerance sees the level as contained
    assert report.contained is False
    coarse = classify_transition(tuple(branches), family=make_family(plan),
                                 hermitian_reference=tuple(ref),
                                 containment_rtol=5e-3)
    assert coarse.contained is True
    # beyond the transition the real part re-locks near the single-well level
    post = [p.energy.real for p in branches[0].points
            if p.lam >= report.lambda_star + 2.0]
    assert post and max(abs(e + 1.0) for e in post) < 1e-2


def test_classify_none_when_not_merged():
    plan = dddp_plan(0.0, grid_of(1.5, 4.0, 0.1))
    branches = run_sweep(plan)
    report = classify_transition(tuple(branches), family=make_family(plan))
    assert report.kind == "none"


def test_small_g_matches_hermitian_below_transition():
    """Well below the transition, eigenvalues differ from g=0 by < 10 g^2."""
    g = 0.1
    grid = grid_of(1.5, 2.0, 0.1)
    pt = run_sweep(dddp_plan(g, grid))
    herm = run_sweep(dddp_plan(0.0, grid))
    for bp, bh in zip(pt, herm):
        for p, q in zip(bp.points, bh.points):
            assert abs(p.energy - q.energy) < 10 * g * g


# ---------------------------------------------------------------------------
# pairing labels


def test_pair_conjugates_basic():
    partners = pair_conjugates([-1 + 0.2j, -1 - 0.2j, -0.3])
    assert partners == [1, 0, None]


def test_pair_conjugates_all_real():
    assert pair_conjugates([-2.0, -1.0, -0.5]) == [None, None, None]


def test_pair_conjugates_snapped_real():
    partners = pair_conjugates([-1 + 1e-12j, -1 - 1e-12j])
    assert partners == [None, None]


# ---------------------------------------------------------------------------
# delta-in-box sweep with tracked walls (next levels stay real)


def test_delta_box_tracked_wall_sweep():
    plan = SweepPlan(
        spec_template=DeltaInBox(u=2.0, g=0.1, a=2.0, b=1.0),
        axis="a", grid=tuple(grid_of(2.0, 6.0, 0.1)),
        region={"re": (-2.2, 12.0), "im": (-1.3, 1.3)},
        n_levels=4, axis_mode="wall_with_fixed_gap",
    )
    branches = run_sweep(plan)
    assert len(branches) == 4
    ordered = sorted(branches, key=lambda b: b.points[0].energy.real)
    report = classify_transition(tuple(ordered[:2]), family=make_family(plan))
    assert report.kind == "coalescing"
    for b in ordered[2:]:
        assert all(p.energy.imag == 0.0 for p in b.points)
