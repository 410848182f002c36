"""Tests for polishing, scanning, deflation and the exceptional-point solver."""

import numpy as np
import pytest

from ptspectra.chareq import CharFn, build_charfn
from ptspectra.errors import BadBracket, NoConvergence
from ptspectra.potentials import DeltaInBox, DoubleDelta, with_param
from ptspectra.rootfind import (
    RootOptions,
    bisect_transition,
    find_all_roots,
    find_ep,
    polish,
    polish_many,
    scan_complex,
    scan_real,
)


def charfn_of(fn, hermitian=False):
    """Wrap a plain numpy-vectorized callable for the root-finding API."""
    return CharFn(lambda E: fn(np.asarray(E, dtype=complex)), spec=None,
                  label="test", hermitian=hermitian)


def dddp_family(u, g, form="rederived"):
    def family(a):
        return build_charfn(DoubleDelta(u=u, g=g, a=a), form=form)
    return family


# ---------------------------------------------------------------------------
# polish


def test_polish_simple_quadratic():
    f = charfn_of(lambda E: E * E + 1.0)
    root = polish(f, 0.9j)
    assert root.energy == pytest.approx(1j, abs=1e-10)
    assert root.residual <= 1e-11
    assert root.classification == "conjugate_pair_member"


def test_polish_near_single_well_limit():
    # seeding from above converges onto the odd member of the doublet;
    # its exact location solves p = 1 - exp(-10 p) (fixed point iteration)
    p = 1.0
    for _ in range(200):
        p = 1.0 - np.exp(-10.0 * p)
    f = build_charfn(DoubleDelta(u=2.0, g=0.0, a=10.0))
    root = polish(f, -0.9)
    assert root.energy.real == pytest.approx(-p * p, abs=1e-12)
    assert root.energy.real == pytest.approx(-1.0, abs=2e-4)
    assert root.classification == "real"


def test_polish_double_zero():
    f = charfn_of(lambda E: E * E)
    root = polish(f, 0.1)
    assert abs(root.energy) < 1e-5
    assert root.residual <= 1e-11


def test_polish_no_convergence():
    f = charfn_of(lambda E: E * 0 + 1.0)  # no zeros anywhere
    with pytest.raises(NoConvergence):
        polish(f, 1.0)


def test_polish_many_matches_scalar():
    f = build_charfn(DeltaInBox(u=2.0, g=0.0, a=3.0, b=1.0))
    seeds = [-1.3, -0.5, 2.3, 3.4]
    batch = polish_many(f, seeds)
    for seed, got in zip(seeds, batch):
        assert got is not None
        assert got.energy == pytest.approx(polish(f, seed).energy, abs=1e-10)


# ---------------------------------------------------------------------------
# scans


def test_scan_real_box_spectrum():
    f = build_charfn(DeltaInBox(u=0.0, g=0.0, a=1.0, b=0.5))
    seeds = scan_real(f, (0.1, 25.0), 2000)
    expected = [(n * np.pi / 2) ** 2 for n in (1, 2, 3)]
    for e in expected:
        assert min(abs(s - e) for s in seeds) < 0.05


def test_scan_real_dddp_doublet():
    f = build_charfn(DoubleDelta(u=2.0, g=0.0, a=4.0))
    seeds = scan_real(f, (-4.0, -1e-3), 2000)
    near = [s for s in seeds if -1.1 < s < -0.9]
    assert len(near) >= 2


def test_scan_real_empty_interval():
    f = build_charfn(DoubleDelta(u=2.0, g=0.0, a=4.0))
    assert scan_real(f, (-8.0, -5.0), 500) == []


def test_scan_complex_conjugate_closure():
    f = build_charfn(DoubleDelta(u=2.0, g=1.0, a=6.0))
    seeds = scan_complex(f, {"re": (-3.0, -0.1), "im": (-1.0, 1.0)}, 120, 50)
    assert seeds, "expected seeds near the conjugate pair"
    for s in seeds:
        assert any(abs(s.conjugate() - t) < 1e-12 for t in seeds)


# ---------------------------------------------------------------------------
# find_all_roots


def test_find_all_roots_delta_box_doublet_plus_real_levels():
    f = build_charfn(DeltaInBox(u=2.0, g=0.0, a=4.0, b=3.0))
    roots = find_all_roots(f, {"re": (-2.0, 2.0), "im": (-1.0, 1.0)})
    assert len(roots) >= 4
    # lowest two form the tunneling doublet below zero
    assert roots[0].energy.real < roots[1].energy.real < 0
    assert abs(roots[1].energy - roots[0].energy) < 0.8
    # next levels are real
    assert roots[2].classification == "real"
    assert roots[3].classification == "real"


def test_find_all_roots_counts_vs_bound_state_threshold():
    # odd state exists only for a > 2/u; u = 2 puts the threshold at a = 1
    rect = {"re": (-4.0, -1e-4), "im": (-1.0, 1.0)}
    roots_small = find_all_roots(build_charfn(DoubleDelta(u=2.0, g=0.0, a=0.5)), rect)
    roots_large = find_all_roots(build_charfn(DoubleDelta(u=2.0, g=0.0, a=4.0)), rect)
    assert len(roots_small) == 1
    assert len(roots_large) == 2


def test_find_all_roots_conjugate_closure_pt():
    f = build_charfn(DoubleDelta(u=2.0, g=1.0, a=6.0))
    roots = find_all_roots(f, {"re": (-3.0, -0.1), "im": (-1.0, 1.0)})
    assert len(roots) == 2
    assert roots[0].energy == pytest.approx(np.conj(roots[1].energy), abs=1e-10)


def test_find_all_roots_shuffle_invariant():
    """Deflation soundness: seed order must not change the root set."""
    f = build_charfn(DeltaInBox(u=2.0, g=0.0, a=3.0, b=1.0))
    rect = {"re": (-2.5, 8.0), "im": (-1.0, 1.0)}
    reference = find_all_roots(f, rect)

    class _Shuffled:
        hermitian = f.hermitian

        def __call__(self, E):
            return f(E)

        def batch(self, E):
            return f.batch(E)

        def physical(self, E):
            return f.physical(E)

    rng = np.random.default_rng(123)
    from ptspectra import rootfind

    orig_scan = rootfind.scan_real

    def shuffled_scan(ff, interval, n):
        seeds = orig_scan(ff, interval, n)
        rng.shuffle(seeds)
        return seeds

    rootfind_scan = rootfind.scan_real
    rootfind.scan_real = shuffled_scan
    try:
        shuffled = find_all_roots(_Shuffled(), rect)
    finally:
        rootfind.scan_real = rootfind_scan
    assert len(shuffled) == len(reference)
    for a in reference:
        assert min(abs(a.energy - b.energy) for b in shuffled) < 1e-8


def test_root_residual_reevaluated():
    f = build_charfn(DoubleDelta(u=2.0, g=0.1, a=3.0))
    roots = find_all_roots(f, {"re": (-3.0, -0.1), "im": (-1.0, 1.0)})
    for r in roots:
        assert abs(f(r.energy)) <= 1e-11


def test_conjugate_reseeding_converges():
    """Polishing from the conjugate of a found root lands on its partner."""
    f = build_charfn(DoubleDelta(u=2.0, g=0.5, a=5.0))
    roots = find_all_roots(f, {"re": (-2.5, -0.2), "im": (-1.0, 1.0)})
    complex_roots = [r for r in roots if r.classification == "conjugate_pair_member"]
    assert complex_roots
    for r in complex_roots:
        back = polish(f, np.conj(r.energy))
        assert abs(back.energy - np.conj(r.energy)) < 1e-10


# ---------------------------------------------------------------------------
# exceptional points


def test_find_ep_dddp():
    family = dddp_family(2.0, 0.1)
    ep = find_ep(family, seed_E=-1.0 + 0j, seed_lam=3.1)
    assert ep.residual_F <= 1e-9 and ep.residual_dF <= 1e-9
    assert 0.4 <= ep.splitting_exponent <= 0.6
    # independent cross-check: bisection on the real-to-complex transition
    a_star = bisect_transition(family, 2.5, 3.6, seed_E=-1.0 + 0j, tol=1e-9)
    assert ep.param_star == pytest.approx(a_star, abs=1e-6)


def test_find_ep_hermitian_raises_bad_bracket():
    family = dddp_family(2.0, 0.0)
    with pytest.raises(BadBracket):
        find_ep(family, seed_E=-1.0 + 0j, seed_lam=3.0)


def test_bisect_transition_bad_bracket():
    family = dddp_family(2.0, 0.1)
    with pytest.raises(BadBracket):
        bisect_transition(family, 4.0, 5.0, seed_E=-1.0 + 0j)  # complex at both ends
