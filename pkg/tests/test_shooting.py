"""Tests for the shooting solver on the smooth potential families.

Analytic anchors: the particle-in-a-box spectrum, the sech-profile ground
state of the sech^2 well (depth 2 gives E = -1 exactly), and the harmonic
ladder of x^2/4 (E_n = n + 1/2; substitute psi0 = exp(-x^2/4)).
"""

import numpy as np
import pytest

from ptspectra.errors import UnboundedPotential
from ptspectra.potentials import (
    HermitianCounterpart,
    LinearBox,
    LinearPT,
    QuadraticPT,
    ScarfII,
)
from ptspectra.rootfind import RootOptions, polish
from ptspectra.shooting import (
    ShootingOptions,
    build_charfn_shooting,
    eigenvalues_shooting,
    integrate_side,
    mismatch,
)

BOX = [(n * np.pi / 2) ** 2 for n in (1, 2, 3)]


def test_box_ground_state_wronskian_vanishes():
    w = mismatch(LinearBox(g=0.0), BOX[0], ShootingOptions(n_steps=2000))
    assert abs(w) < 1e-9


def test_scarf_ground_state_wronskian_vanishes():
    w = mismatch(ScarfII(v1=2.0, v2=0.0), -1.0, ShootingOptions(L=10.0, n_steps=4000))
    assert abs(w) < 1e-9


def test_scarf_ground_state_polished():
    f = build_charfn_shooting(ScarfII(v1=2.0, v2=0.0), ShootingOptions(L=10.0, n_steps=4000))
    root = polish(f, -0.9)
    assert root.energy.real == pytest.approx(-1.0, abs=1e-7)


def test_integrate_side_box_proportional_solutions():
    opts = ShootingOptions(n_steps=2000)
    psi_l, dpsi_l = integrate_side(LinearBox(g=0.0), BOX[0], "left", opts)
    psi_r, dpsi_r = integrate_side(LinearBox(g=0.0), BOX[0], "right", opts)
    assert psi_l * dpsi_r - dpsi_l * psi_r == pytest.approx(0.0, abs=1e-9)


def test_rk4_order():
    """Doubling n_steps shrinks the Wronskian change by ~2^4."""
    spec = QuadraticPT(g=0.3)
    E = 1.3 + 0.1j
    w = [mismatch(spec, E, ShootingOptions(L=10.0, n_steps=n))
         for n in (500, 1000, 2000)]
    d1 = abs(w[1] - w[0])
    d2 = abs(w[2] - w[1])
    assert d2 <= d1 / 12.0


def test_box_spectrum_via_roots():
    roots = eigenvalues_shooting(
        LinearBox(g=0.0), {"re": (0.5, 30.0), "im": (-1.0, 1.0)},
        ShootingOptions(n_steps=2000), n_real=400,
    )
    assert len(roots) == 3
    for root, e in zip(roots, BOX):
        assert root.energy.real == pytest.approx(e, abs=1e-6)


def test_quadratic_pt_hermitian_ladder():
    """x^2/4 is the half-unit oscillator: E_n = n + 1/2."""
    roots = eigenvalues_shooting(
        QuadraticPT(g=0.0), {"re": (0.1, 3.2), "im": (-1.0, 1.0)},
        ShootingOptions(L=10.0, n_steps=3000), n_real=400,
    )
    assert [round(r.energy.real, 6) for r in roots] == pytest.approx(
        [0.5, 1.5, 2.5], abs=1e-6
    )


def test_pt_conjugation_of_wronskian():
    opts = ShootingOptions(L=10.0, n_steps=1000)
    for spec in (LinearBox(g=1.0), QuadraticPT(g=0.4), LinearPT(g=0.8)):
        o = ShootingOptions(n_steps=1000) if isinstance(spec, LinearBox) else opts
        for E in (1.0 + 0.3j, 2.7 - 0.2j):
            assert mismatch(spec, np.conj(E), o) == pytest.approx(
                np.conj(mismatch(spec, E, o)), rel=1e-12
            )


def test_spectra_even_in_g():
    """E_n(-g) = E_n(g) for the smooth PT families."""
    cases = [
        (LinearBox, dict(), {"re": (0.5, 25.0), "im": (-2.0, 2.0)},
         ShootingOptions(n_steps=1500), 1.5),
        (QuadraticPT, dict(), {"re": (0.2, 4.0), "im": (-2.0, 2.0)},
         ShootingOptions(L=10.0, n_steps=2500), 0.4),
        (LinearPT, dict(), {"re": (0.3, 3.5), "im": (-2.0, 2.0)},
         ShootingOptions(L=10.0, n_steps=2500), 0.6),
    ]
    for cls, kw, rect, opts, g in cases:
        plus = eigenvalues_shooting(cls(g=g, **kw), rect, opts)
        minus = eigenvalues_shooting(cls(g=-g, **kw), rect, opts)
        assert len(plus) == len(minus) and plus
        for a, b in zip(plus, minus):
            assert abs(a.energy - b.energy) < 1e-8


def test_counterpart_unbounded_below_detected():
    """x^2/4 - g x|x| is unbounded below for g >= 1/4."""
    bad = HermitianCounterpart(of=QuadraticPT(g=0.3), sign=+1)
    with pytest.raises(UnboundedPotential):
        eigenvalues_shooting(bad, {"re": (0.0, 3.0), "im": (-1.0, 1.0)},
                             ShootingOptions(L=10.0, n_steps=1000))
    ok = HermitianCounterpart(of=QuadraticPT(g=0.2), sign=+1)
    roots = eigenvalues_shooting(ok, {"re": (0.1, 2.0), "im": (-1.0, 1.0)},
                                 ShootingOptions(L=10.0, n_steps=2500), n_real=300)
    assert roots


def test_truncation_independence():
    """Eigenvalues move < 1e-8 when L grows from 8 to 12 (low-lying states)."""
    vals = []
    for L in (8.0, 12.0):
        f = build_charfn_shooting(ScarfII(v1=6.0, v2=1.0),
                                  ShootingOptions(L=L, n_steps=6000))
        vals.append(polish(f, -3.9).energy)
    assert abs(vals[0] - vals[1]) < 1e-8


def test_grid_independence():
    """Eigenvalues move < 1e-8 when n_steps doubles from the default."""
    spec = QuadraticPT(g=0.2)
    vals = []
    for n in (4000, 8000):
        f = build_charfn_shooting(spec, ShootingOptions(L=10.0, n_steps=n))
        vals.append(polish(f, 0.52 + 0.0j).energy)
    assert abs(vals[0] - vals[1]) < 1e-8


@pytest.mark.slow
def test_scarf_transition_near_quarter_offset():
    """Lowest pair turns complex at v2 = v1 + 1/4 (v1 = 4 -> 4.25)."""
    from ptspectra.rootfind import bisect_transition, find_all_roots

    opts = ShootingOptions(L=10.0, n_steps=3000)

    def family(v2):
        return build_charfn_shooting(ScarfII(v1=4.0, v2=v2), opts)

    start = find_all_roots(family(4.05), {"re": (-3.0, -0.05), "im": (-1.2, 1.2)},
                           RootOptions(), nx=100, ny=40)
    assert len(start) >= 2 and all(r.classification == "real" for r in start)
    v2_star = bisect_transition(
        family, 4.05, 4.45, seed_pair=(start[0].energy, start[1].energy), tol=1e-4
    )
    assert v2_star == pytest.approx(4.25, abs=1e-3)
