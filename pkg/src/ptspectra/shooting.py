"""Complex-energy shooting solver for the smooth potential families.

Integrates psi'' = (V(x) - E) psi from both boundaries toward a matching
point with fixed-step RK4 and root-finds the Wronskian mismatch

    W(E) = psi_L psi_R' - psi_L' psi_R   at the match point,

which vanishes exactly at eigenvalues. Rigid-wall potentials start from
psi = 0, psi' = 1 at the walls; unbounded domains start at +-L with the
decaying WKB initialization psi = 1, psi' = +-kappa, kappa = sqrt(V - E).

Integration is vectorized over a batch of energies (the potential is
evaluated once per step, shared across the batch), which is what makes
scans and lock-step Newton polishing affordable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chareq import CharFn, momentum_p
from .errors import IntegrationOverflow, UnboundedPotential
from .potentials import (
    HermitianCounterpart,
    LinearBox,
    LinearPT,
    PotentialSpec,
    QuadraticPT,
    ScarfII,
    base_family,
    evaluate_potential,
    is_real_potential,
    wall_halfwidth,
)
from .rootfind import Root, RootOptions, find_all_roots, polish_many

OVERFLOW_LIMIT = 1e150


@dataclass(frozen=True)
class ShootingOptions:
    L: float = 10.0
    n_steps: int = 4000
    match_point: float = 0.0
    renorm_every: int = 100

    def __post_init__(self):
        if self.L <= 0 or self.n_steps < 10:
            raise ValueError("shooting options out of range")


def _require_smooth(spec: PotentialSpec):
    base = base_family(spec)
    if not isinstance(base, (LinearBox, QuadraticPT, LinearPT, ScarfII)):
        raise TypeError(f"shooting handles smooth families only, got {spec!r}")


def _start_x(spec: PotentialSpec, side: str, opts: ShootingOptions) -> float:
    wall = wall_halfwidth(spec)
    half = wall if wall is not None else opts.L
    return -half if side == "left" else +half


def _wkb_kappa(spec: PotentialSpec, x: float, E):
    """Decaying-solution logarithmic derivative sqrt(V(x) - E), Re >= 0.

    For a real potential a non-positive V - E means the boundary is
    classically allowed: there is no decaying channel to select at that
    energy. Such entries come back NaN (the mismatch then reports
    not-a-number and the energy is discarded by the root finder);
    `ensure_confining` performs the loud whole-potential check.
    """
    E = np.asarray(E, dtype=complex)
    v = evaluate_potential(spec, x)
    z = v - E
    z = np.where(z.imag == 0.0, z.real + 0j, z)
    if is_real_potential(spec):
        z = np.where(z.real <= 0, np.nan + 0j, z)
    kappa = np.sqrt(z)
    return np.where(kappa.real < 0, -kappa, kappa)


def ensure_confining(spec: PotentialSpec, opts: ShootingOptions, e_max: float):
    """Raise UnboundedPotential unless V(+-L) lies above every probed energy.

    This is the WKB-initialization criterion: for a real potential with
    V(+-L) <= Re E there is no evanescent channel at the truncation
    boundary (e.g. x^2/4 - g x|x| with g >= 1/4 is unbounded below and
    fails for every L).
    """
    if wall_halfwidth(spec) is not None or not is_real_potential(spec):
        return
    for x in (-opts.L, opts.L):
        v = complex(evaluate_potential(spec, x)).real
        if v <= e_max:
            raise UnboundedPotential(
                f"V({x:+g}) = {v:g} does not exceed the energy window top "
                f"{e_max:g}; no decaying WKB initialization for {spec!r}"
            )


def _integrate_batch(spec, E, side: str, opts: ShootingOptions):
    """RK4-integrate (psi, psi') from the boundary to the match point.

    Returns (psi, psi') arrays at the match point after periodic max-norm
    renormalization (the common scale cancels in the Wronskian).
    """
    E = np.atleast_1d(np.asarray(E, dtype=complex))
    x0 = _start_x(spec, side, opts)
    x1 = opts.match_point
    n = opts.n_steps
    h = (x1 - x0) / n
    if wall_halfwidth(spec) is not None:
        psi = np.zeros_like(E)
        dpsi = np.ones_like(E)
    else:
        kap = _wkb_kappa(spec, x0, E)
        psi = np.ones_like(E)
        dpsi = kap if side == "left" else -kap

    # V depends only on x; precompute the three RK4 sample values per step
    xs = x0 + h * np.arange(n)
    v_a = evaluate_potential(spec, xs)
    v_b = evaluate_potential(spec, xs + h / 2)
    v_c = evaluate_potential(spec, xs + h)
    for k in range(n):
        c_a = v_a[k] - E
        c_b = v_b[k] - E
        c_c = v_c[k] - E
        k1p, k1d = dpsi, c_a * psi
        p2 = psi + (h / 2) * k1p
        k2p, k2d = dpsi + (h / 2) * k1d, c_b * p2
        p3 = psi + (h / 2) * k2p
        k3p, k3d = dpsi + (h / 2) * k2d, c_b * p3
        p4 = psi + h * k3p
        k4p, k4d = dpsi + h * k3d, c_c * p4
        psi = psi + (h / 6) * (k1p + 2 * k2p + 2 * k3p + k4p)
        dpsi = dpsi + (h / 6) * (k1d + 2 * k2d + 2 * k3d + k4d)
        if (k + 1) % opts.renorm_every == 0:
            scale = np.maximum(np.abs(psi), np.abs(dpsi))
            if np.any(scale > OVERFLOW_LIMIT):
                raise IntegrationOverflow(
                    f"|psi| exceeded {OVERFLOW_LIMIT:.0e} integrating {spec!r}"
                )
            scale = np.where(scale == 0, 1.0, scale)
            psi = psi / scale
            dpsi = dpsi / scale
    return psi, dpsi


def integrate_side(spec: PotentialSpec, E: complex, side: str,
                   opts: ShootingOptions = ShootingOptions()):
    """(psi, psi') at the match point for one side ("left" or "right")."""
    _require_smooth(spec)
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if wall_halfwidth(spec) is None:
        x0 = _start_x(spec, side, opts)
        kap = _wkb_kappa(spec, x0, np.atleast_1d(np.asarray(E, dtype=complex)))
        if not np.all(np.isfinite(kap)):
            raise UnboundedPotential(
                f"no decaying channel at x = {x0:+g} for E = {E} ({spec!r})"
            )
    psi, dpsi = _integrate_batch(spec, E, side, opts)
    return complex(psi[0]), complex(dpsi[0])


def _mismatch_batch(spec, E, opts: ShootingOptions):
    pl, dl = _integrate_batch(spec, E, "left", opts)
    pr, dr = _integrate_batch(spec, E, "right", opts)
    w = pl * dr - dl * pr
    norm = (np.abs(pl) + np.abs(dl)) * (np.abs(pr) + np.abs(dr))
    return w / norm


def mismatch(spec: PotentialSpec, E: complex,
             opts: ShootingOptions = ShootingOptions()) -> complex:
    """Normalized Wronskian of the two integrated sides at the match point."""
    _require_smooth(spec)
    w = _mismatch_batch(spec, np.atleast_1d(np.asarray(E, dtype=complex)), opts)
    return complex(w[0])


class _ShootingCharFn(CharFn):
    """CharFn flavor whose physicality uses the smooth-family bound criteria."""

    def __init__(self, spec, opts):
        self.opts = opts
        super().__init__(
            lambda E: _mismatch_batch(spec, E, opts),
            spec,
            f"shooting[{type(base_family(spec)).__name__}]",
            is_real_potential(spec),
        )

    def physical(self, E) -> bool:
        base = base_family(self.spec)
        if isinstance(base, ScarfII):
            # V -> 0 at infinity: decay needs Re sqrt(-E) > 0
            return momentum_p(E).real > 1e-8
        return True


def build_charfn_shooting(spec: PotentialSpec,
                          opts: ShootingOptions = ShootingOptions()) -> CharFn:
    """Wronskian mismatch E -> W(E) packaged for the root-finding machinery."""
    _require_smooth(spec)
    return _ShootingCharFn(spec, opts)


def eigenvalues_shooting(spec: PotentialSpec, rect: dict,
                         opts: ShootingOptions = ShootingOptions(),
                         ropts: RootOptions = RootOptions(),
                         n_real: int = 600, nx: int = 80, ny: int = 24) -> list[Root]:
    """All eigenvalues of a smooth-family spec inside a complex rectangle.

    Seeds come from the scan appropriate to the symmetry (real axis for real
    potentials, |W| grid minima otherwise) and are polished in lock-step
    batches; the result is deduplicated, closed under conjugation for PT
    specs, and sorted by Re E. Raises UnboundedPotential when the potential
    cannot confine the requested energy window at the truncation boundary.
    """
    ensure_confining(spec, opts, float(rect["re"][1]))
    f = build_charfn_shooting(spec, opts)
    if f.hermitian:
        roots = find_all_roots(f, rect, ropts, n_real=n_real)
        return roots
    from .rootfind import scan_complex  # local import keeps module deps one-way

    seeds = scan_complex(f, rect, nx, ny)
    polished = [r for r in polish_many(f, seeds, ropts) if r is not None]
    kept: list[Root] = []
    for r in sorted(polished, key=lambda r: (r.residual, r.energy.real, r.energy.imag)):
        if not any(abs(r.energy - k.energy) < ropts.dedupe_radius for k in kept):
            kept.append(r)
    # PT closure: re-seed missing conjugate partners
    extra = []
    for r in kept:
        if r.classification == "conjugate_pair_member":
            target = r.energy.conjugate()
            if not any(abs(k.energy - target) < ropts.dedupe_radius for k in kept):
                res = polish_many(f, [target], ropts)[0]
                if res is not None:
                    extra.append(res)
    kept.extend(extra)
    kept = [
        r for r in kept
        if r.physical
        and rect["re"][0] - 1e-9 <= r.energy.real <= rect["re"][1] + 1e-9
        and rect["im"][0] - 1e-9 <= r.energy.imag <= rect["im"][1] + 1e-9
    ]
    return sorted(kept, key=lambda r: (r.energy.real, r.energy.imag))
