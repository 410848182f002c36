"""Root location for characteristic functions on the complex energy plane.

Seeding is done by sign-change scans on the real axis (Hermitian problems)
or by |F| minima on a rectangular grid (complex problems); seeds are then
polished by Newton iteration with finite-difference derivatives, falling
back to Muller's method when Newton stagnates. Roots are deflated,
deduplicated, filtered for physicality and sorted.

Exceptional points solve {F(E, lam) = 0, dF/dE(E, lam) = 0} with a 2x2
complex Newton iteration, then measure the square-root splitting law.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .chareq import CharFn
from .errors import (
    BadBracket,
    DegenerateEnergy,
    IntegrationOverflow,
    NoConvergence,
    UnboundedPotential,
)

# evaluation failures that mean "this energy is unusable", not "give up"
EVAL_ERRORS = (DegenerateEnergy, IntegrationOverflow, UnboundedPotential)

log = logging.getLogger(__name__)

FD_STEP = 1e-7


@dataclass(frozen=True)
class RootOptions:
    tol_residual: float = 1e-11
    tol_step: float = 1e-12
    max_iter: int = 100
    dedupe_radius: float = 1e-8
    real_axis_tol: float = 1e-9

    def __post_init__(self):
        if min(self.tol_residual, self.tol_step, self.dedupe_radius,
               self.real_axis_tol) <= 0 or self.max_iter <= 0:
            raise ValueError("all root options must be positive")
        if self.dedupe_radius <= self.tol_step:
            raise ValueError("dedupe_radius must exceed tol_step")


@dataclass(frozen=True)
class Root:
    """A polished zero of a characteristic function."""

    energy: complex
    residual: float
    classification: str  # "real" | "conjugate_pair_member"
    physical: bool
    iterations: int


@dataclass(frozen=True)
class EPResult:
    """An exceptional point: parameter, degenerate energy, and diagnostics."""

    param_star: float
    energy_star: complex
    residual_F: float
    residual_dF: float
    splitting_exponent: float


class Deflated:
    """f divided by (E - r) for each known root r; forwards batch/trio."""

    def __init__(self, f, roots):
        self._f = f
        self._roots = roots  # list of complex, may grow while shared
        self.hermitian = getattr(f, "hermitian", False)

    def _divisor(self, E):
        E = np.asarray(E, dtype=complex)
        div = np.ones_like(E)
        for r in self._roots:
            d = E - r
            div = div * np.where(d == 0, np.inf, d)
        return div

    def __call__(self, E):
        val = self._f(E)
        return complex((val / self._divisor(E))[()])

    def batch(self, E):
        E = np.asarray(E, dtype=complex)
        val = self._f.batch(E) if hasattr(self._f, "batch") else \
            np.array([self._f(z) for z in E], dtype=complex)
        return val / self._divisor(E)

    def physical(self, E):
        return self._f.physical(E) if hasattr(self._f, "physical") else True

    def __getattr__(self, name):
        # expose trio only when the wrapped function provides one, so that
        # hasattr-based dispatch in polish() stays truthful
        if name == "trio" and hasattr(self._f, "trio"):
            inner = self._f.trio

            def trio(z, h):
                pts = np.array([z, z + h, z - h], dtype=complex)
                return np.asarray(inner(z, h)) / self._divisor(pts)

            return trio
        raise AttributeError(name)


def _snap(energy: complex, tol: float) -> complex:
    if abs(energy.imag) < tol:
        return complex(energy.real, 0.0)
    return energy


def _classify(energy: complex, tol: float) -> str:
    return "real" if abs(energy.imag) < tol else "conjugate_pair_member"


def _muller_step(f, z0, z1, z2, f0, f1, f2):
    """One Muller step from three points; returns the new iterate or None."""
    h1, h2 = z1 - z0, z2 - z1
    if h1 == 0 or h2 == 0 or (h2 + h1) == 0:
        return None
    d1 = (f1 - f0) / h1
    d2 = (f2 - f1) / h2
    a = (d2 - d1) / (h2 + h1)
    b = a * h2 + d2
    disc = np.sqrt(complex(b * b - 4 * f2 * a))
    den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
    if den == 0 or not np.isfinite(abs(den)) or abs(f2) > abs(den) * 1e100:
        return None
    with np.errstate(over="ignore", invalid="ignore"):
        return z2 - 2 * f2 / den


def polish(f, seed: complex, opts: RootOptions = RootOptions(),
           leash: float = None) -> Root:
    """Newton-polish a seed to a zero of f.

    The derivative is a central finite difference with step
    1e-7 * max(1, |E|); Muller's three-point method takes over when the
    Newton step is unusable or the residual stagnates, and steps that make
    |f| worse are halved (damped Newton), which prevents ping-ponging when
    a seed lands between the members of a doublet. Iteration continues to
    step convergence (|dE| <= tol_step), and the result is accepted only if
    the final residual satisfies |f(E)| <= tol_residual.
    """
    fn = f

    def trio(z: complex, h: float):
        if hasattr(fn, "trio"):
            # consistently normalized probe cluster (see oracle.char_det)
            v = fn.trio(z, h)
            return complex(v[0]), complex(v[1]), complex(v[2])
        if hasattr(fn, "batch"):
            v = fn.batch(np.array([z, z + h, z - h], dtype=complex))
            return complex(v[0]), complex(v[1]), complex(v[2])
        return complex(fn(z)), complex(fn(z + h)), complex(fn(z - h))

    def finite(c: complex) -> bool:
        return np.isfinite(c.real) and np.isfinite(c.imag)

    z = complex(seed)
    max_travel = leash if leash is not None else 4.0 * (1.0 + abs(z))
    h = FD_STEP * max(1.0, abs(z))
    try:
        fz, f_plus, f_minus = trio(z, h)
    except EVAL_ERRORS as exc:
        raise NoConvergence(f"function not evaluable at seed {z}: {exc}") from exc
    if not finite(fz):
        raise NoConvergence(f"function not finite at seed {z}")
    best_z, best_f = z, abs(fz)
    stall = 0
    for it in range(1, opts.max_iter + 1):
        if fz == 0:
            best_z, best_f = z, 0.0
            break
        if not (finite(f_plus) and finite(f_minus)):
            break
        deriv = (f_plus - f_minus) / (2 * h)
        step = None
        if deriv != 0 and np.isfinite(deriv.real) and np.isfinite(deriv.imag):
            step = fz / deriv
        use_muller = (
            step is None
            or not (np.isfinite(step.real) and np.isfinite(step.imag))
            or stall >= 3
        )
        if use_muller:
            z_new = _muller_step(fn, z - h, z + h, z, f_minus, f_plus, fz)
            if z_new is None:
                if step is None:
                    raise NoConvergence(f"derivative vanished at {z} and Muller failed")
                z_new = z - step
        else:
            z_new = z - step
        # trust region: an absurd step means the local model broke down
        cap = 2.0 * (1.0 + abs(z))
        if abs(z_new - z) > cap:
            z_new = z + (z_new - z) * cap / abs(z_new - z)
        # a polisher refines a seed; wandering far from it means the seed was
        # bad (or |f| has a spurious descent direction, e.g. toward a
        # continuum region), so give up rather than report a far-away root
        if abs(z_new - seed) > max_travel:
            break
        # backtracking: halve the step while it makes the residual worse
        z_cand, cand, fallback = z_new, None, None
        for _ in range(4):
            h_cand = FD_STEP * max(1.0, abs(z_cand))
            try:
                probe = trio(z_cand, h_cand)
            except EVAL_ERRORS:
                probe = None
            if probe is not None and finite(probe[0]):
                if abs(probe[0]) <= abs(fz) or abs(probe[0]) <= opts.tol_residual:
                    cand = (z_cand, h_cand, probe)
                    break
                if fallback is None:
                    fallback = (z_cand, h_cand, probe)
            z_cand = z + 0.5 * (z_cand - z)
        if cand is not None:
            stall = 0
        elif fallback is not None:
            cand = fallback
            stall += 1
        else:
            break
        if stall >= 8:
            break  # no descent progress; the seed does not lead anywhere
        z_cand, h, (fz, f_plus, f_minus) = cand
        dz = abs(z_cand - z)
        z = z_cand
        if abs(fz) < best_f:
            best_z, best_f = z, abs(fz)
        if dz <= opts.tol_step:
            break
        if best_f <= opts.tol_residual and dz <= 1e-9 * max(1.0, abs(z)):
            # residual met and the step is at the evaluation-noise scale
            break
    else:
        it = opts.max_iter
    if best_f > opts.tol_residual:
        raise NoConvergence(
            f"residual {best_f:.3e} > {opts.tol_residual:.1e} after {it} iterations"
        )
    energy = _snap(best_z, opts.real_axis_tol)
    physical = f.physical(energy) if hasattr(f, "physical") else True
    return Root(
        energy=energy,
        residual=best_f,
        classification=_classify(energy, opts.real_axis_tol),
        physical=physical,
        iterations=it,
    )


def polish_many(f, seeds: Sequence[complex],
                opts: RootOptions = RootOptions()) -> list[Optional[Root]]:
    """Lock-step Newton polish of many seeds using batched evaluations.

    Returns one entry per seed (None where the iteration failed). Intended
    for expensive characteristic functions (shooting, grid determinants);
    each Newton iteration costs a single batch evaluation of width 3m.
    """
    if not hasattr(f, "batch"):
        out = []
        for s in seeds:
            try:
                out.append(polish(f, s, opts))
            except (NoConvergence, *EVAL_ERRORS):
                out.append(None)
        return out
    return _polish_lockstep(f, seeds, opts, retry_scalar=True)


def _polish_lockstep(f, seeds, opts, retry_scalar: bool):
    m = len(seeds)
    if m == 0:
        return []
    z = np.asarray(seeds, dtype=complex)
    active = np.ones(m, dtype=bool)
    best_z = z.copy()
    best_f = np.full(m, np.inf)
    its = np.zeros(m, dtype=int)
    for _ in range(opts.max_iter):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        h = FD_STEP * np.maximum(1.0, np.abs(z[idx]))
        probes = np.concatenate([z[idx], z[idx] + h, z[idx] - h])
        try:
            vals = f.batch(probes)
        except EVAL_ERRORS:
            # fall back to per-seed scalar polish for the stragglers
            break
        n = len(idx)
        fz, fp, fm = vals[:n], vals[n:2 * n], vals[2 * n:]
        improved = np.abs(fz) < best_f[idx]
        best_f[idx[improved]] = np.abs(fz[improved])
        best_z[idx[improved]] = z[idx[improved]]
        deriv = (fp - fm) / (2 * h)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = fz / deriv
        bad = ~np.isfinite(step.real) | ~np.isfinite(step.imag)
        step[bad] = 0.0
        z[idx] = z[idx] - step
        its[idx] += 1
        done = (np.abs(step) <= opts.tol_step) | bad
        active[idx[done]] = False
    # final residual check (last iterates included) and scalar retry for failures
    out: list[Optional[Root]] = [None] * m
    try:
        res_last = np.abs(f.batch(z))
    except EVAL_ERRORS:
        res_last = np.full(m, np.inf)
    take_last = res_last < best_f
    best_z = np.where(take_last, z, best_z)
    best_f = np.where(take_last, res_last, best_f)
    for i in range(m):
        if best_f[i] <= opts.tol_residual:
            energy = _snap(complex(best_z[i]), opts.real_axis_tol)
            out[i] = Root(energy, float(best_f[i]),
                          _classify(energy, opts.real_axis_tol),
                          f.physical(energy) if hasattr(f, "physical") else True,
                          int(its[i]))
        elif retry_scalar:
            from dataclasses import replace as _replace

            try:
                out[i] = polish(f, complex(seeds[i]),
                                _replace(opts, max_iter=min(opts.max_iter, 30)))
            except (NoConvergence, *EVAL_ERRORS):
                out[i] = None
    return out


def scan_real(f, interval: tuple[float, float], n: int) -> list[float]:
    """Seed candidates on a real interval from sign changes of F.

    Sign changes of Re F and Im F are both inspected: Hermitian residuals
    are confined to a line through the origin of the complex plane, but that
    line may be the real or the imaginary axis (or rotate with any analytic
    prefactor), so either component may carry the crossing.

    A tunneling doublet tighter than one grid cell flips sign twice inside
    the cell and leaves no net change; such pairs are caught instead as deep
    local minima of |F| (two orders below the grid median), and those seeds
    are emitted twice so that deflation can extract both partners.

    Midpoints of flagged cells are returned; spurious candidates are cheap
    to reject in the polish stage.
    """
    lo, hi = interval
    grid = np.linspace(lo, hi, n)
    try:
        vals = f.batch(grid) if hasattr(f, "batch") else np.array([f(x) for x in grid])
    except EVAL_ERRORS:
        vals = np.empty(n, dtype=complex)
        for i, x in enumerate(grid):
            try:
                vals[i] = f(x)
            except EVAL_ERRORS:
                vals[i] = np.nan
    seeds = [0.5 * (grid[i] + grid[i + 1]) for i in _component_flips(vals)]
    mag = np.abs(vals)
    med = np.nanmedian(mag)
    interior = mag[1:-1]
    deep = (
        (interior < mag[:-2]) & (interior < mag[2:]) & (interior < med / 100.0)
        & np.isfinite(interior)
    )
    doubled = [float(grid[i + 1]) for i in np.nonzero(deep)[0]]
    return sorted(set(seeds)) + sorted(doubled) * 2


def _component_flips(cvals: np.ndarray) -> list[int]:
    """Cell indices where Re F or Im F changes sign significantly.

    A component flip only counts where that component is not mere rounding
    noise on the other one (a residual confined to a line in the complex
    plane keeps a ~1e-16-relative transverse component that flips sign at
    random).
    """
    out: set[int] = set()
    mag = np.abs(cvals)
    for comp in (cvals.real, cvals.imag):
        finite = np.isfinite(comp)
        s = np.sign(comp)
        significant = np.abs(comp) >= 1e-6 * mag
        flip = ((s[:-1] * s[1:] < 0) & finite[:-1] & finite[1:]
                & significant[:-1] & significant[1:])
        out.update(np.nonzero(flip)[0].tolist())
    return sorted(out)


def _winding_seeds(cvals: np.ndarray, EE: np.ndarray) -> list[complex]:
    """Centers of grid plaquettes around which arg(F) winds by ~2 pi."""
    phase = np.angle(cvals)

    def wrap(d):
        return (d + np.pi) % (2 * np.pi) - np.pi

    d_right = wrap(np.diff(phase, axis=1))   # (ny, nx-1)
    d_up = wrap(np.diff(phase, axis=0))      # (ny-1, nx)
    winding = (d_right[:-1, :] + d_up[:, 1:] - d_right[1:, :] - d_up[:, :-1])
    finite = np.isfinite(cvals)
    ok = finite[:-1, :-1] & finite[:-1, 1:] & finite[1:, :-1] & finite[1:, 1:]
    hits = ok & (np.abs(winding) > np.pi)
    out = []
    for iy, ix in zip(*np.nonzero(hits)):
        out.append(complex(EE[iy:iy + 2, ix:ix + 2].mean()))
    return out


def scan_complex(f, rect: dict, nx: int, ny: int) -> list[complex]:
    """Seed candidates inside a complex rectangle from local minima of |F|.

    Grid points that are local minima of |F| and at least a factor 100 below
    the grid median are kept, along with the global minimum. PT spectra keep
    many roots exactly on the real axis, where a coarse grid row rarely dips
    below the depth threshold, so when the rectangle straddles Im E = 0 that
    row is scanned explicitly and its 1D minima are seeded as well (twice,
    so deflation can split unresolved doublets). The final list is closed
    under complex conjugation so both members of a PT pair are seeded.
    """
    re_lo, re_hi = rect["re"]
    im_lo, im_hi = rect["im"]
    xs = np.linspace(re_lo, re_hi, nx)
    ys = np.linspace(im_lo, im_hi, ny)
    if im_lo < 0.0 < im_hi and not np.any(ys == 0.0):
        ys = np.sort(np.append(ys, 0.0))
    ny_eff = len(ys)
    EE = xs[None, :] + 1j * ys[:, None]
    try:
        cvals = f.batch(EE.ravel()).reshape(ny_eff, nx)
    except EVAL_ERRORS:
        cvals = np.full((ny_eff, nx), np.nan, dtype=complex)
        for iy in range(ny_eff):
            for ix in range(nx):
                try:
                    cvals[iy, ix] = f(EE[iy, ix])
                except EVAL_ERRORS:
                    pass
    vals = np.abs(cvals)
    med = np.nanmedian(vals)
    seeds: list[complex] = []
    padded = np.full((ny_eff + 2, nx + 2), np.inf)
    padded[1:-1, 1:-1] = np.where(np.isfinite(vals), vals, np.inf)
    interior = padded[1:-1, 1:-1]
    is_min = np.ones((ny_eff, nx), dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            is_min &= interior <= padded[1 + dy:ny_eff + 1 + dy, 1 + dx:nx + 1 + dx]
    deep = is_min & (interior < med / 100.0)
    iy0, ix0 = np.unravel_index(np.nanargmin(np.where(np.isfinite(vals), vals, np.inf)),
                                vals.shape)
    deep[iy0, ix0] = True
    for iy, ix in zip(*np.nonzero(deep)):
        seeds.append(complex(EE[iy, ix]))
    # argument-principle sweep: the phase of F winds by 2 pi around a zero,
    # and positive rescalings (however jittery in magnitude) cannot touch
    # it. Plaquettes with nonzero winding get a seed at their center; this
    # catches roots whose |F| dip is far narrower than a grid cell.
    seeds.extend(_winding_seeds(cvals, EE))
    axis_rows = np.nonzero(ys == 0.0)[0]
    doubled: list[complex] = []
    if len(axis_rows):
        # PT residuals are real-valued on the real axis, so axis roots show
        # up as sign changes of Re or Im there (exact under any positive
        # rescaling); sub-cell doublets additionally appear as deep dips,
        # seeded twice so deflation can split them
        crow = cvals[axis_rows[0]]
        for ix in _component_flips(crow):
            seeds.append(complex(0.5 * (xs[ix] + xs[ix + 1])))
        row = vals[axis_rows[0]]
        inner = row[1:-1]
        axis_min = (inner < row[:-2]) & (inner < row[2:]) & np.isfinite(inner) \
            & (inner < med / 100.0)
        for ix in np.nonzero(axis_min)[0]:
            doubled.append(complex(xs[ix + 1]))
    mirrored = seeds + [s.conjugate() for s in seeds]
    out: list[complex] = []
    for s in sorted(mirrored, key=lambda z: (z.real, z.imag)):
        if not any(abs(s - t) < 1e-14 for t in out):
            out.append(s)
    return out + sorted(set(doubled), key=lambda z: z.real) * 2


def _dedupe(roots: list[Root], radius: float) -> list[Root]:
    kept: list[Root] = []
    for r in sorted(roots, key=lambda r: (r.residual, r.energy.real, r.energy.imag)):
        if not any(abs(r.energy - k.energy) < radius for k in kept):
            kept.append(r)
    return kept


def find_all_roots(f, rect: dict, opts: RootOptions = RootOptions(),
                   n_real: int = 2000, nx: int = 160, ny: int = 60,
                   keep_unphysical: bool = False) -> list[Root]:
    """Locate all zeros of f inside a rectangle of the complex plane.

    Hermitian problems are seeded on the real axis, complex ones on a 2D
    grid. Seeds are polished against the deflated function (found roots
    divided out), deduplicated, filtered for physicality and sorted by Re E.
    Seeds that fail to converge are dropped (count logged).
    """
    hermitian = getattr(f, "hermitian", False)
    if hermitian:
        seeds = [complex(s) for s in scan_real(f, tuple(rect["re"]), n_real)]
        cell = (rect["re"][1] - rect["re"][0]) / max(n_real, 2)
    else:
        seeds = scan_complex(f, rect, nx, ny)
        cell = max((rect["re"][1] - rect["re"][0]) / max(nx, 2),
                   (rect["im"][1] - rect["im"][0]) / max(ny, 2))
    # scan seeds sit within a cell or two of their root; a polish that needs
    # to travel much farther is chasing a duplicate or a spurious dip
    leash = 50.0 * cell
    roots: list[Root] = []
    dropped = 0
    deflation_energies: list[complex] = []
    df = Deflated(f, deflation_energies)
    for seed in seeds:
        try:
            root = polish(df, seed, opts, leash=leash)
            # residual of the *undeflated* function, re-evaluated independently
            res = abs(f(root.energy))
        except (NoConvergence, *EVAL_ERRORS):
            dropped += 1
            continue
        if res > opts.tol_residual:
            try:
                root = polish(f, root.energy, opts)
                res = root.residual
            except (NoConvergence, *EVAL_ERRORS):
                dropped += 1
                continue
        root = Root(root.energy, float(res), root.classification, root.physical,
                    root.iterations)
        if not _inside(root.energy, rect, hermitian):
            continue
        if any(abs(root.energy - r.energy) < opts.dedupe_radius for r in roots):
            continue
        roots.append(root)
        deflation_energies.append(root.energy)
    if dropped:
        log.debug("find_all_roots: dropped %d seeds", dropped)
    roots = _dedupe(roots, opts.dedupe_radius)
    if not keep_unphysical:
        roots = [r for r in roots if r.physical]
    return sorted(roots, key=lambda r: (r.energy.real, r.energy.imag))


def _inside(E: complex, rect: dict, hermitian: bool) -> bool:
    re_lo, re_hi = rect["re"]
    margin = 0.02 * (re_hi - re_lo)
    if not (re_lo - margin <= E.real <= re_hi + margin):
        return False
    if hermitian:
        return True
    im_lo, im_hi = rect["im"]
    margin_im = 0.02 * max(im_hi - im_lo, 1e-6)
    return im_lo - margin_im <= E.imag <= im_hi + margin_im


def pair_near(f, center: complex, opts: RootOptions = RootOptions(),
              spread: complex = 1e-3) -> tuple[complex, complex]:
    """The two zeros of f nearest `center`: polish, then deflate and repeat.

    `spread` sets the two polish seeds center +- spread and may be complex;
    PT-symmetric residuals are real-valued on the real energy axis, so a
    purely real seed can never reach a complex-conjugate pair.
    """
    r1 = polish(f, center + spread, opts)
    seed2 = center - spread if abs(center - spread - r1.energy) > opts.dedupe_radius \
        else center + 2 * spread
    r2 = polish(Deflated(f, [r1.energy]), seed2, opts)
    return r1.energy, r2.energy


def track_pair(f, s1: complex, s2: complex,
               opts: RootOptions = RootOptions()) -> tuple[complex, complex]:
    """Continue a root pair to new seeds, scanning locally when polish fails.

    The fast path polishes each member from its previous location (real
    seeds nudged off-axis with opposite signs, since PT residuals are real
    on the real energy axis and cannot reach complex pairs from it). If
    that fails or collapses onto one root, the two roots nearest the stale
    pair are relocated with a local grid scan.
    """
    if s1.imag == 0.0:
        s1 = s1 + 1j * 1e-6 * (1.0 + abs(s1))
    if s2.imag == 0.0:
        s2 = s2 - 1j * 1e-6 * (1.0 + abs(s2))
    from dataclasses import replace as _opts_replace

    fast = _opts_replace(opts, max_iter=min(opts.max_iter, 40))
    try:
        r1 = polish(f, s1, fast)
        s2_eff = s2 if abs(s2 - r1.energy) > opts.dedupe_radius else \
            s2 + 4 * opts.dedupe_radius * (1j if s2.imag >= 0 else -1j)
        r2 = polish(Deflated(f, [r1.energy]), s2_eff, fast)
        if abs(r2.energy - r1.energy) > opts.dedupe_radius:
            return r1.energy, r2.energy
    except (NoConvergence, *EVAL_ERRORS):
        pass
    # fallback: local scan around the stale pair, lock-step polish
    center = 0.5 * (s1 + s2)
    half = max(3.0 * abs(s1 - s2), 0.35 * (1.0 + abs(center)))
    rect = {"re": (center.real - half, center.real + half),
            "im": (center.imag - half, center.imag + half)}
    seeds = scan_complex(f, rect, 48, 24)
    from dataclasses import replace as _replace

    fast_opts = _replace(opts, max_iter=40)
    polished = _polish_lockstep(f, seeds, fast_opts, retry_scalar=False) \
        if hasattr(f, "batch") else polish_many(f, seeds, fast_opts)
    roots = []
    for r in polished:
        if r is None:
            continue
        if not any(abs(r.energy - k) < opts.dedupe_radius for k in roots):
            roots.append(r.energy)
    if len(roots) < 2:
        raise NoConvergence(
            f"could not relocate the root pair near {center:.6g} (found {len(roots)})"
        )
    roots = sorted(roots, key=lambda e: min(abs(e - s1), abs(e - s2)))
    e1, e2 = roots[0], roots[1]
    if abs(e1 - s2) + abs(e2 - s1) < abs(e1 - s1) + abs(e2 - s2):
        e1, e2 = e2, e1
    return e1, e2


def _ep_system(family, E: complex, lam: float, h_rel: float = 1e-6):
    """F, F_E, F_EE, F_lam and F_E,lam at (E, lam) by central differences."""
    hE = h_rel * max(1.0, abs(E))
    hL = h_rel * max(1.0, abs(lam))
    probes = np.array([E, E + hE, E - hE], dtype=complex)

    def trio(f):
        if hasattr(f, "batch"):
            v = f.batch(probes)
            return complex(v[0]), complex(v[1]), complex(v[2])
        return complex(f(E)), complex(f(E + hE)), complex(f(E - hE))

    f0, fp, fm = trio(family(lam))
    g0, gp, gm = trio(family(lam + hL))
    e0, ep, em = trio(family(lam - hL))
    dFdE = (fp - fm) / (2 * hE)
    d2FdE2 = (fp - 2 * f0 + fm) / (hE * hE)
    dFdL = (g0 - e0) / (2 * hL)
    dFE_dL = ((gp - gm) / (2 * hE) - (ep - em) / (2 * hE)) / (2 * hL)
    return f0, dFdE, d2FdE2, dFdL, dFE_dL


def _refine_ep(family, seed_E: complex, seed_lam: float,
               max_iter: int = 60, tol: float = 1e-12):
    """2D Newton on {F = 0, dF/dE = 0} in (E complex, lam real).

    The Newton correction for lam is computed in the complex plane and
    projected onto the real axis; PT-symmetric exceptional points live at
    real parameter values, so the projection vanishes at convergence.
    Returns (E*, lam*, |F|, |F_E|).
    """
    from .errors import ConfigError

    E = complex(seed_E)
    lam = float(seed_lam)
    best = None
    for _ in range(max_iter):
        try:
            f0, fE, fEE, fL, fEL = _ep_system(family, E, lam)
        except (ConfigError, *EVAL_ERRORS):
            break
        res = max(abs(f0), abs(fE))
        if best is None or res < best[0]:
            best = (res, E, lam, abs(f0), abs(fE))
        det = fE * fEL - fL * fEE
        if det == 0 or not np.isfinite(abs(det)):
            break
        dE = -(f0 * fEL - fL * fE) / det
        dLam = -(fE * fE - f0 * fEE) / det
        # local refiner: keep both corrections within a trust region
        cap_e = 0.5 * (1.0 + abs(E))
        if abs(dE) > cap_e:
            dE *= cap_e / abs(dE)
        cap_l = 0.25 * (1.0 + abs(lam))
        if abs(dLam) > cap_l:
            dLam *= cap_l / abs(dLam)
        E += dE
        lam += dLam.real
        if max(abs(dE), abs(dLam)) < tol * max(1.0, abs(E), abs(lam)):
            try:
                f0, fE, *_ = _ep_system(family, E, lam)
            except (ConfigError, *EVAL_ERRORS):
                break
            res = max(abs(f0), abs(fE))
            if res < best[0]:
                best = (res, E, lam, abs(f0), abs(fE))
            break
    if best is None:
        raise NoConvergence("EP refinement failed to start")
    _, E, lam, rF, rdF = best
    if max(rF, rdF) > 1e-9:
        raise NoConvergence(
            f"EP residuals |F|={rF:.2e}, |F_E|={rdF:.2e} exceed 1e-9"
        )
    return E, lam, rF, rdF


def _splitting_exponent(family, E_star: complex, lam_star: float,
                        opts: RootOptions) -> float:
    """Fit |E+ - E-| ~ |lam - lam*|^beta over lam* +- [1e-4, 1e-3]."""
    deltas = np.geomspace(1e-4, 1e-3, 5)
    logs_d, logs_s = [], []
    # local quadratic model gives the seed spread: F ~ FEE/2 (E-E*)^2 + FL dlam
    _, _, fEE, fL, _ = _ep_system(family, E_star, lam_star)
    for side in (+1.0, -1.0):
        for d in deltas:
            lam = lam_star + side * d
            try:
                # local quadratic model: the complex phase of the predicted
                # spread matters (real seeds cannot reach complex pairs)
                guess = complex(np.sqrt(complex(-2 * fL * side * d / fEE)))
                if abs(guess) < 1e-8:
                    guess = 1e-8
                e1, e2 = pair_near(family(lam), E_star + 0.0j, opts, spread=guess)
            except (NoConvergence, *EVAL_ERRORS):
                continue
            s = abs(e1 - e2)
            if s > 0:
                logs_d.append(np.log(d))
                logs_s.append(np.log(s))
    if len(logs_d) < 4:
        raise NoConvergence("too few valid points for the splitting fit")
    slope, _ = np.polyfit(logs_d, logs_s, 1)
    return float(slope)


def find_ep(family: Callable[[float], CharFn], seed_E: complex, seed_lam: float,
            opts: RootOptions = RootOptions(),
            probe_window: Optional[float] = None,
            require_transition: bool = True) -> EPResult:
    """Locate an exceptional point of a parameterized characteristic function.

    `family` maps a real parameter lam to a CharFn. The seeds should come
    from a sweep bracketing the real-to-complex transition; a short probe
    around seed_lam verifies the transition exists (raising BadBracket
    otherwise, e.g. for Hermitian merging), after which the 2D Newton
    iteration refines (E*, lam*) and the square-root splitting exponent is
    measured on both sides of lam*.
    """
    if require_transition:
        w = probe_window if probe_window is not None else max(0.05 * abs(seed_lam), 0.05)
        statuses = []
        for lam in (seed_lam - w, seed_lam + w):
            try:
                e1, e2 = pair_near(family(lam), complex(seed_E), opts,
                                   spread=max(1e-3, 0.02 * w))
                statuses.append(bool(
                    abs(e1.imag) > opts.real_axis_tol or abs(e2.imag) > opts.real_axis_tol
                ))
            except (NoConvergence, *EVAL_ERRORS):
                statuses.append(None)
        if statuses[0] is True or statuses[1] is not True:
            raise BadBracket(
                f"no real-to-complex transition near lam={seed_lam} "
                f"(probe statuses {statuses})"
            )
    E_star, lam_star, rF, rdF = _refine_ep(family, seed_E, seed_lam)
    beta = _splitting_exponent(family, E_star, lam_star, opts)
    return EPResult(
        param_star=float(lam_star),
        energy_star=_snap(E_star, opts.real_axis_tol),
        residual_F=float(rF),
        residual_dF=float(rdF),
        splitting_exponent=beta,
    )


def bisect_transition(family: Callable[[float], CharFn], lam_lo: float,
                      lam_hi: float, seed_E: complex = None,
                      seed_pair: Optional[tuple] = None,
                      opts: RootOptions = RootOptions(),
                      tol: float = 1e-8, max_iter: int = 80) -> float:
    """Bisection on the real-to-complex transition of a branch pair.

    Independent cross-check for `find_ep`: no derivative information is
    used, only the classification of the polished pair at each midpoint.
    The pair is continued from `seed_pair` (two energies at lam_lo) when
    given, otherwise located near `seed_E`; each bisection step re-polishes
    both members from their previous locations.
    """
    def pair_at(lam: float, s1: complex, s2: complex):
        e1, e2 = track_pair(family(lam), s1, s2, opts)
        cplx = bool(abs(e1.imag) > opts.real_axis_tol
                    or abs(e2.imag) > opts.real_axis_tol)
        return cplx, e1, e2

    if seed_pair is not None:
        s1, s2 = complex(seed_pair[0]), complex(seed_pair[1])
    else:
        s1, s2 = pair_near(family(lam_lo), complex(seed_E), opts,
                           spread=max(1e-4, 1e-3 * abs(seed_E)))
    lo_c, s1, s2 = pair_at(lam_lo, s1, s2)
    hi_c, _, _ = pair_at(lam_hi, s1, s2)
    if lo_c or not hi_c:
        raise BadBracket(
            f"pair is {'complex' if lo_c else 'real'} at lam={lam_lo} and "
            f"{'complex' if hi_c else 'real'} at lam={lam_hi}"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lam_lo + lam_hi)
        cplx, e1, e2 = pair_at(mid, s1, s2)
        if cplx:
            lam_hi = mid
        else:
            lam_lo = mid
            s1, s2 = e1, e2
        if lam_hi - lam_lo < tol:
            break
    return 0.5 * (lam_lo + lam_hi)
