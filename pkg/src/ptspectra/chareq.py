"""Characteristic functions F(E) whose zeros are bound-state eigenvalues.

Piecewise-constant / delta potentials admit closed-form matching conditions:

* double delta wells: (2p - V1)(2p - V2) = V1 V2 exp(-2 p a), p = sqrt(-E);
* delta wells between rigid walls: a 2x2 matching condition, implemented
  multiplied by sinh^2(p d) so the root finder never meets coth poles;
* square double well: the (2,2) entry of the chained transfer-matrix product
  across the four interfaces.

All evaluators accept scalar or ndarray energies. Where the raw matching
expressions grow like exp(+2 p a), the returned residual carries an extra
nonvanishing analytic prefactor (a pure exponential) so that its magnitude
stays O(1) near roots; zero sets are unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateEnergy
from .potentials import (
    DeltaInBox,
    DoubleDelta,
    HermitianCounterpart,
    PotentialSpec,
    SquareDoubleWell,
    base_family,
    delta_terms,
    is_real_potential,
    wall_halfwidth,
)

DEGENERATE_TOL = 1e-12
PHYSICAL_RE_P_TOL = 1e-8


def _branch_sqrt(z):
    """Principal square root with the branch cut pinned for real arguments.

    Forces Im z = +0.0 when z is real so that values on the cut are taken
    from above (deterministic tie-break).
    """
    z = np.asarray(z, dtype=complex)
    z = np.where(z.imag == 0.0, z.real + 0j, z)
    return np.sqrt(z)


def momentum_p(E):
    """Evanescent wavenumber p = sqrt(-E), principal branch.

    Re p >= 0 always; for Re p = 0 (real E > 0) the tie-break picks Im p >= 0.
    Satisfies p**2 = -E exactly up to rounding.
    """
    E = np.asarray(E, dtype=complex)
    p = _branch_sqrt(-E.real - 1j * E.imag)
    return complex(p[()]) if p.ndim == 0 else p


def wavenumbers(E, u: float, g: float):
    """Wavenumbers (q, r) inside wells of depth u+ig and u-ig.

    q**2 = E + u + ig and r**2 = E + u - ig; for g = 0 and real E, r = q.
    """
    E = np.asarray(E, dtype=complex)
    q = _branch_sqrt(E + u + 1j * g)
    r = _branch_sqrt(E + u - 1j * g)
    if q.ndim == 0:
        return complex(q[()]), complex(r[()])
    return q, r


def _check_not_degenerate(E, points):
    E = np.asarray(E, dtype=complex)
    for pt in points:
        if np.any(np.abs(E - pt) < DEGENERATE_TOL):
            raise DegenerateEnergy(f"energy within {DEGENERATE_TOL} of branch point {pt}")


def _two_delta_strengths(spec):
    terms = delta_terms(spec)
    if len(terms) != 2:
        raise TypeError(f"expected a two-delta potential, got {spec!r}")
    return complex(terms[0].strength), complex(terms[1].strength)


def char_dddp(spec, E, form: str = "rederived"):
    """Residual of the double-delta bound-state condition at energy E.

    `rederived` (default) evaluates (2p - V1)(2p - V2) - V1 V2 exp(-2pa),
    obtained by delta matching with the jump convention of `potentials`.
    `as_printed` evaluates 4p^2 - 2pu - (u^2+g^2)(exp(-2pa) - 1), a variant
    with 2pu in place of 4pu that has no real zeros in the Hermitian
    single-well limit; it is kept for comparison only.
    """
    base = base_family(spec)
    if not isinstance(base, DoubleDelta):
        raise TypeError("char_dddp requires a DoubleDelta (or its counterpart)")
    _check_not_degenerate(E, (0.0,))
    p = momentum_p(E)
    a = base.a
    s1, s2 = _two_delta_strengths(spec)
    if form == "rederived":
        val = (2.0 * p - s1) * (2.0 * p - s2) - s1 * s2 * np.exp(-2.0 * p * a)
        # the matching product has a spurious simple zero at the p = 0
        # branch point (binding threshold), which is not an eigenvalue;
        # dividing it out keeps root searches off that attractor
        return val / p
    if form == "as_printed":
        if isinstance(spec, HermitianCounterpart):
            raise ValueError("as_printed form is defined for the u,g parameterization only")
        u, g = base.u, base.g
        return 4.0 * p * p - 2.0 * p * u - (u * u + g * g) * (np.exp(-2.0 * p * a) - 1.0)
    raise ValueError(f"unknown form {form!r}")


def char_delta_box(spec, E):
    """Residual for delta wells between rigid walls, pole-free form.

    The matching condition is cleared of coth poles by multiplying through
    by sinh^2(pd), then scaled by the nonvanishing exp(-2pa) so magnitudes
    stay O(1):

        exp(-2pa) * ( exp(2pb) [V1 sh - p e^{pd}] [V2 sh - p e^{pd}]
                     - exp(-2pb) [V1 sh - p e^{-pd}] [V2 sh - p e^{-pd}] )

    with sh = sinh(pd), d = a - b. Analytic except at E = 0, where the
    cleared form has an artificial (unphysical) zero at the branch point.
    """
    base = base_family(spec)
    if not isinstance(base, DeltaInBox):
        raise TypeError("char_delta_box requires a DeltaInBox (or its counterpart)")
    _check_not_degenerate(E, (0.0,))
    p = momentum_p(E)
    a, b = base.a, base.b
    d = a - b
    s1, s2 = _two_delta_strengths(spec)
    # exp(pd) factored out of each bracket: with m = sinh(pd) e^{-pd} all
    # remaining exponents have non-positive real part (Re p >= 0), so the
    # evaluation cannot overflow anywhere in the half-plane. The division by
    # p^3 removes the artificial triple zero the sinh^2 clearing leaves at
    # the p = 0 branch point, which would otherwise capture root searches
    # near the binding threshold (it is not an eigenvalue).
    e2d = np.exp(-2.0 * p * d)
    m = 0.5 * (1.0 - e2d)
    t_out = (s1 * m - p) * (s2 * m - p)
    t_in = (s1 * m - p * e2d) * (s2 * m - p * e2d)
    return (t_out - np.exp(-4.0 * p * b) * t_in) / (p * p * p)


def char_delta_box_det(spec, E):
    """Determinant of the 4x4 homogeneous matching system for `DeltaInBox`.

    Built directly from value continuity and the derivative-jump convention
    at each delta (independent of the reduced 2x2 form); zeros coincide with
    those of `char_delta_box`. Scaled by exp(-2pa).
    """
    base = base_family(spec)
    if not isinstance(base, DeltaInBox):
        raise TypeError("char_delta_box_det requires a DeltaInBox (or its counterpart)")
    _check_not_degenerate(E, (0.0,))
    scalar = np.isscalar(E) or np.ndim(E) == 0
    E = np.atleast_1d(np.asarray(E, dtype=complex))
    p = momentum_p(E)
    a, b = base.a, base.b
    d = a - b
    s1, s2 = _two_delta_strengths(spec)
    # unknowns (A, B, C, D) for A sinh p(x+a) | B e^{px} + C e^{-px} | D sinh p(x-a),
    # rows: value continuity and derivative jump at each delta. Columns are
    # pre-scaled by e^{-pd} (A, D) and e^{-pb} (B, C), which multiplies the
    # determinant by the nonvanishing e^{-2pa} and keeps all entries bounded.
    sh = 0.5 * (1.0 - np.exp(-2.0 * p * d))   # sinh(pd) e^{-pd}
    ch = 0.5 * (1.0 + np.exp(-2.0 * p * d))   # cosh(pd) e^{-pd}
    e2b = np.exp(-2.0 * p * b)
    one = np.ones_like(p)
    zero = np.zeros_like(p)
    rows = [
        [sh, -e2b, -one, zero],                                   # value at -b
        [-p * ch, (s1 + p) * e2b, (s1 - p) * one, zero],          # jump at -b
        [zero, one, e2b, sh],                                     # value at +b
        [zero, (s2 - p) * one, (s2 + p) * e2b, p * ch],           # jump at +b
    ]
    m = np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)
    det = np.linalg.det(m) / (p * p * p)  # same artificial p^3 zero as the cleared form
    return complex(det[0]) if scalar else det


@dataclass
class TransferChain:
    """The eight interface matrices of the square double well and their product.

    product = m1^-1 m2 m3^-1 m4 m5^-1 m6 m7^-1 m8; the bound-state condition
    is product[1, 1] = 0 (entry m22).
    """

    matrices: tuple
    product: np.ndarray

    @property
    def m11(self):
        return self.product[0, 0]

    @property
    def m12(self):
        return self.product[0, 1]

    @property
    def m21(self):
        return self.product[1, 0]

    @property
    def m22(self):
        return self.product[1, 1]


def _square_dw_params(spec):
    base = base_family(spec)
    if not isinstance(base, SquareDoubleWell):
        raise TypeError("expected a SquareDoubleWell (or its counterpart)")
    if isinstance(spec, HermitianCounterpart):
        d1 = complex(base.u - spec.sign * base.g)
        d2 = complex(base.u + spec.sign * base.g)
    else:
        d1 = complex(base.u + 1j * base.g)
        d2 = complex(base.u - 1j * base.g)
    return base.b, base.w, d1, d2


def transfer_matrices(spec, E: complex) -> TransferChain:
    """Interface matrices M1..M8 at energy E and their chained product.

    Row 1 of each matrix expresses value continuity, row 2 derivative
    continuity, at the interfaces x = -a, -b, b, a. Raises DegenerateEnergy
    when p, q or r vanishes (E at a branch point).
    """
    b, w, d1, d2 = _square_dw_params(spec)
    _check_not_degenerate(E, (0.0, -d1, -d2))
    a = b + w
    E = complex(E)
    p = momentum_p(E)
    q = complex(_branch_sqrt(E + d1)[()])
    r = complex(_branch_sqrt(E + d2)[()])

    def m(k, x):
        return np.array(
            [[np.exp(k * x), np.exp(-k * x)], [k * np.exp(k * x), -k * np.exp(-k * x)]],
            dtype=complex,
        )

    mats = (
        m(p, -a), m(1j * q, -a),
        m(1j * q, -b), m(p, -b),
        m(p, b), m(1j * r, b),
        m(1j * r, a), m(p, a),
    )
    prod = np.eye(2, dtype=complex)
    for i in range(0, 8, 2):
        prod = prod @ np.linalg.solve(mats[i], mats[i + 1])
    return TransferChain(matrices=mats, product=prod)


def _mul2(a, b):
    """Product of 2x2 matrices held as (m11, m12, m21, m22) ndarray tuples."""
    a11, a12, a21, a22 = a
    b11, b12, b21, b22 = b
    return (
        a11 * b11 + a12 * b21,
        a11 * b12 + a12 * b22,
        a21 * b11 + a22 * b21,
        a21 * b12 + a22 * b22,
    )


def char_square_dw(spec, E):
    """Normalized m22 of the square double well transfer product.

    Evaluates the chain in factored form with the exponential growth removed
    analytically; the returned value equals m22 * exp(2 p w) relative to the
    verbatim product of `transfer_matrices`. The prefactor is nonvanishing
    and analytic, so zeros match exactly while the magnitude stays O(1)
    across deep-well parameters (no catastrophic cancellation).
    """
    b, w, d1, d2 = _square_dw_params(spec)
    _check_not_degenerate(E, (0.0, -d1, -d2))
    scalar = np.isscalar(E) or np.ndim(E) == 0
    E = np.atleast_1d(np.asarray(E, dtype=complex))
    p = momentum_p(E)
    q = 1j * _branch_sqrt(E + d1)
    r = 1j * _branch_sqrt(E + d2)

    def g2(k, kp):
        # R(k)^-1 R(kp) = [[k+kp, k-kp], [k-kp, k+kp]] / (2k)
        return ((k + kp) / (2 * k), (k - kp) / (2 * k),
                (k - kp) / (2 * k), (k + kp) / (2 * k))

    def diag(lo, hi):
        zero = np.zeros_like(lo)
        return (lo, zero, zero, hi)

    x = _mul2(_mul2(g2(p, q), diag(np.exp(-q * w), np.exp(q * w))), g2(q, p))
    y = _mul2(_mul2(g2(p, r), diag(np.exp(-r * w), np.exp(r * w))), g2(r, p))
    # [X diag(e^{-2pb}, e^{2pb}) Y]_22 * e^{-2pb}
    val = x[2] * y[1] * np.exp(-4.0 * p * b) + x[3] * y[3]
    return complex(val[0]) if scalar else val


def is_physical(spec: PotentialSpec, E) -> bool:
    """Whether a zero of the characteristic function is a bound state.

    On the whole line the wavefunction must decay, which requires
    Re sqrt(-E) > 0; between rigid walls every zero is an eigenstate except
    the artificial one at the p = 0 branch point (E = 0).
    """
    E = complex(E)
    if wall_halfwidth(spec) is not None:
        return abs(E) > PHYSICAL_RE_P_TOL
    return momentum_p(E).real > PHYSICAL_RE_P_TOL


class CharFn:
    """A characteristic function: maps complex E to a complex residual.

    Carries the potential spec (for physicality filtering and conjugation
    mirroring) and whether the problem is Hermitian, in which case the
    residual restricted to the real axis stays on a line through the origin
    and real-axis scanning applies.
    """

    def __init__(self, fn: Callable, spec: PotentialSpec, label: str,
                 hermitian: bool):
        self._fn = fn
        self.spec = spec
        self.label = label
        self.hermitian = hermitian

    def __call__(self, E) -> complex:
        return complex(self._fn(np.atleast_1d(np.asarray(E, dtype=complex)))[0])

    def batch(self, E) -> np.ndarray:
        return np.asarray(self._fn(np.asarray(E, dtype=complex)))

    def physical(self, E) -> bool:
        return is_physical(self.spec, E)

    def __repr__(self):
        return f"CharFn({self.label})"


def build_charfn(spec: PotentialSpec, form: str = "rederived") -> CharFn:
    """Characteristic function for a piecewise (delta / square-well) spec.

    Smooth families are handled by the shooting solver, which exposes its
    Wronskian mismatch through the same CharFn interface.
    """
    base = base_family(spec)
    hermitian = is_real_potential(spec)
    if isinstance(base, DoubleDelta):
        return CharFn(lambda E: char_dddp(spec, E, form=form), spec,
                      f"dddp[{form}]", hermitian)
    if isinstance(base, DeltaInBox):
        return CharFn(lambda E: char_delta_box(spec, E), spec,
                      "delta_box", hermitian)
    if isinstance(base, SquareDoubleWell):
        return CharFn(lambda E: char_square_dw(spec, E), spec,
                      "square_dw", hermitian)
    raise TypeError(
        f"no closed-form characteristic function for {spec!r}; "
        "use shooting.build_charfn_shooting"
    )
