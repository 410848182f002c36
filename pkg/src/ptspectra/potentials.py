"""Potential families: parameters, pointwise evaluation, delta components.

Units are fixed to 2*mu = hbar = 1 throughout, so the stationary equation
reads -psi'' + V(x) psi = E psi and the evanescent wavenumber is sqrt(-E).

Every family satisfies PT symmetry, V(-x) = conj(V(x)). Delta wells are not
representable pointwise; their positions and (complex) strengths are reported
separately by `delta_terms`, with the convention that a term of strength sat
position x0 contributes -s * delta(x - x0) to the potential, i.e. the
derivative jump is psi'(x0+) - psi'(x0-) = -s * psi(x0).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .errors import ConfigError

HBAR = 1.0
TWO_MU = 1.0


@dataclass(frozen=True)
class DeltaTerm:
    position: float
    strength: complex


@dataclass(frozen=True)
class DoubleDelta:
    """Two attractive delta wells of strengths u+ig and u-ig at x = -a/2, +a/2."""

    u: float
    g: float
    a: float

    def __post_init__(self):
        if self.u < 0:
            raise ConfigError("double_delta: strength u must be >= 0")
        if self.a <= 0:
            raise ConfigError("double_delta: separation a must be > 0")


@dataclass(frozen=True)
class DeltaInBox:
    """Delta wells at x = -b, +b between rigid walls at x = -a, +a."""

    u: float
    g: float
    a: float
    b: float

    def __post_init__(self):
        if self.u < 0:
            raise ConfigError("delta_in_box: strength u must be >= 0")
        if not 0 < self.b < self.a:
            raise ConfigError("delta_in_box: requires 0 < b < a")


@dataclass(frozen=True)
class SquareDoubleWell:
    """Square wells of depth u+ig on (-b-w, -b) and u-ig on (b, b+w).

    b is the barrier half-width, w the width of each well; the outer edge
    sits at a = b + w.
    """

    u: float
    g: float
    b: float
    w: float

    def __post_init__(self):
        if self.u <= 0:
            raise ConfigError("square_double_well: depth u must be > 0")
        if self.b < 0:
            raise ConfigError("square_double_well: barrier half-width b must be >= 0")
        if self.w <= 0:
            raise ConfigError("square_double_well: well width w must be > 0")

    @property
    def a(self) -> float:
        return self.b + self.w


@dataclass(frozen=True)
class LinearBox:
    """V = i g x between rigid walls at x = -1, +1."""

    g: float
    wall: float = 1.0

    def __post_init__(self):
        if self.wall != 1.0:
            raise ConfigError("linear_box: walls are fixed at +-1")


@dataclass(frozen=True)
class QuadraticPT:
    """V = x^2/4 + i g x |x|."""

    g: float


@dataclass(frozen=True)
class LinearPT:
    """V = |x| + i g x."""

    g: float


@dataclass(frozen=True)
class ScarfII:
    """V = -v1 sech^2(x) + i v2 sech(x) tanh(x)."""

    v1: float
    v2: float

    def __post_init__(self):
        if self.v1 <= 0:
            raise ConfigError("scarf_ii: well depth v1 must be > 0")
        if self.v2 < 0:
            raise ConfigError("scarf_ii: v2 must be >= 0")


@dataclass(frozen=True)
class HermitianCounterpart:
    """Real potential obtained by replacing the imaginary coupling g with +-ig.

    Pointwise this is Re V(x) - sign * Im V(x), which is real for every base
    family; equivalently it maps a strength u + ig to u - sign*g.
    """

    of: "PotentialSpec"
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ConfigError("hermitian_counterpart: sign must be +1 or -1")
        if isinstance(self.of, HermitianCounterpart):
            raise ConfigError("hermitian_counterpart: cannot nest counterparts")


PotentialSpec = Union[
    DoubleDelta,
    DeltaInBox,
    SquareDoubleWell,
    LinearBox,
    QuadraticPT,
    LinearPT,
    ScarfII,
    HermitianCounterpart,
]

SMOOTH_FAMILIES = (LinearBox, QuadraticPT, LinearPT, ScarfII)


def evaluate_potential(spec: PotentialSpec, x):
    """Pointwise value of the non-delta part of the potential.

    Accepts a scalar or an ndarray of positions and returns complex values.
    Delta spikes are excluded; see `delta_terms`.
    """
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=float)
    if isinstance(spec, (DoubleDelta, DeltaInBox)):
        v = np.zeros_like(x, dtype=complex)
    elif isinstance(spec, SquareDoubleWell):
        a = spec.a
        v1 = spec.u + 1j * spec.g
        v2 = spec.u - 1j * spec.g
        v = np.zeros_like(x, dtype=complex)
        v = np.where((x >= -a) & (x < -spec.b), -v1, v)
        v = np.where((x > spec.b) & (x <= a), -v2, v)
    elif isinstance(spec, LinearBox):
        v = 1j * spec.g * x + 0j
    elif isinstance(spec, QuadraticPT):
        v = x * x / 4.0 + 1j * spec.g * x * np.abs(x)
    elif isinstance(spec, LinearPT):
        v = np.abs(x) + 1j * spec.g * x
    elif isinstance(spec, ScarfII):
        sech = 1.0 / np.cosh(x)
        v = -spec.v1 * sech * sech + 1j * spec.v2 * sech * np.tanh(x)
    elif isinstance(spec, HermitianCounterpart):
        base = evaluate_potential(spec.of, x)
        v = (base.real - spec.sign * base.imag) + 0j
    else:
        raise TypeError(f"unknown potential spec {spec!r}")
    return complex(v[()]) if scalar else v


def delta_terms(spec: PotentialSpec) -> list[DeltaTerm]:
    """Delta components of the potential (empty for smooth families)."""
    if isinstance(spec, DoubleDelta):
        return [
            DeltaTerm(-spec.a / 2.0, spec.u + 1j * spec.g),
            DeltaTerm(+spec.a / 2.0, spec.u - 1j * spec.g),
        ]
    if isinstance(spec, DeltaInBox):
        return [
            DeltaTerm(-spec.b, spec.u + 1j * spec.g),
            DeltaTerm(+spec.b, spec.u - 1j * spec.g),
        ]
    if isinstance(spec, HermitianCounterpart):
        out = []
        for t in delta_terms(spec.of):
            s = complex(t.strength)
            out.append(DeltaTerm(t.position, complex(s.real - spec.sign * s.imag)))
        return out
    return []


def base_family(spec: PotentialSpec) -> PotentialSpec:
    """The underlying family, unwrapping a Hermitian counterpart."""
    return spec.of if isinstance(spec, HermitianCounterpart) else spec


def wall_halfwidth(spec: PotentialSpec):
    """Rigid-wall half-width, or None for potentials on the whole line."""
    base = base_family(spec)
    if isinstance(base, DeltaInBox):
        return base.a
    if isinstance(base, LinearBox):
        return base.wall
    return None


def is_real_potential(spec: PotentialSpec) -> bool:
    """True when Im V vanishes identically (Hermitian problem)."""
    if isinstance(spec, HermitianCounterpart):
        return True
    if isinstance(spec, ScarfII):
        return spec.v2 == 0.0
    return getattr(spec, "g", 0.0) == 0.0


def with_param(spec: PotentialSpec, name: str, value: float) -> PotentialSpec:
    """Copy of `spec` with one numeric parameter replaced (sweep support)."""
    if isinstance(spec, HermitianCounterpart):
        return replace(spec, of=with_param(spec.of, name, value))
    if not hasattr(spec, name):
        raise ConfigError(f"{family_name(spec)} has no parameter {name!r}")
    return replace(spec, **{name: value})


_FAMILY_NAMES = {
    DoubleDelta: "double_delta",
    DeltaInBox: "delta_in_box",
    SquareDoubleWell: "square_double_well",
    LinearBox: "linear_box",
    QuadraticPT: "quadratic_pt",
    LinearPT: "linear_pt",
    ScarfII: "scarf_ii",
    HermitianCounterpart: "hermitian_counterpart",
}

_FAMILY_FIELDS = {
    "double_delta": (DoubleDelta, ("u", "g", "a")),
    "delta_in_box": (DeltaInBox, ("u", "g", "a", "b")),
    "square_double_well": (SquareDoubleWell, ("u", "g", "b", "w")),
    "linear_box": (LinearBox, ("g",)),
    "quadratic_pt": (QuadraticPT, ("g",)),
    "linear_pt": (LinearPT, ("g",)),
    "scarf_ii": (ScarfII, ("v1", "v2")),
}


def family_name(spec: PotentialSpec) -> str:
    return _FAMILY_NAMES[type(spec)]


def spec_to_json(spec: PotentialSpec) -> dict:
    """JSON-serializable description, invertible by `spec_from_json`."""
    if isinstance(spec, HermitianCounterpart):
        return {
            "family": "hermitian_counterpart",
            "of": spec_to_json(spec.of),
            "sign": spec.sign,
        }
    name = family_name(spec)
    _, fields_ = _FAMILY_FIELDS[name]
    out = {"family": name}
    for f in fields_:
        out[f] = float(getattr(spec, f))
    return out


def spec_from_json(obj) -> PotentialSpec:
    """Parse a potential description; unknown families or fields are rejected."""
    if not isinstance(obj, dict):
        raise ConfigError("potential spec must be a JSON object")
    family = obj.get("family")
    if family == "hermitian_counterpart":
        allowed = {"family", "of", "sign"}
        extra = set(obj) - allowed
        if extra:
            raise ConfigError(f"unknown fields for hermitian_counterpart: {sorted(extra)}")
        if "of" not in obj:
            raise ConfigError("hermitian_counterpart requires an 'of' spec")
        return HermitianCounterpart(
            of=spec_from_json(obj["of"]), sign=int(obj.get("sign", 1))
        )
    if family not in _FAMILY_FIELDS:
        raise ConfigError(f"unknown potential family {family!r}")
    cls, fields_ = _FAMILY_FIELDS[family]
    extra = set(obj) - set(fields_) - {"family"}
    if extra:
        raise ConfigError(f"unknown fields for {family}: {sorted(extra)}")
    missing = set(fields_) - set(obj)
    if missing:
        raise ConfigError(f"missing fields for {family}: {sorted(missing)}")
    kwargs = {}
    for f in fields_:
        val = obj[f]
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ConfigError(f"{family}.{f} must be a number")
        kwargs[f] = float(val)
    return cls(**kwargs)
