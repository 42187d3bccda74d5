"""Permittivity profiles for the periodic cell and the defect layer.

Lengths are in units of the crystal period, which is fixed to 1.  Profiles
are piecewise constant; a smooth permittivity has to be sliced beforehand
(see :func:`slice_profile`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .errors import (
    NonPositiveThickness,
    NonUnitPeriod,
    OutOfDomain,
    ZeroPermittivity,
    ConfigError,
)

PERIOD_TOL = 1e-12


class Polarization(enum.Enum):
    EPar = "E"
    HPar = "H"

    @classmethod
    def parse(cls, value) -> "Polarization":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper()
        for member in cls:
            if key in (member.value, member.name.upper()):
                return member
        raise ConfigError(f"polarization: expected 'E' or 'H', got {value!r}")

    def q(self, eps: float) -> float:
        return 1.0 if self is Polarization.EPar else eps


@dataclass(frozen=True)
class LayerProfile:
    """Ordered list of ``(thickness, epsilon)`` pairs."""

    layers: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "layers", tuple((float(d), float(e)) for d, e in self.layers)
        )

    @property
    def width(self) -> float:
        return math.fsum(d for d, _ in self.layers)

    def reversed(self) -> "LayerProfile":
        return LayerProfile(tuple(reversed(self.layers)))

    def __len__(self):
        return len(self.layers)


@dataclass(frozen=True)
class DefectSpec:
    width: float
    profile: LayerProfile


@dataclass(frozen=True)
class CrystalSpec:
    """Validated unit cell plus defect layer."""

    cell: LayerProfile
    defect: DefectSpec

    def reversed(self) -> "CrystalSpec":
        """Mirror image of the finite structure (cell and defect reversed)."""
        return CrystalSpec(
            self.cell.reversed(),
            DefectSpec(self.defect.width, self.defect.profile.reversed()),
        )


@dataclass(frozen=True)
class FixedAlpha:
    alpha: float

    def __post_init__(self):
        if not (-math.pi < self.alpha <= math.pi):
            raise ConfigError(f"alpha={self.alpha} outside (-pi, pi]")

    def alpha_at(self, k):
        return self.alpha

    def beta0_at(self, k):
        import cmath

        return cmath.sqrt(k * k - self.alpha * self.alpha)


@dataclass(frozen=True)
class FixedTheta:
    theta: float

    def __post_init__(self):
        if not abs(self.theta) < math.pi / 2:
            raise ConfigError(f"theta={self.theta} must satisfy |theta| < pi/2")

    def alpha_at(self, k):
        return k * math.sin(self.theta)

    def beta0_at(self, k):
        return k * math.cos(self.theta)


Incidence = FixedAlpha | FixedTheta


def _check_layers(layers: Iterable[Sequence[float]], what: str) -> LayerProfile:
    checked = []
    for i, item in enumerate(layers):
        try:
            d, eps = item
            d, eps = float(d), float(eps)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{what}[{i}]: expected [thickness, epsilon]") from exc
        if not (d > 0 and math.isfinite(d)):
            raise NonPositiveThickness(f"{what}[{i}].thickness = {d} must be > 0")
        if not math.isfinite(eps):
            raise ConfigError(f"{what}[{i}].epsilon = {eps} must be finite")
        if eps == 0.0:
            raise ZeroPermittivity(f"{what}[{i}].epsilon must be nonzero")
        checked.append((d, eps))
    if not checked:
        raise ConfigError(f"{what}: at least one layer is required")
    return LayerProfile(tuple(checked))


def validate_crystal(cell, defect) -> CrystalSpec:
    """Validate a unit cell and a defect description.

    ``cell`` is a :class:`LayerProfile` or a sequence of ``(thickness, eps)``;
    ``defect`` is a :class:`DefectSpec` or a ``(width, layers)`` pair.
    """
    cell_layers = cell.layers if isinstance(cell, LayerProfile) else cell
    cell_profile = _check_layers(cell_layers, "cell")
    if abs(cell_profile.width - 1.0) > PERIOD_TOL:
        raise NonUnitPeriod(
            f"cell thicknesses sum to {cell_profile.width!r}, expected 1"
        )

    if isinstance(defect, DefectSpec):
        width, dlayers = defect.width, defect.profile.layers
    else:
        width, dlayers = defect
    width = float(width)
    if not width > 0:
        raise NonPositiveThickness(f"defect.width = {width} must be > 0")
    dprofile = _check_layers(dlayers, "defect.layers")
    if abs(dprofile.width - width) > PERIOD_TOL * max(1.0, width):
        raise ConfigError(
            f"defect layers sum to {dprofile.width!r}, expected width {width!r}"
        )
    return CrystalSpec(cell_profile, DefectSpec(width, dprofile))


def epsilon_at(profile: LayerProfile, x: float) -> float:
    """Permittivity at position ``x``; interfaces take the right-hand value."""
    width = profile.width
    if not (0.0 <= x <= width):
        raise OutOfDomain(f"x={x} outside [0, {width}]")
    edge = 0.0
    for d, eps in profile.layers:
        edge += d
        if x < edge:
            return eps
    return profile.layers[-1][1]


def slice_profile(
    eps: Callable[[float], float], width: float = 1.0, slices: int = 64
) -> LayerProfile:
    """Piecewise-constant approximation of a smooth profile by midpoint sampling."""
    if slices < 1:
        raise ConfigError("slices must be >= 1")
    d = width / slices
    return _check_layers(
        [(d, eps((i + 0.5) * d)) for i in range(slices)], "sliced profile"
    )
