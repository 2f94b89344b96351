"""Central potential families shared by the classical and spectral engines.

Each family provides the radial value ``V(r)``, the Euler derivative
``r dV/dr`` and, when it exists, the homogeneity degree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class PotentialSpec:
    """Base class.  Subclasses implement :meth:`value` and :meth:`r_dv`."""

    @property
    def degree(self) -> float | None:
        return None

    def value(self, r):
        raise NotImplementedError

    def r_dv(self, r):
        raise NotImplementedError

    def dv_dr(self, r):
        r = np.asarray(r, dtype=float)
        return self.r_dv(r) / r

    def radial_factor(self, r):
        """``V'(r)/r``, so that the gradient is ``radial_factor(r) * pos``."""
        r = np.asarray(r, dtype=float)
        return self.r_dv(r) / r**2

    def gradient(self, pos):
        """Cartesian gradient for positions of shape (..., dims)."""
        pos = np.asarray(pos, dtype=float)
        r = np.linalg.norm(pos, axis=-1, keepdims=True)
        return self.radial_factor(r) * pos

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLaw(PotentialSpec):
    """``V(r) = strength * r**exponent``."""

    strength: float
    exponent: float

    def __post_init__(self):
        if self.exponent == 0:
            raise PotentialError("exponent 0 is a constant, not a potential family")

    @property
    def degree(self):
        return self.exponent

    def value(self, r):
        return self.strength * np.asarray(r, dtype=float) ** self.exponent

    def r_dv(self, r):
        return self.exponent * self.value(r)

    def radial_factor(self, r):
        return self.strength * self.exponent * np.asarray(r, dtype=float) ** (self.exponent - 2)

    def to_dict(self):
        return {"family": "power_law", "strength": self.strength, "degree": self.exponent}


@dataclass(frozen=True)
class Coulomb(PotentialSpec):
    """``V(r) = strength / r``; attractive for negative strength."""

    strength: float = -1.0

    @property
    def degree(self):
        return -1

    def value(self, r):
        return self.strength / np.asarray(r, dtype=float)

    def r_dv(self, r):
        return -self.value(r)

    def to_dict(self):
        return {"family": "coulomb", "strength": self.strength}


@dataclass(frozen=True)
class Harmonic(PotentialSpec):
    """``V(r) = k r**2 / 2``."""

    k: float = 1.0

    def __post_init__(self):
        if self.k <= 0:
            raise PotentialError("spring constant must be positive")

    @property
    def degree(self):
        return 2

    def value(self, r):
        return 0.5 * self.k * np.asarray(r, dtype=float) ** 2

    def r_dv(self, r):
        return 2.0 * self.value(r)

    def radial_factor(self, r):
        return np.full_like(np.asarray(r, dtype=float), self.k)

    def to_dict(self):
        return {"family": "harmonic", "k": self.k}


@dataclass(frozen=True)
class Free(PotentialSpec):
    """Zero potential."""

    @property
    def degree(self):
        return None

    def value(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def r_dv(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def gradient(self, pos):
        return np.zeros_like(np.asarray(pos, dtype=float))

    def to_dict(self):
        return {"family": "free"}


@dataclass(frozen=True)
class Custom(PotentialSpec):
    """Tabulated ``V(r)`` interpolated by a cubic spline.

    Outside the table the spline is extrapolated, so the table should cover
    the grid that uses it.
    """

    r_table: tuple[float, ...]
    v_table: tuple[float, ...]
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.r_table, dtype=float)
        v = np.asarray(self.v_table, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 4:
            raise PotentialError("table needs matching r and V columns with at least 4 rows")
        if np.any(np.diff(r) <= 0):
            raise PotentialError("r column must be strictly increasing")
        object.__setattr__(self, "_spline", CubicSpline(r, v))

    def value(self, r):
        return self._spline(np.asarray(r, dtype=float))

    def r_dv(self, r):
        r = np.asarray(r, dtype=float)
        return r * self._spline(r, 1)

    def to_dict(self):
        return {"family": "custom", "r": list(self.r_table), "V": list(self.v_table)}


def from_dict(d: dict) -> PotentialSpec:
    """Build a potential from its JSON description."""
    fam = d.get("family")
    if fam == "power_law":
        return PowerLaw(float(d["strength"]), float(d["degree"]))
    if fam == "coulomb":
        return Coulomb(float(d.get("strength", -1.0)))
    if fam == "harmonic":
        return Harmonic(float(d.get("k", 1.0)))
    if fam == "free":
        return Free()
    if fam == "custom":
        return Custom(tuple(map(float, d["r"])), tuple(map(float, d["V"])))
    raise PotentialError(f"unknown potential family {fam!r}")


def table(r: Sequence[float], v: Sequence[float]) -> Custom:
    return Custom(tuple(map(float, r)), tuple(map(float, v)))
