"""Model parameters, grids, grid functions and the standard-incidence reaction terms.

Everything here is an immutable value object; the other modules build on these
without mutating them, so instances are safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Guard level below which the total population counts as extinct and the
# incidence is pinned to its physical limit 0 (SI/N <= min(S, I)).
ETA_DEFAULT = 1e-12

# Profiles may dip this far below zero (roundoff) before validation rejects them.
NONNEG_TOL = 1e-10


@dataclass(frozen=True)
class ModelParams:
    """Diffusion rates, epidemiological rates and the left-limit susceptible level.

    d1, d2, d3  diffusion of susceptible / infected / removed (length^2/time)
    beta        transmission rate (1/time)
    gamma       recovery rate (1/time)
    delta       death or quarantine rate of infectives (1/time, may be 0)
    s_minus_inf susceptible density far ahead of the front (individuals/length)
    """

    d1: float
    d2: float
    d3: float
    beta: float
    gamma: float
    delta: float
    s_minus_inf: float

    def __post_init__(self):
        for name in ("d1", "d2", "d3", "beta", "gamma", "s_minus_inf"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")
        if not (np.isfinite(self.delta) and self.delta >= 0):
            raise ValueError(f"delta must be finite and >= 0, got {self.delta}")

    @property
    def wave_regime(self) -> bool:
        """True iff fronts can exist: R0 > 1 together with d3 < 2*d2."""
        return self.beta / (self.gamma + self.delta) > 1.0 and self.d3 < 2.0 * self.d2


@dataclass(frozen=True)
class Grid:
    """Uniform mesh on [x_min, x_max] with the origin strictly inside.

    The origin must be interior because the envelope functions used by the
    profile solver are anchored at x = 0.
    """

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not (self.x_min < 0.0 < self.x_max):
            raise ValueError("grid window must contain 0 strictly inside")
        if self.n < 3:
            raise ValueError("grid needs at least 3 points")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        pts = self.x_min + self.dx * np.arange(self.n)
        pts.flags.writeable = False
        return pts

    @classmethod
    def symmetric(cls, half_width: float, dx: float) -> "Grid":
        """Window [-half_width, half_width] with spacing as close to dx as possible."""
        n = int(round(2.0 * half_width / dx)) + 1
        return cls(-half_width, half_width, n)


@dataclass(frozen=True)
class Tail:
    """Extrapolation model beyond the window: 'constant', 'zero' or 'exp' with a rate.

    An 'exp' tail continues the boundary sample as value * exp(rate*(x - x_edge)).
    These three shapes cover every function the resolvent operators transport:
    susceptible-like plateaus and pure exponentials of the infected/removed type.
    """

    kind: str
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "zero", "exp"):
            raise ValueError(f"unknown tail kind {self.kind!r}")
        if self.kind != "exp" and self.rate != 0.0:
            raise ValueError("only 'exp' tails carry a rate")


CONSTANT = Tail("constant")
ZERO = Tail("zero")


def exp_growth(rate: float) -> Tail:
    return Tail("exp", float(rate))


@dataclass(frozen=True)
class GridFunction:
    """Samples of a real function on a Grid plus tail models for extrapolation."""

    grid: Grid
    values: np.ndarray
    left_tail: Tail = CONSTANT
    right_tail: Tail = CONSTANT

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must all be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def extended_value(self, x: float) -> float:
        """Evaluate at a point outside the window using the declared tail model."""
        if self.grid.x_min <= x <= self.grid.x_max:
            return float(np.interp(x, self.grid.x, self.values))
        if x < self.grid.x_min:
            tail, edge, v = self.left_tail, self.grid.x_min, self.values[0]
        else:
            tail, edge, v = self.right_tail, self.grid.x_max, self.values[-1]
        if tail.kind == "zero":
            return 0.0
        if tail.kind == "constant":
            return float(v)
        return float(v * np.exp(tail.rate * (x - edge)))


@dataclass(frozen=True)
class Profile:
    """A candidate wave (S, I, R) as three grid functions on one shared grid."""

    s: GridFunction
    i: GridFunction
    r: GridFunction

    def __post_init__(self):
        if not (self.s.grid == self.i.grid == self.r.grid):
            raise ValueError("profile components must share one grid")
        for name, gf in (("s", self.s), ("i", self.i), ("r", self.r)):
            if np.min(gf.values) < -NONNEG_TOL:
                raise ValueError(f"profile component {name} is negative beyond tolerance")

    @property
    def grid(self) -> Grid:
        return self.s.grid

    def as_array(self) -> np.ndarray:
        """Stack the three components into a (3, n) array."""
        return np.array([self.s.values, self.i.values, self.r.values])


def r_naught(p: ModelParams) -> float:
    """Basic reproduction number beta/(gamma + delta)."""
    return p.beta / (p.gamma + p.delta)


def incidence(s, i, r, beta: float, eta: float = ETA_DEFAULT):
    """Standard incidence beta*S*I/(S+I+R), pinned to 0 where the population is extinct.

    Works elementwise on arrays; scalars in give a scalar out.
    """
    s = np.asarray(s, dtype=float)
    i = np.asarray(i, dtype=float)
    r = np.asarray(r, dtype=float)
    n = s + i + r
    safe = np.where(n > eta, n, 1.0)
    out = np.where(n > eta, beta * s * i / safe, 0.0)
    return out if out.ndim else float(out)


def reaction_terms(s, i, r, p: ModelParams, eta: float = ETA_DEFAULT):
    """Reaction parts of the three equations: (-incidence, incidence-(gamma+delta)*I, gamma*I).

    The three components sum to -delta*I exactly; with delta = 0 the local
    population is conserved.
    """
    inc = incidence(s, i, r, p.beta, eta)
    i = np.asarray(i, dtype=float)
    f_i = inc - (p.gamma + p.delta) * i
    f_r = p.gamma * i
    if np.ndim(inc) == 0:
        return (-float(inc), float(f_i), float(f_r))
    return (-inc, f_i, f_r)
