"""Weighted node grids standing in for a normalized population measure.

A grid is a finite set of nodes t_1 < ... < t_n with positive quadrature
weights w_i summing to one.  Integrals against the population measure are
evaluated as weighted sums, so every continuum formula in the rest of the
library reduces to plain linear algebra on these arrays.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

#: absolute tolerance on |sum(weights) - 1| accepted by the validator
WEIGHT_SUM_TOL = 1e-12


def _frozen(a):
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class MeasureGrid:
    """Nodes and weights of a discretized probability measure.

    Parameters
    ----------
    coords : (n,) array
        Node locations, strictly increasing.
    weights : (n,) array
        Positive quadrature weights with sum 1 (within ``WEIGHT_SUM_TOL``).
    """

    coords: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        coords = _frozen(self.coords)
        weights = _frozen(self.weights)
        if coords.ndim != 1 or weights.ndim != 1:
            raise ValueError("coords and weights must be one-dimensional")
        if coords.shape != weights.shape:
            raise ValueError("coords and weights must have equal length")
        if coords.size == 0:
            raise ValueError("grid must contain at least one node")
        if np.any(np.diff(coords) <= 0):
            raise ValueError("coords must be strictly increasing")
        if not np.all(np.isfinite(coords)) or not np.all(np.isfinite(weights)):
            raise ValueError("coords and weights must be finite")
        if np.any(weights <= 0):
            raise ValueError("weights must be strictly positive")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("weights must sum to one")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.coords.size

    # -- grid-function helpers -------------------------------------------
    def function(self, values) -> "GridFunction":
        """Wrap an array of per-node values as a function on this grid."""
        return GridFunction(self, values)

    def constant(self, value: float) -> "GridFunction":
        return GridFunction(self, np.full(self.n, float(value)))

    def from_callable(self, fn) -> "GridFunction":
        return GridFunction(self, np.asarray(fn(self.coords), dtype=float))

    def indicator(self, members) -> "GridFunction":
        """0/1 function of a node subset given by an index array or bool mask."""
        mask = np.zeros(self.n)
        mask[np.asarray(members)] = 1.0
        return GridFunction(self, mask)

    def same_nodes(self, other: "MeasureGrid") -> bool:
        return (
            self.n == other.n
            and np.array_equal(self.coords, other.coords)
            and np.array_equal(self.weights, other.weights)
        )

    # -- serialization ---------------------------------------------------
    def to_json(self, path) -> None:
        payload = {"coords": self.coords.tolist(), "weights": self.weights.tolist()}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)

    @classmethod
    def from_json(cls, path) -> "MeasureGrid":
        with open(path) as fh:
            payload = json.load(fh)
        if not isinstance(payload, dict) or set(payload) != {"coords", "weights"}:
            raise ValueError("grid JSON must contain exactly 'coords' and 'weights'")
        return cls(payload["coords"], payload["weights"])

    @classmethod
    def weights_from_csv(cls, path) -> "MeasureGrid":
        """Read a two-column CSV of (coord, weight) rows, header optional."""
        coords, weights = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row:
                    continue
                try:
                    c, w = float(row[0]), float(row[1])
                except ValueError:
                    continue  # header line
                coords.append(c)
                weights.append(w)
        return cls(coords, weights)


@dataclass(frozen=True)
class GridFunction:
    """Real-valued function known at the nodes of a :class:`MeasureGrid`."""

    grid: MeasureGrid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != (self.grid.n,):
            raise ValueError("values must have one entry per grid node")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", values)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            if not self.grid.same_nodes(other.grid):
                raise ValueError("grids do not match")
            return GridFunction(self.grid, self.values + other.values)
        return GridFunction(self.grid, self.values + float(other))

    __radd__ = __add__

    def __mul__(self, scalar):
        return GridFunction(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1.0) * other


def uniform_grid(n: int, a: float = 0.0, b: float = 1.0) -> MeasureGrid:
    """Midpoint discretization of the uniform measure on [a, b].

    Nodes sit at cell midpoints a + (i + 1/2)(b - a)/n with equal weights
    1/n, which makes smooth-integrand quadrature second-order accurate.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not b > a:
        raise ValueError("interval must satisfy b > a")
    coords = a + (np.arange(n) + 0.5) * (b - a) / n
    weights = np.full(n, 1.0 / n)
    # nudge weights so they sum to one exactly despite rounding
    weights[-1] += 1.0 - weights.sum()
    return MeasureGrid(coords, weights)


def integrate(f: GridFunction) -> float:
    """Integral of f against the grid's measure: sum_i w_i f(t_i)."""
    return float(f.grid.weights @ f.values)


def inner_product(f: GridFunction, g: GridFunction) -> float:
    """Weighted L2 inner product <f, g> = sum_i w_i f(t_i) g(t_i)."""
    if not f.grid.same_nodes(g.grid):
        raise ValueError("grids do not match")
    return float(np.sum(f.grid.weights * f.values * g.values))


def norm(f: GridFunction) -> float:
    """Weighted L2 norm of f."""
    return float(np.sqrt(max(inner_product(f, f), 0.0)))
