"""Bivariate kernels on a grid and spectral tests of the weighted operator.

Two distinct matrix objects appear throughout:

* the *operator matrix* A = K W (W = diag of weights), which discretizes
  phi |-> integral K(., t) phi(t) dnu(t) on the weighted L2 space; all
  eigenvalue / numerical-range quantities refer to it (or to its symmetric
  similarity W^{1/2} K W^{1/2}, which has the same spectrum);
* the *raw value matrix* K itself, which is the Gram matrix quantified over
  arbitrary node selections; positive-semidefiniteness checks use it.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .grid import MeasureGrid, _frozen

#: |Im(lambda)| <= REAL_EIG_CUTOFF * (1 + |lambda|) counts as a real eigenvalue
REAL_EIG_CUTOFF = 1e-9


@dataclass(frozen=True)
class Kernel:
    """Bivariate kernel sampled at grid nodes: values[i, j] = K(t_i, t_j)."""

    grid: MeasureGrid
    values: np.ndarray
    undirected: bool = False

    def __post_init__(self):
        values = _frozen(self.values)
        n = self.grid.n
        if values.shape != (n, n):
            raise ValueError("kernel values must be an n x n matrix")
        if not np.all(np.isfinite(values)):
            raise ValueError("kernel values must be finite")
        if self.undirected and not np.array_equal(values, values.T):
            raise ValueError("undirected kernel must have exactly symmetric values")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.grid.n

    def diag(self) -> np.ndarray:
        return np.diag(self.values)

    def scale(self, c: float) -> "Kernel":
        return Kernel(self.grid, self.values * float(c), self.undirected)

    # -- serialization ---------------------------------------------------
    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerows(self.values.tolist())

    @classmethod
    def from_csv(cls, path, grid: MeasureGrid, undirected: bool = False) -> "Kernel":
        with open(path, newline="") as fh:
            rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
        return cls(grid, np.array(rows), undirected)

    def to_json(self, path) -> None:
        payload = {
            "grid": {"coords": self.grid.coords.tolist(),
                     "weights": self.grid.weights.tolist()},
            "values": self.values.tolist(),
            "undirected": self.undirected,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)

    @classmethod
    def from_json(cls, path) -> "Kernel":
        with open(path) as fh:
            payload = json.load(fh)
        grid = MeasureGrid(payload["grid"]["coords"], payload["grid"]["weights"])
        return cls(grid, np.array(payload["values"], dtype=float),
                   bool(payload.get("undirected", False)))


@dataclass(frozen=True)
class SpectralReport:
    """Summary of the weighted-operator spectrum of a kernel."""

    eigenvalues: tuple
    numerical_range_inf: float
    numerical_range_sup: float
    operator_norm_bound: float
    diag_sup: float
    r1_holds: bool
    r2_holds: bool

    def as_dict(self) -> dict:
        return {
            "eigenvalues_re": [z.real for z in self.eigenvalues],
            "eigenvalues_im": [z.imag for z in self.eigenvalues],
            "numerical_range_inf": self.numerical_range_inf,
            "numerical_range_sup": self.numerical_range_sup,
            "operator_norm_bound": self.operator_norm_bound,
            "diag_sup": self.diag_sup,
            "r1_holds": self.r1_holds,
            "r2_holds": self.r2_holds,
        }


# ---------------------------------------------------------------------------
# constructors

def constant_kernel(grid: MeasureGrid, r: float) -> Kernel:
    return Kernel(grid, np.full((grid.n, grid.n), float(r)), undirected=True)


def unidirectional_kernel(grid: MeasureGrid, r: float) -> Kernel:
    """R(s, t) = r * 1{s < t}: each agent responds only to later-indexed ones."""
    s = grid.coords[:, None]
    t = grid.coords[None, :]
    return Kernel(grid, float(r) * (s < t).astype(float), undirected=False)


def separable_kernel(grid: MeasureGrid, r: float, q) -> Kernel:
    """R(s, t) = r * q(s) * q(t) for a per-node profile q (callable or array)."""
    qv = np.asarray(q(grid.coords) if callable(q) else q, dtype=float)
    if qv.shape != (grid.n,):
        raise ValueError("q must produce one value per node")
    return Kernel(grid, float(r) * np.outer(qv, qv), undirected=True)


def diagonal_kernel(grid: MeasureGrid, diag=1.0) -> Kernel:
    """K(s, t) = diag(t) * 1{s = t}."""
    d = np.full(grid.n, float(diag)) if np.isscalar(diag) else np.asarray(diag, float)
    return Kernel(grid, np.diag(d), undirected=True)


def graph_kernel(grid: MeasureGrid, edges, rbar: float,
                 undirected: bool = True) -> Kernel:
    """Network-game kernel R(s, t) = rbar * 1{(s, t) is an edge}."""
    values = np.zeros((grid.n, grid.n))
    for i, j in edges:
        values[int(i), int(j)] = float(rbar)
        if undirected:
            values[int(j), int(i)] = float(rbar)
    return Kernel(grid, values, undirected=undirected)


def exchangeable_kernel(grid: MeasureGrid, diag: float, offdiag: float) -> Kernel:
    """K(t, t) = diag, K(s, t) = offdiag for s != t."""
    values = np.full((grid.n, grid.n), float(offdiag))
    np.fill_diagonal(values, float(diag))
    return Kernel(grid, values, undirected=True)


_Q_EXPR_NAMES = {name: getattr(np, name) for name in
                 ("sin", "cos", "exp", "log", "sqrt", "abs", "tanh", "pi")}


def kernel_from_config(grid: MeasureGrid, cfg: dict) -> Kernel:
    """Build a kernel from a config mapping, e.g. {"kind": "constant", "r": 0.5}."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ValueError("kernel config must be a mapping with a 'kind' key")
    kind = cfg["kind"]
    extra = set(cfg) - {"kind"}
    if kind == "constant":
        if extra != {"r"}:
            raise ValueError("constant kernel takes exactly 'r'")
        return constant_kernel(grid, cfg["r"])
    if kind == "unidirectional":
        if extra != {"r"}:
            raise ValueError("unidirectional kernel takes exactly 'r'")
        return unidirectional_kernel(grid, cfg["r"])
    if kind == "separable":
        if extra != {"r", "q_expr"}:
            raise ValueError("separable kernel takes 'r' and 'q_expr'")
        q = eval(cfg["q_expr"], {"__builtins__": {}},
                 dict(_Q_EXPR_NAMES, t=grid.coords))
        return separable_kernel(grid, cfg["r"], np.broadcast_to(q, (grid.n,)))
    if kind == "graph":
        if extra - {"edge_list", "rbar", "undirected"}:
            raise ValueError("graph kernel takes 'edge_list', 'rbar', 'undirected'")
        return graph_kernel(grid, cfg["edge_list"], cfg["rbar"],
                            bool(cfg.get("undirected", True)))
    if kind == "file":
        if extra - {"path", "undirected"}:
            raise ValueError("file kernel takes 'path' and optional 'undirected'")
        path = str(cfg["path"])
        if path.endswith(".json"):
            return Kernel.from_json(path)
        return Kernel.from_csv(path, grid, bool(cfg.get("undirected", False)))
    raise ValueError(f"unknown kernel kind: {kind!r}")


# ---------------------------------------------------------------------------
# spectral machinery

def operator_matrix(K: Kernel) -> np.ndarray:
    """A with A[i, j] = K(t_i, t_j) * w_j, discretizing the integral operator."""
    return K.values * K.grid.weights[None, :]


def _weighted_symmetrized(K: Kernel) -> np.ndarray:
    """S = W^{1/2} K W^{1/2}; similar to K W, symmetric iff K is undirected."""
    sw = np.sqrt(K.grid.weights)
    return sw[:, None] * K.values * sw[None, :]


def eigenvalues(K: Kernel) -> np.ndarray:
    """Operator eigenvalues, sorted by descending real part.

    For undirected kernels the symmetric similarity W^{1/2} K W^{1/2} is used,
    so the result is exactly real; otherwise a general eigensolve of K W.
    """
    if K.undirected:
        eigs = np.linalg.eigvalsh(_weighted_symmetrized(K)).astype(complex)
    else:
        eigs = np.linalg.eigvals(operator_matrix(K))
    order = np.argsort(-eigs.real, kind="stable")
    return eigs[order]


def real_eigenvalues(K: Kernel, cutoff: float = REAL_EIG_CUTOFF) -> np.ndarray:
    """Real parts of eigenvalues whose imaginary dust is below the cutoff."""
    eigs = eigenvalues(K)
    mask = np.abs(eigs.imag) <= cutoff * (1.0 + np.abs(eigs))
    return eigs.real[mask]


def numerical_range_bounds(K: Kernel) -> tuple:
    """(inf, sup) of the real Rayleigh quotients <phi, K phi> / ||phi||^2.

    Equals the extreme eigenvalues of the symmetric part of the weighted
    operator; for undirected kernels these coincide with the extreme
    eigenvalues themselves.
    """
    S = _weighted_symmetrized(K)
    sym_eigs = np.linalg.eigvalsh(0.5 * (S + S.T))
    return float(sym_eigs[0]), float(sym_eigs[-1])


def operator_norm_bound(K: Kernel) -> float:
    """The L2(nu x nu) norm of K, an upper bound for the operator norm."""
    w = K.grid.weights
    return float(np.sqrt(np.sum(w[:, None] * w[None, :] * K.values ** 2)))


def rayleigh_quotient(K: Kernel, f, normalization: str = "norm_sq") -> float:
    """<f, K f> over ||f||^2 (default) or over ||f|| in the weighted L2 space."""
    from .grid import GridFunction, inner_product, norm

    if not isinstance(f, GridFunction):
        f = K.grid.function(f)
    Kf = K.grid.function(operator_matrix(K) @ f.values)
    num = inner_product(f, Kf)
    if normalization == "norm_sq":
        den = inner_product(f, f)
    elif normalization == "norm":
        den = norm(f)
    else:
        raise ValueError("normalization must be 'norm_sq' or 'norm'")
    if den == 0.0:
        raise ValueError("zero function has no Rayleigh quotient")
    return num / den


def check_r1(K: Kernel, margin: float = 0.0) -> bool:
    """Numerical range bounded above away from 1."""
    return numerical_range_bounds(K)[1] < 1.0 - margin


def check_r2(K: Kernel) -> bool:
    """All real eigenvalues of the operator below 1."""
    re = real_eigenvalues(K)
    return bool(re.size == 0 or re.max() < 1.0)


def check_psd(K: Kernel, tol: float = None) -> bool:
    """PSD test on the raw value matrix (Gram over all grid nodes)."""
    if not K.undirected:
        raise ValueError("PSD check requires an undirected kernel")
    if tol is None:
        dmax = float(np.max(K.diag())) if K.n else 0.0
        tol = 1e-8 * max(dmax, 0.0)
    min_eig = float(np.linalg.eigvalsh(K.values)[0])
    return min_eig >= -tol


def cauchy_schwarz_audit(K: Kernel) -> float:
    """Max over node pairs of K(s,t) - sqrt(K(s,s) K(t,t)); <= tol when PSD."""
    if not K.undirected:
        raise ValueError("Cauchy-Schwarz audit requires an undirected kernel")
    d = np.clip(K.diag(), 0.0, None)
    bound = np.sqrt(np.outer(d, d))
    return float(np.max(K.values - bound))


def spectral_report(K: Kernel, r1_margin: float = 0.0) -> SpectralReport:
    eigs = eigenvalues(K)
    nr_inf, nr_sup = numerical_range_bounds(K)
    return SpectralReport(
        eigenvalues=tuple(complex(z) for z in eigs),
        numerical_range_inf=nr_inf,
        numerical_range_sup=nr_sup,
        operator_norm_bound=operator_norm_bound(K),
        diag_sup=float(np.max(np.abs(K.diag()))),
        r1_holds=nr_sup < 1.0 - r1_margin,
        r2_holds=check_r2(K),
    )


def hadamard_eigen_bound(K: Kernel, R: Kernel) -> tuple:
    """Largest real operator eigenvalue of the entrywise product K o R.

    For K undirected PSD with bounded diagonal and R with the numerical range
    bounded below 1, every real eigenvalue of the product operator stays below
    max_t K(t, t).  Returns (max_real_eig, bound, holds).
    """
    if not check_psd(K):
        raise ValueError("K must be positive semidefinite")
    if not check_r1(R):
        raise ValueError("R must satisfy the numerical-range condition (R1)")
    prod = Kernel(K.grid, K.values * R.values,
                  undirected=K.undirected and R.undirected
                  and np.array_equal(K.values * R.values, (K.values * R.values).T))
    re = real_eigenvalues(prod)
    max_real = float(re.max()) if re.size else 0.0
    bound = float(np.max(K.diag()))
    return max_real, bound, max_real < bound


def psd_project_tol(values: np.ndarray) -> float:
    """Default PSD tolerance used for covariance validation."""
    return 1e-8 * max(float(np.trace(values)), 1.0)
