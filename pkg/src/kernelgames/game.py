"""Basic games, Gaussian information structures, and the linear equilibrium.

A basic game is the pair (state process theta, payoff kernel R); each agent
best-responds with f(t) = E_t[F(t)] + E_t[theta(t)] where F is the weighted
aggregate of everyone's strategy.  Under jointly Gaussian (theta, signals)
the equilibrium is linear in signals and is found by matching coefficients:
the loadings solve one large linear system assembled from the conditional
Gaussian formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, SingularMeanEquation
from .grid import GridFunction, MeasureGrid, _frozen
from .kernels import Kernel, eigenvalues, operator_matrix, psd_project_tol


def _sym_pinv(mat: np.ndarray, cutoff_rel: float = 1e-10) -> np.ndarray:
    """Pseudo-inverse of a symmetric PSD block with relative spectral cutoff."""
    if mat.size == 0:
        return mat
    lam, vec = np.linalg.eigh(0.5 * (mat + mat.T))
    top = float(lam[-1])
    if top <= 0.0:
        return np.zeros_like(mat)
    inv = np.where(lam > cutoff_rel * top, 1.0 / np.where(lam > 0, lam, 1.0), 0.0)
    return (vec * inv) @ vec.T


@dataclass(frozen=True)
class BasicGame:
    """Payoff kernel plus the Gaussian state process (mean and covariance)."""

    grid: MeasureGrid
    payoff: Kernel
    state_mean: GridFunction
    state_cov: Kernel

    def __post_init__(self):
        for obj in (self.payoff, self.state_mean, self.state_cov):
            if not obj.grid.same_nodes(self.grid):
                raise ValueError("all game components must share the grid")
        if not self.state_cov.undirected:
            raise ValueError("state covariance must be undirected")
        min_eig = float(np.linalg.eigvalsh(self.state_cov.values)[0])
        if min_eig < -psd_project_tol(self.state_cov.values):
            raise ValueError("state covariance must be positive semidefinite")

    def is_common_state(self, tol: float = 1e-9) -> bool:
        v = self.state_cov.values
        scale = 1.0 + float(np.max(np.abs(v)))
        return (np.max(np.abs(v - v.flat[0])) <= tol * scale
                and np.max(np.abs(self.state_mean.values
                                  - self.state_mean.values[0])) <= tol * scale)


def common_state_game(grid: MeasureGrid, payoff: Kernel,
                      mean: float = 0.0, var: float = 1.0) -> BasicGame:
    """Game in which every agent's state term is one common theta ~ N(mean, var)."""
    if var < 0:
        raise ValueError("state variance must be non-negative")
    cov = Kernel(grid, np.full((grid.n, grid.n), float(var)), undirected=True)
    return BasicGame(grid, payoff, grid.constant(mean), cov)


@dataclass(frozen=True)
class GaussianInfo:
    """Joint Gaussian law of (theta-vector, all agents' signal vectors).

    ``joint_cov`` is ordered with the n theta entries first, then the signal
    blocks node by node; ``signal_mean`` stacks the signal means in the same
    order.
    """

    grid: MeasureGrid
    signal_dims: np.ndarray
    signal_mean: np.ndarray
    joint_cov: np.ndarray

    def __post_init__(self):
        dims = np.asarray(self.signal_dims, dtype=int)
        if dims.shape != (self.grid.n,) or np.any(dims < 1):
            raise ValueError("signal_dims must give a positive dimension per node")
        mean = _frozen(self.signal_mean)
        cov = _frozen(self.joint_cov)
        total = self.grid.n + int(dims.sum())
        if mean.shape != (int(dims.sum()),):
            raise ValueError("signal_mean length must equal total signal dimension")
        if cov.shape != (total, total):
            raise ValueError("joint_cov must cover the theta block and all signals")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * (1 + np.abs(cov).max())):
            raise ValueError("joint_cov must be symmetric")
        cov = 0.5 * (cov + cov.T)
        min_eig = float(np.linalg.eigvalsh(cov)[0])
        if min_eig < -psd_project_tol(cov):
            raise ValueError("joint_cov must be positive semidefinite")
        dims.flags.writeable = False
        object.__setattr__(self, "signal_dims", dims)
        object.__setattr__(self, "signal_mean", mean)
        object.__setattr__(self, "joint_cov", _frozen(cov))

    @property
    def total_dim(self) -> int:
        return int(self.signal_dims.sum())

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.signal_dims)))

    def sig_slice(self, t: int) -> slice:
        off = self.offsets
        n = self.grid.n
        return slice(n + off[t], n + off[t + 1])

    def theta_block(self) -> np.ndarray:
        n = self.grid.n
        return self.joint_cov[:n, :n]

    def signal_block(self) -> np.ndarray:
        n = self.grid.n
        return self.joint_cov[n:, n:]

    def cross_block(self) -> np.ndarray:
        """Cov[signals, theta-vector], shape (total_dim, n)."""
        n = self.grid.n
        return self.joint_cov[n:, :n]


# ---------------------------------------------------------------------------
# named information structures

def _assemble_info(game: BasicGame, dims, signal_mean, sig_cov, cross) -> GaussianInfo:
    """Stack (theta, signals) covariance blocks into a GaussianInfo.

    ``cross`` is Cov[signals, theta-vector] with shape (D, n).
    """
    n = game.grid.n
    D = int(np.sum(dims))
    joint = np.zeros((n + D, n + D))
    joint[:n, :n] = game.state_cov.values
    joint[n:, :n] = cross
    joint[:n, n:] = cross.T
    joint[n:, n:] = sig_cov
    return GaussianInfo(game.grid, np.asarray(dims, int), np.asarray(signal_mean, float), joint)


def no_info(game: BasicGame) -> GaussianInfo:
    """Every agent observes a degenerate (zero-variance) signal."""
    n = game.grid.n
    return _assemble_info(game, np.ones(n, int), np.zeros(n),
                          np.zeros((n, n)), np.zeros((n, n)))


def full_info(game: BasicGame) -> GaussianInfo:
    """Every agent observes its own state exactly: x(t) = theta(t)."""
    n = game.grid.n
    S = game.state_cov.values
    return _assemble_info(game, np.ones(n, int), game.state_mean.values, S, S)


def public_info(game: BasicGame, noise_var: float = 0.0) -> GaussianInfo:
    """One shared signal x = integral theta dnu + noise, observed by everyone."""
    if noise_var < 0:
        raise ValueError("noise variance must be non-negative")
    n = game.grid.n
    w = game.grid.weights
    S = game.state_cov.values
    cross_row = w @ S                      # Cov[x, theta(s)]
    var_x = float(w @ S @ w) + noise_var
    sig_cov = np.full((n, n), var_x)
    cross = np.tile(cross_row, (n, 1))
    mean = np.full(n, float(w @ game.state_mean.values))
    return _assemble_info(game, np.ones(n, int), mean, sig_cov, cross)


def private_iid_info(game: BasicGame, noise_var: float,
                     exact_lln: bool = True) -> GaussianInfo:
    """Own-state signal with idiosyncratic noise: x(t) = theta(t) + eps(t).

    With ``exact_lln`` (uniform grids only) the noise draws are exchangeable
    with unit weight-sum exactly zero, so the aggregate of any linear strategy
    carries no noise term -- the finite-grid analog of idiosyncratic noise
    vanishing in the population aggregate.  With ``exact_lln=False`` the noise
    is literally independent across nodes.
    """
    if noise_var < 0:
        raise ValueError("noise variance must be non-negative")
    n = game.grid.n
    w = game.grid.weights
    if exact_lln:
        if not np.allclose(w, 1.0 / n, rtol=0.0, atol=1e-12):
            raise ValueError("exact_lln noise requires a uniform grid")
        if n == 1:
            N = np.zeros((1, 1))
        else:
            N = noise_var * n / (n - 1) * (np.eye(n) - np.full((n, n), 1.0 / n))
    else:
        N = noise_var * np.eye(n)
    S = game.state_cov.values
    return _assemble_info(game, np.ones(n, int), game.state_mean.values, S + N, S)


def targeted_info(game: BasicGame, members) -> GaussianInfo:
    """Members observe their state exactly; everyone else observes nothing."""
    n = game.grid.n
    mask = np.zeros(n, dtype=bool)
    mask[np.asarray(members, dtype=int)] = True
    S = game.state_cov.values
    sel = np.outer(mask, mask)
    sig_cov = np.where(sel, S, 0.0)
    cross = np.where(mask[:, None], S, 0.0)
    mean = np.where(mask, game.state_mean.values, 0.0)
    return _assemble_info(game, np.ones(n, int), mean, sig_cov, cross)


def info_from_parts(game: BasicGame, signal_dims, signal_mean,
                    sig_cov, cross) -> GaussianInfo:
    """Custom structure from explicit signal covariance and signal-state cross."""
    return _assemble_info(game, signal_dims, signal_mean,
                          np.asarray(sig_cov, float), np.asarray(cross, float))


# ---------------------------------------------------------------------------
# equilibrium objects and solvers

@dataclass(frozen=True)
class LinearEquilibrium:
    """Linear strategy profile f(t) = intercept(t) + loadings(t) . x(t)."""

    grid: MeasureGrid
    info: GaussianInfo
    intercepts: GridFunction
    loadings: tuple
    induced_mean: GridFunction
    induced_action_cov: Kernel
    induced_action_state_cov: GridFunction
    theta_var: np.ndarray = field(default=None)

    def loading_vector(self) -> np.ndarray:
        return np.concatenate([np.atleast_1d(c) for c in self.loadings])


def solve_mean(game: BasicGame, tol: float = 1e-9) -> GridFunction:
    """Solve the first-moment restriction (I - R-operator) phi = E[theta]."""
    A = operator_matrix(game.payoff)
    eigs = eigenvalues(game.payoff)
    if np.any(np.abs(eigs - 1.0) <= 1e-9 * (1.0 + np.abs(eigs))):
        raise SingularMeanEquation("payoff operator has eigenvalue 1")
    mu = game.state_mean.values
    phi = np.linalg.solve(np.eye(game.grid.n) - A, mu)
    scale = 1.0 + float(np.max(np.abs(phi)))
    if np.max(np.abs(phi - A @ phi - mu)) > tol * scale:
        raise SingularMeanEquation("mean equation residual above tolerance")
    return game.grid.function(phi)


def _coefficient_system(game: BasicGame, info: GaussianInfo):
    """Assemble (A, rhs) so equilibrium loadings solve c = A c + rhs."""
    n = game.grid.n
    D = info.total_dim
    node_of = np.repeat(np.arange(n), info.signal_dims)
    Csig = info.signal_block()
    cross = info.cross_block()                      # (D, n)
    # block-diagonal pseudo-inverse of each node's own signal covariance
    P = np.zeros((D, D))
    off = info.offsets
    for t in range(n):
        sl = slice(off[t], off[t + 1])
        P[sl, sl] = _sym_pinv(Csig[sl, sl])
    R = game.payoff.values
    E = R[np.ix_(node_of, node_of)] * game.grid.weights[node_of][None, :]
    A = P @ (E * Csig)
    rhs = P @ cross[np.arange(D), node_of]          # P . Cov[x_t, theta(t)]
    return A, rhs, node_of


def _package_equilibrium(game, info, c: np.ndarray, b: np.ndarray) -> LinearEquilibrium:
    n = game.grid.n
    off = info.offsets
    Csig = info.signal_block()
    cross = info.cross_block()
    loadings = tuple(c[off[t]:off[t + 1]].copy() for t in range(n))
    # Z holds each node's loadings in its own signal block
    Z = np.zeros((n, info.total_dim))
    for t in range(n):
        Z[t, off[t]:off[t + 1]] = loadings[t]
    xi = Z @ Csig @ Z.T
    xi = 0.5 * (xi + xi.T)
    zeta = np.diag(Z @ cross)
    intercept = b - Z @ info.signal_mean
    return LinearEquilibrium(
        grid=game.grid,
        info=info,
        intercepts=game.grid.function(intercept),
        loadings=loadings,
        induced_mean=game.grid.function(b),
        induced_action_cov=Kernel(game.grid, xi, undirected=True),
        induced_action_state_cov=game.grid.function(zeta.copy()),
        theta_var=game.state_cov.diag().copy(),
    )


def solve_linear_equilibrium(game: BasicGame, info: GaussianInfo,
                             method: str = "auto", tol: float = 1e-12,
                             max_iter: int = 100_000,
                             initial: np.ndarray = None) -> LinearEquilibrium:
    """Matching-coefficient solution of the linear Bayesian equilibrium.

    ``method`` is one of ``auto`` (direct below 10^4 coefficients, otherwise
    fixed-point), ``direct`` or ``fixed_point``.
    """
    if not info.grid.same_nodes(game.grid):
        raise ValueError("game and information structure grids differ")
    theta = info.theta_block()
    sc = game.state_cov.values
    if np.max(np.abs(theta - sc)) > 1e-9 * (1.0 + np.abs(sc).max()):
        raise ValueError("information structure theta block does not match the game")

    A, rhs, _ = _coefficient_system(game, info)
    D = rhs.size
    if method == "auto":
        method = "direct" if D <= 10_000 else "fixed_point"
    if method == "direct":
        try:
            c = np.linalg.solve(np.eye(D) - A, rhs)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"direct coefficient solve failed: {exc}") from exc
    elif method == "fixed_point":
        c = np.zeros(D) if initial is None else np.asarray(initial, float).copy()
        bound = 1e12 * (1.0 + float(np.max(np.abs(rhs), initial=0.0)))
        for _ in range(max_iter):
            c_next = A @ c + rhs
            if not np.all(np.isfinite(c_next)) or np.max(np.abs(c_next)) > bound:
                raise NoConvergence("fixed-point iteration diverged")
            if np.max(np.abs(c_next - c)) <= tol * (1.0 + np.max(np.abs(c_next))):
                c = c_next
                break
            c = c_next
        else:
            raise NoConvergence("fixed-point iteration cap reached")
    else:
        raise ValueError("method must be 'auto', 'direct' or 'fixed_point'")

    res = c - (A @ c + rhs)
    if np.max(np.abs(res), initial=0.0) > 1e-8 * (1.0 + np.max(np.abs(c), initial=0.0)):
        raise NoConvergence("coefficient fixed point residual above tolerance")
    b = solve_mean(game).values
    return _package_equilibrium(game, info, c, b)


@dataclass(frozen=True)
class MomentReport:
    moment1_residuals: np.ndarray
    moment2_residuals: np.ndarray
    tol: float

    @property
    def max_residual(self) -> float:
        return float(max(self.moment1_residuals.max(), self.moment2_residuals.max()))

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol


def verify_moment_restrictions(eq: LinearEquilibrium, game: BasicGame,
                               tol: float = 1e-8) -> MomentReport:
    """Residuals of the first- and second-moment equilibrium restrictions."""
    if not eq.grid.same_nodes(game.grid):
        raise ValueError("equilibrium and game grids differ")
    A = operator_matrix(game.payoff)
    b = eq.induced_mean.values
    res1 = np.abs(b - A @ b - game.state_mean.values)
    xi = eq.induced_action_cov.values
    zeta = eq.induced_action_state_cov.values
    res2 = np.abs(np.diag(xi) - np.sum(A * xi, axis=1) - zeta)
    return MomentReport(res1, res2, tol)


def symmetric_moment_identity(eq: LinearEquilibrium, r: float,
                              sym_tol: float = 1e-9) -> float:
    """Residual of the symmetric standard-deviation identity
    Sd[f] = Corr[f, theta] / (1 - r Corr[f, f']) * Sd[theta],
    evaluated at a representative node pair.
    """
    xi = eq.induced_action_cov.values
    zeta = eq.induced_action_state_cov.values
    tvar = eq.theta_var
    n = xi.shape[0]
    d = np.diag(xi)
    scale = 1.0 + float(np.max(np.abs(xi)))
    if np.max(np.abs(d - d[0])) > sym_tol * scale:
        raise ValueError("equilibrium is not symmetric across nodes (diagonal)")
    if n > 1:
        offd = xi[~np.eye(n, dtype=bool)]
        if np.max(np.abs(offd - offd[0])) > sym_tol * scale:
            raise ValueError("equilibrium is not symmetric across nodes (off-diagonal)")
    if np.max(np.abs(zeta - zeta[0])) > sym_tol * (1 + np.max(np.abs(zeta))):
        raise ValueError("equilibrium is not symmetric across nodes (state cov)")
    if tvar is None or np.max(np.abs(tvar - tvar[0])) > sym_tol * (1 + np.abs(tvar).max()):
        raise ValueError("identity requires a common state variance")
    var_f = float(d[0])
    var_t = float(tvar[0])
    if var_f <= 0.0 or var_t <= 0.0:
        return 0.0  # zero-variance convention: identity is vacuous
    cov_ff = float(xi[0, 1]) if n > 1 else var_f
    sd_f, sd_t = np.sqrt(var_f), np.sqrt(var_t)
    corr_ft = float(zeta[0]) / (sd_f * sd_t)
    corr_ff = cov_ff / var_f
    den = 1.0 - r * corr_ff
    if abs(den) < 1e-15:
        raise ValueError("identity denominator vanished (r Corr[f, f'] = 1)")
    return abs(sd_f - corr_ft * sd_t / den)
