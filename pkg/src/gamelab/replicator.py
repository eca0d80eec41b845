"""Coupled replicator learning dynamics for two-player games.

Each player's mixed strategy evolves by the replicator rule against the
other player's current mixture:

    dx_i/dt = x_i [ (A y)_i - x.A.y ]
    dy_j/dt = y_j [ (B~ x)_j - y.B~.x ]      B~ = payoff_b transposed

For the 3x3 cyclic game the zero-sum line eps_x = -eps_y makes the flow
Hamiltonian: H = -(1/3) sum(log x_i) - (1/3) sum(log y_j) is conserved
and the reduced flow factors through an antisymmetric structure matrix
J(eps).  The log-ratio coordinates used here list components from last
to second, u = (log(x3/x1), log(x2/x1)) and likewise v for y; with the
gradient dH = (x3 - 1/3, x2 - 1/3, y3 - 1/3, y2 - 1/3) this ordering
reproduces J.dH exactly, which the more obvious ascending orderings do
not (they conserve H but scramble the sign pattern of J).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BoundsError, DimensionError, DomainError, StiffnessError
from .games import (
    BimatrixGame,
    MixedProfile,
    RpsParams,
    build_generalized_rps,
    is_zero_sum,
)

INTERIOR_FLOOR = 1e-12
LOG_CLIP = 1e-300


@dataclass(frozen=True)
class LearningState:
    """One snapshot of the coupled learning process."""

    profile: MixedProfile
    t: float


@dataclass(frozen=True)
class IntegratorConfig:
    """Adaptive integrator settings.

    coords selects the chart: 'log_ratio' (default) integrates the
    reduced log coordinates, which keeps every frequency positive by
    construction; 'simplex' integrates raw frequencies and stops with
    an event when any component falls to escape_floor, the right tool
    for runs that are expected to collapse onto the boundary.
    """

    t_end: float = 1000.0
    record_every: float = 0.5
    tol_rel: float = 1e-10
    tol_abs: float = 1e-10
    step_initial: float = 0.01
    coords: str = "log_ratio"
    escape_floor: float = 1e-12

    def __post_init__(self):
        if self.t_end <= 0 or self.record_every <= 0:
            raise BoundsError("t_end and record_every must be positive")
        if self.record_every > self.t_end:
            raise BoundsError("record_every must not exceed t_end")
        if self.tol_rel <= 0 or self.tol_abs <= 0 or self.step_initial <= 0:
            raise BoundsError("tolerances and step_initial must be positive")
        if self.coords not in ("log_ratio", "simplex"):
            raise DomainError(f"unknown coords {self.coords!r}")
        if not 0 < self.escape_floor < 1e-3:
            raise BoundsError("escape_floor must be in (0, 1e-3)")


@dataclass(frozen=True)
class Trajectory:
    """Sampled trajectory with optional conserved-quantity series."""

    ts: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    game_params: RpsParams | None = None
    hamiltonian_series: np.ndarray | None = None
    escaped: bool = False

    def __post_init__(self):
        for name in ("ts", "xs", "ys", "hamiltonian_series"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                arr.flags.writeable = False
                object.__setattr__(self, name, arr)
        if np.any(np.diff(self.ts) <= 0):
            raise DomainError("sample timestamps must be strictly increasing")

    @property
    def samples(self) -> list:
        return [
            LearningState(profile=MixedProfile(x=x, y=y), t=float(t))
            for t, x, y in zip(self.ts, self.xs, self.ys)
        ]


@dataclass(frozen=True)
class PoissonStructure:
    """The antisymmetric matrix coupling the reduced coordinates."""

    eps: float
    j: np.ndarray

    def __post_init__(self):
        j = np.asarray(self.j, dtype=float)
        j.flags.writeable = False
        object.__setattr__(self, "j", j)


def poisson_structure(eps: float) -> PoissonStructure:
    """Structure matrix of the zero-sum reduced flow, eps = eps_x."""
    if not -1.0 <= eps <= 1.0:
        raise BoundsError(f"eps={eps} outside [-1, 1]")
    e = float(eps)
    j = np.array(
        [
            [0.0, 0.0, 2 * e, 3 + e],
            [0.0, 0.0, -3 + e, 2 * e],
            [-2 * e, 3 - e, 0.0, 0.0],
            [-3 - e, -2 * e, 0.0, 0.0],
        ]
    )
    return PoissonStructure(eps=e, j=j)


def vector_field(game: BimatrixGame, profile: MixedProfile):
    """Replicator velocities (dx, dy); both sum to zero (simplex tangency)."""
    x, y = profile.x, profile.y
    if x.shape[0] != game.rows or y.shape[0] != game.cols:
        raise DimensionError(
            f"profile ({x.shape[0]}, {y.shape[0]}) does not fit game "
            f"({game.rows}, {game.cols})"
        )
    ay = game.payoff_a @ y
    bx = game.payoff_b.T @ x
    dx = x * (ay - x @ ay)
    dy = y * (bx - y @ bx)
    return dx, dy


def _coord_components(k: int):
    # coordinate c of a k-simplex chart refers to component k-1-c; the
    # descending order is what aligns the 3x3 reduced flow with J
    return list(range(k - 1, 0, -1))


def log_coords(profile: MixedProfile) -> np.ndarray:
    """Map an interior profile to reduced log-ratio coordinates."""
    x, y = profile.x, profile.y
    if np.min(x) <= 0 or np.min(y) <= 0:
        raise DomainError("log coordinates require a strictly interior profile")
    u = [np.log(x[c] / x[0]) for c in _coord_components(len(x))]
    v = [np.log(y[c] / y[0]) for c in _coord_components(len(y))]
    return np.array(u + v)


def from_log_coords(z, rows: int, cols: int) -> MixedProfile:
    """Inverse chart; always lands strictly inside the simplex product."""
    z = np.asarray(z, dtype=float)
    if z.shape[0] != rows + cols - 2:
        raise DimensionError(
            f"expected {rows + cols - 2} coordinates, got {z.shape[0]}"
        )
    return MixedProfile(
        x=_softmax_from(z[: rows - 1], rows), y=_softmax_from(z[rows - 1 :], cols)
    )


def _softmax_from(w, k):
    full = np.zeros(k)
    for c, comp in enumerate(_coord_components(k)):
        full[comp] = w[c]
    full -= full.max()  # guard the exponentials, sum is shift-invariant
    e = np.exp(full)
    return e / e.sum()


def log_vector_field(game: BimatrixGame, z) -> np.ndarray:
    """Reduced flow in log coordinates: payoff differences to strategy 1."""
    profile = from_log_coords(z, game.rows, game.cols)
    ay = game.payoff_a @ profile.y
    bx = game.payoff_b.T @ profile.x
    du = [ay[c] - ay[0] for c in _coord_components(game.rows)]
    dv = [bx[c] - bx[0] for c in _coord_components(game.cols)]
    return np.array(du + dv)


def hamiltonian(profile: MixedProfile) -> float:
    """Conserved quantity of the zero-sum 3x3 learning flow.

    Equals -(1/3) sum(log x_i) - (1/3) sum(log y_j); the uniform fixed
    point gives log 9.  Defined on interior 3x3 profiles only.
    """
    x, y = profile.x, profile.y
    if x.shape[0] != 3 or y.shape[0] != 3:
        raise DimensionError("the conserved quantity is defined for 3x3 games")
    if np.min(x) <= 0 or np.min(y) <= 0:
        raise DomainError("profile must be strictly interior")
    return float(-(np.log(x).sum() + np.log(y).sum()) / 3.0)


def hamiltonian_log_gradient(z) -> np.ndarray:
    """Gradient of the conserved quantity in the package log coordinates.

    Returns (x3 - 1/3, x2 - 1/3, y3 - 1/3, y2 - 1/3); together with
    poisson_structure this reconstructs the zero-sum reduced flow as
    J . grad.
    """
    z = np.asarray(z, dtype=float)
    if z.shape[0] != 4:
        raise DimensionError("expected 4 reduced coordinates (3x3 game)")
    profile = from_log_coords(z, 3, 3)
    x, y = profile.x, profile.y
    return np.array([x[2], x[1], y[2], y[1]]) - 1.0 / 3.0


def _detect_rps(game: BimatrixGame) -> RpsParams | None:
    if game.rows != 3 or game.cols != 3:
        return None
    ex, ey = float(game.payoff_a[0, 0]), float(game.payoff_b[0, 0])
    if not (-1.0 <= ex <= 1.0 and -1.0 <= ey <= 1.0):
        return None
    params = RpsParams(ex, ey)
    ref = build_generalized_rps(params)
    if np.array_equal(ref.payoff_a, game.payoff_a) and np.array_equal(
        ref.payoff_b, game.payoff_b
    ):
        return params
    return None


def integrate(
    game: BimatrixGame, start: MixedProfile, config: IntegratorConfig
) -> Trajectory:
    """Integrate the learning flow and sample it every record_every.

    Adaptive 5(4) Runge-Kutta under config tolerances.  Samples are
    renormalized onto the simplex; when the game is the zero-sum 3x3
    family the conserved-quantity series is attached.  A simplex-mode
    run that reaches the boundary event stops early with escaped=True.
    """
    m, n = game.rows, game.cols
    if start.x.shape[0] != m or start.y.shape[0] != n:
        raise DimensionError("start profile does not fit the game")
    if np.min(start.x) < INTERIOR_FLOOR or np.min(start.y) < INTERIOR_FLOOR:
        raise DomainError(
            f"start must be interior (all components >= {INTERIOR_FLOOR})"
        )
    # exact-endpoint grid; arange would overshoot t_end by an ulp for
    # steps that are not binary fractions and solve_ivp rejects that
    n_rec = max(1, int(round(config.t_end / config.record_every)))
    t_eval = np.linspace(0.0, config.t_end, n_rec + 1)
    a, bt = game.payoff_a, game.payoff_b.T

    if config.coords == "log_ratio":
        comps_x = _coord_components(m)
        comps_y = _coord_components(n)

        def rhs(_, z):
            x = _softmax_from(z[: m - 1], m)
            y = _softmax_from(z[m - 1 :], n)
            ay = a @ y
            bx = bt @ x
            return np.concatenate((ay[comps_x] - ay[0], bx[comps_y] - bx[0]))

        sol = solve_ivp(
            rhs,
            (0.0, config.t_end),
            log_coords(start),
            method="RK45",
            t_eval=t_eval,
            rtol=config.tol_rel,
            atol=config.tol_abs,
            first_step=config.step_initial,
        )
        _check_solver(sol, lambda col: from_log_coords(col, m, n))
        xs = np.empty((sol.t.size, m))
        ys = np.empty((sol.t.size, n))
        for k in range(sol.t.size):
            xs[k] = _softmax_from(sol.y[: m - 1, k], m)
            ys[k] = _softmax_from(sol.y[m - 1 :, k], n)
        escaped = False
        ts = sol.t
    else:
        def rhs(_, s):
            x, y = s[:m], s[m:]
            ay = a @ y
            bx = bt @ x
            return np.concatenate((x * (ay - x @ ay), y * (bx - y @ bx)))

        def hit_boundary(_, s):
            return float(np.min(s) - config.escape_floor)

        hit_boundary.terminal = True
        hit_boundary.direction = -1.0
        sol = solve_ivp(
            rhs,
            (0.0, config.t_end),
            np.concatenate((start.x, start.y)),
            method="RK45",
            t_eval=t_eval,
            rtol=config.tol_rel,
            atol=config.tol_abs,
            first_step=config.step_initial,
            events=hit_boundary,
        )
        _check_solver(sol, lambda col: col)
        raw = np.clip(sol.y.T, 0.0, None)
        xs = raw[:, :m] / raw[:, :m].sum(axis=1, keepdims=True)
        ys = raw[:, m:] / raw[:, m:].sum(axis=1, keepdims=True)
        escaped = sol.status == 1
        ts = sol.t

    h_series = None
    if m == 3 and n == 3 and is_zero_sum(game):
        safe_x = np.clip(xs, LOG_CLIP, None)
        safe_y = np.clip(ys, LOG_CLIP, None)
        h_series = -(np.log(safe_x).sum(axis=1) + np.log(safe_y).sum(axis=1)) / 3.0
    return Trajectory(
        ts=ts,
        xs=xs,
        ys=ys,
        game_params=_detect_rps(game),
        hamiltonian_series=h_series,
        escaped=escaped,
    )


def _check_solver(sol, to_state):
    if sol.status == -1:
        last_t = float(sol.t[-1]) if sol.t.size else 0.0
        last = to_state(sol.y[:, -1]) if sol.t.size else None
        raise StiffnessError(
            f"integrator failed: {sol.message}", last_t=last_t, last_state=last
        )
    if sol.t.size < 1:
        raise StiffnessError("integrator produced no samples")


def integrate_rps(
    params: RpsParams, start: MixedProfile, config: IntegratorConfig
) -> Trajectory:
    """Convenience wrapper building the 3x3 cyclic game first."""
    return integrate(build_generalized_rps(params), start, config)


def time_average_payoff(
    traj: Trajectory, game: BimatrixGame, transient: float = 0.1
):
    """Time-weighted mean payoffs along a trajectory.

    The first `transient` fraction of the run is discarded; at least
    100 samples must remain.  Weighting is trapezoidal so irregular
    sample spacing (early event stops) is handled correctly.
    """
    if not 0 <= transient < 1:
        raise BoundsError("transient fraction must be in [0, 1)")
    cut = traj.ts[-1] * transient
    keep = traj.ts >= cut
    if int(keep.sum()) < 100:
        raise DomainError(
            f"need >= 100 samples after the transient, have {int(keep.sum())}"
        )
    ts = traj.ts[keep]
    xs = traj.xs[keep]
    ys = traj.ys[keep]
    ua = np.einsum("ki,ij,kj->k", xs, game.payoff_a, ys)
    ub = np.einsum("ki,ij,kj->k", xs, game.payoff_b, ys)
    span = ts[-1] - ts[0]
    if span <= 0:
        raise DomainError("degenerate time span after transient")
    return (
        float(np.trapezoid(ua, ts) / span),
        float(np.trapezoid(ub, ts) / span),
    )
