"""Chaos diagnostics over replicator trajectories.

Lyapunov spectra come from the classic tangent-space recipe: integrate
the reduced flow together with an orthonormal frame pushed forward by
the analytic Jacobian, re-orthonormalize with QR at a fixed cadence and
accumulate the log stretch factors.  Poincare sections and near-corner
residence statistics operate on sampled trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import linregress

from .errors import BoundsError, DomainError, InconclusiveError
from .games import BimatrixGame, MixedProfile, build_generalized_rps
from .replicator import (
    Trajectory,
    _coord_components,
    _softmax_from,
    log_coords,
)

ESCAPE_LOG_RADIUS = 400.0  # |log ratio| beyond this counts as boundary collapse


@dataclass(frozen=True)
class LyapunovResult:
    """Spectrum estimate with its full convergence history.

    exponents are sorted descending.  convergence_series[k] holds the
    running estimates at ts[k]; escaped marks a run that collapsed onto
    the simplex boundary before t_total (partial estimates).
    """

    exponents: np.ndarray
    convergence_series: np.ndarray
    ts: np.ndarray
    qr_interval: float
    t_total: float
    transient: float
    escaped: bool

    def __post_init__(self):
        for name in ("exponents", "convergence_series", "ts"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class SectionPoint:
    """One transversal crossing of the section hyperplane."""

    t: float
    coords: tuple  # (x1, x2, y1, y2); third components are 1 - the pair
    direction: int


@dataclass(frozen=True)
class PoincareSection:
    """Crossings of the hyperplane x2 - x1 + y2 - y1 = 0.

    degenerate means the trajectory lies inside the hyperplane itself
    (section function identically zero), where isolated crossings do
    not exist.
    """

    points: tuple
    degenerate: bool = False


@dataclass(frozen=True)
class Episode:
    corner: int
    entry_t: float
    duration: float


@dataclass(frozen=True)
class ResidenceReport:
    """Time intervals the row player spends committed to one strategy."""

    episodes: tuple
    threshold: float

    @property
    def corner_order(self) -> tuple:
        return tuple(e.corner for e in self.episodes)


class Regime(str, Enum):
    REGULAR = "regular"
    CHAOTIC = "chaotic"
    ESCAPED = "escaped"


@dataclass(frozen=True)
class RegimeCall:
    """Classification with the largest-exponent evidence attached."""

    label: Regime
    lambda1: float
    tol: float


class _ReducedSystem:
    """Reduced flow and Jacobian with payoff differences precomputed.

    The u-block of the Jacobian depends only on y and vice versa, so it
    is block anti-diagonal with entries y_c (A~[a,c] - du_a) built from
    the payoff rows relative to strategy 1.
    """

    def __init__(self, game: BimatrixGame):
        self.m, self.n = game.rows, game.cols
        a = np.asarray(game.payoff_a, dtype=float)
        bt = np.asarray(game.payoff_b, dtype=float).T
        self.cx = _coord_components(self.m)
        self.cy = _coord_components(self.n)
        self.atil = a[self.cx, :] - a[0, :]
        self.btil = bt[self.cy, :] - bt[0, :]
        self.atil_cy = self.atil[:, self.cy]
        self.btil_cx = self.btil[:, self.cx]

    def flow_and_jacobian(self, z):
        m, n = self.m, self.n
        x = _softmax_from(z[: m - 1], m)
        y = _softmax_from(z[m - 1 :], n)
        du = self.atil @ y
        dv = self.btil @ x
        jac = np.zeros((m + n - 2, m + n - 2))
        jac[: m - 1, m - 1 :] = y[self.cy][None, :] * (self.atil_cy - du[:, None])
        jac[m - 1 :, : m - 1] = x[self.cx][None, :] * (self.btil_cx - dv[:, None])
        return np.concatenate((du, dv)), jac


def _flow_and_jacobian(z, a, bt, m, n):
    """One-shot wrapper around _ReducedSystem for tests and callers."""
    game = BimatrixGame(payoff_a=a, payoff_b=bt.T)
    return _ReducedSystem(game).flow_and_jacobian(np.asarray(z, dtype=float))


def lyapunov_spectrum(
    game: BimatrixGame,
    start: MixedProfile,
    t_total: float = 5000.0,
    qr_interval: float = 1.0,
    transient: float = 500.0,
    dt: float = 0.01,
) -> LyapunovResult:
    """Full Lyapunov spectrum of the learning flow from one start.

    Fixed-step fourth-order Runge-Kutta on the reduced coordinates plus
    tangent frame keeps the run bitwise reproducible.  The first
    `transient` time units only condition the frame; accumulation
    starts afterwards.  A trajectory that runs off to the simplex
    boundary stops early and is flagged escaped rather than raising.
    """
    if t_total <= transient:
        raise BoundsError("t_total must exceed the transient")
    if qr_interval <= 0 or dt <= 0:
        raise BoundsError("qr_interval and dt must be positive")
    dim = game.rows + game.cols - 2
    system = _ReducedSystem(game)
    fj = system.flow_and_jacobian
    z = log_coords(start)
    q = np.eye(dim)
    steps_per_qr = max(1, int(round(qr_interval / dt)))
    h = qr_interval / steps_per_qr
    n_qr = int(round(t_total / qr_interval))
    sums = np.zeros(dim)
    ts = []
    series = []
    escaped = False
    t = 0.0
    for _ in range(n_qr):
        for _ in range(steps_per_qr):
            f1, j1 = fj(z)
            k1, m1 = f1, j1 @ q
            f2, j2 = fj(z + 0.5 * h * k1)
            k2, m2 = f2, j2 @ (q + 0.5 * h * m1)
            f3, j3 = fj(z + 0.5 * h * k2)
            k3, m3 = f3, j3 @ (q + 0.5 * h * m2)
            f4, j4 = fj(z + h * k3)
            k4, m4 = f4, j4 @ (q + h * m3)
            z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            q = q + (h / 6.0) * (m1 + 2 * m2 + 2 * m3 + m4)
        t += qr_interval
        q, r = np.linalg.qr(q)
        diag = np.diag(r)
        signs = np.where(diag < 0, -1.0, 1.0)
        q = q * signs
        if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > ESCAPE_LOG_RADIUS:
            escaped = True
            break
        if t > transient:
            sums += np.log(np.abs(diag))
            ts.append(t)
            series.append(sums / (t - transient))
    if not series:
        raise DomainError(
            "no accumulation window survived; shorten the transient"
        )
    series = np.array(series)
    order = np.argsort(-series[-1])
    return LyapunovResult(
        exponents=series[-1][order],
        convergence_series=series[:, order],
        ts=np.array(ts),
        qr_interval=qr_interval,
        t_total=t_total,
        transient=transient,
        escaped=escaped,
    )


def classify_regime(result: LyapunovResult, tol: float = 0.01) -> RegimeCall:
    """Call the run regular or chaotic from its largest exponent.

    Requires the estimate to have settled: over the last tenth of the
    convergence history the largest exponent must vary by less than
    tol/2, otherwise the call would be noise and an inconclusive error
    is raised.  Escaped runs are labelled escaped outright.
    """
    if tol <= 0:
        raise BoundsError("tol must be positive")
    lam1 = float(result.exponents[0])
    if result.escaped:
        return RegimeCall(label=Regime.ESCAPED, lambda1=lam1, tol=tol)
    tail = result.convergence_series[-max(1, result.ts.size // 10) :, 0]
    if float(tail.max() - tail.min()) >= tol / 2:
        raise InconclusiveError(
            f"largest exponent still varies by {tail.max() - tail.min():.2e} "
            f"over the last tenth of the run; need < {tol / 2:.2e}"
        )
    label = Regime.CHAOTIC if lam1 > tol else Regime.REGULAR
    return RegimeCall(label=label, lambda1=lam1, tol=tol)


# ---------------------------------------------------------------------------
# Poincare section


def _section_value(x, y):
    return x[1] - x[0] + y[1] - y[0]


def poincare_section(traj: Trajectory, game: BimatrixGame | None = None) -> PoincareSection:
    """Refine the trajectory's crossings of x2 - x1 + y2 - y1 = 0.

    Between samples the state is interpolated with a cubic Hermite
    patch fed by the vector field at both endpoints (the patch stays on
    the simplex because endpoint values sum to one and velocities to
    zero); bisection then pins each crossing to |section value| < 1e-8.
    The game is rebuilt from the trajectory's stamped parameters when
    not supplied; for trajectories of unknown provenance the endpoint
    velocities fall back to sample differencing.
    """
    if traj.ts.size < 2:
        raise DomainError("need at least 2 samples to look for crossings")
    svals = traj.xs[:, 1] - traj.xs[:, 0] + traj.ys[:, 1] - traj.ys[:, 0]
    if np.max(np.abs(svals)) < 1e-12:
        return PoincareSection(points=(), degenerate=True)
    if game is None and traj.game_params is not None:
        game = build_generalized_rps(traj.game_params)
    states = np.hstack((traj.xs, traj.ys))
    if game is not None:
        ays = traj.ys @ np.asarray(game.payoff_a, dtype=float).T
        bxs = traj.xs @ np.asarray(game.payoff_b, dtype=float)
        dxs = traj.xs * (ays - np.sum(traj.xs * ays, axis=1, keepdims=True))
        dys = traj.ys * (bxs - np.sum(traj.ys * bxs, axis=1, keepdims=True))
        derivs = np.hstack((dxs, dys))
    else:
        derivs = np.gradient(states, traj.ts, axis=0)
    points = []
    for k in range(traj.ts.size - 1):
        s0, s1 = svals[k], svals[k + 1]
        if s0 == 0.0:
            x, y = traj.xs[k], traj.ys[k]
            points.append(_make_point(traj.ts[k], x, y, np.sign(s1 - s0)))
            continue
        if s0 * s1 >= 0:
            continue
        state0 = states[k]
        state1 = states[k + 1]
        h = traj.ts[k + 1] - traj.ts[k]
        d0 = derivs[k]
        d1 = derivs[k + 1]

        def patch(tau):
            t2, t3 = tau * tau, tau * tau * tau
            return (
                (2 * t3 - 3 * t2 + 1) * state0
                + (t3 - 2 * t2 + tau) * h * d0
                + (-2 * t3 + 3 * t2) * state1
                + (t3 - t2) * h * d1
            )

        lo, hi = 0.0, 1.0
        f_lo = s0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            state = patch(mid)
            f_mid = _section_value(state[:3], state[3:])
            if abs(f_mid) < 1e-8 or hi - lo < 1e-15:
                break
            if (f_lo < 0) == (f_mid < 0):
                lo, f_lo = mid, f_mid
            else:
                hi = mid
        state = np.clip(patch(0.5 * (lo + hi)), 0.0, None)
        x = state[:3] / state[:3].sum()
        y = state[3:] / state[3:].sum()
        t_cross = traj.ts[k] + 0.5 * (lo + hi) * h
        points.append(_make_point(t_cross, x, y, 1 if s1 > s0 else -1))
    return PoincareSection(points=tuple(points), degenerate=False)


def _make_point(t, x, y, direction):
    return SectionPoint(
        t=float(t),
        coords=(float(x[0]), float(x[1]), float(y[0]), float(y[1])),
        direction=int(direction),
    )


def grid_occupancy(section: PoincareSection, bins: int = 50) -> int:
    """Number of occupied cells of a bins x bins grid over (x1, y1)."""
    if bins < 1:
        raise BoundsError(f"bins must be >= 1, got {bins}")
    if not section.points:
        return 0
    x1 = [p.coords[0] for p in section.points]
    y1 = [p.coords[2] for p in section.points]
    hist, _, _ = np.histogram2d(x1, y1, bins=bins, range=[[0, 1], [0, 1]])
    return int(np.count_nonzero(hist))


# ---------------------------------------------------------------------------
# residence times near pure strategies


def residence_times(traj: Trajectory, threshold: float) -> ResidenceReport:
    """Episodes where one row-player strategy holds more than threshold.

    An episode opens at the first sample with max(x) > threshold and
    closes when that component drops back below (or the corner
    changes); timing is at sample resolution.
    """
    if not 0.5 < threshold < 1.0:
        raise BoundsError("threshold must lie strictly between 0.5 and 1")
    corners = np.argmax(traj.xs, axis=1)
    above = traj.xs[np.arange(traj.ts.size), corners] > threshold
    episodes = []
    open_corner = None
    entry = 0.0
    for k in range(traj.ts.size):
        c = int(corners[k]) if above[k] else None
        if c == open_corner:
            continue
        if open_corner is not None:
            episodes.append(
                Episode(
                    corner=open_corner,
                    entry_t=float(entry),
                    duration=float(traj.ts[k] - entry),
                )
            )
        open_corner = c
        entry = traj.ts[k]
    if open_corner is not None:
        episodes.append(
            Episode(
                corner=open_corner,
                entry_t=float(entry),
                duration=float(traj.ts[-1] - entry),
            )
        )
    return ResidenceReport(episodes=tuple(episodes), threshold=float(threshold))


def duration_trend(report: ResidenceReport):
    """Linear fit of episode duration against episode index.

    Returns (slope, r_squared); the attracting-cycle regime shows a
    clear positive slope with high r_squared while transient chaos
    scatters.
    """
    if len(report.episodes) < 3:
        raise DomainError("need at least 3 episodes for a trend")
    durations = [e.duration for e in report.episodes]
    fit = linregress(range(len(durations)), durations)
    return float(fit.slope), float(fit.rvalue**2)
