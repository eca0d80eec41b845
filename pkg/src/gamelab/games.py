"""Bimatrix games and static equilibrium checks.

Conventions used throughout the package:

* ``payoff_a[i, j]`` is the row player's payoff when row ``i`` meets
  column ``j``.
* ``payoff_b[i, j]`` is the column player's payoff at the same cell, so
  both matrices are m-by-n and a game is zero-sum exactly when
  ``payoff_a + payoff_b == 0`` entrywise.
* Mixed strategies live on the closed probability simplex.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundsError, DimensionError, DomainError

SIMPLEX_TOL = 1e-12


def _frozen_array(values, dtype=float):
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


def _as_simplex(p, name, tol=SIMPLEX_TOL):
    """Validate p against the simplex and return it exactly normalized."""
    if p.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {p.shape}")
    if np.min(p) < -tol:
        raise DomainError(f"{name} has negative component {np.min(p):.3e}")
    s = float(np.sum(p))
    if abs(s - 1.0) > tol:
        raise DomainError(f"{name} sums to {s!r}, expected 1")
    return np.clip(p, 0.0, None) / np.clip(p, 0.0, None).sum()


@dataclass(frozen=True)
class RpsParams:
    """Parameters of the generalized rock-paper-scissors game.

    eps_x tilts the row player's diagonal, eps_y the column player's.
    Both must lie in [-1, 1]; the pair is zero-sum iff eps_x == -eps_y.
    """

    eps_x: float
    eps_y: float

    def __post_init__(self):
        for name in ("eps_x", "eps_y"):
            v = float(getattr(self, name))
            if not -1.0 <= v <= 1.0:
                raise BoundsError(f"{name}={v} outside [-1, 1]")
            object.__setattr__(self, name, v)

    @property
    def is_zero_sum(self) -> bool:
        return self.eps_x == -self.eps_y


@dataclass(frozen=True)
class BimatrixGame:
    """A two-player game in normal form.

    Both payoff matrices are stored m-by-n and are read-only after
    construction.
    """

    payoff_a: np.ndarray
    payoff_b: np.ndarray
    rows: int = field(init=False)
    cols: int = field(init=False)

    def __post_init__(self):
        a = _frozen_array(self.payoff_a)
        b = _frozen_array(self.payoff_b)
        if a.ndim != 2:
            raise DimensionError(f"payoff_a must be 2-d, got shape {a.shape}")
        if a.shape != b.shape:
            raise DimensionError(
                f"payoff shapes differ: {a.shape} vs {b.shape}"
            )
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise DomainError("payoff entries must be finite")
        object.__setattr__(self, "payoff_a", a)
        object.__setattr__(self, "payoff_b", b)
        object.__setattr__(self, "rows", a.shape[0])
        object.__setattr__(self, "cols", a.shape[1])


@dataclass(frozen=True)
class MixedProfile:
    """A pair of mixed strategies, one per player.

    Construction rejects components below -1e-12 and sums off 1 by more
    than 1e-12, then renormalizes, so downstream code can rely on exact
    unit sums without re-projecting.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = _as_simplex(np.array(self.x, dtype=float), "x")
        y = _as_simplex(np.array(self.y, dtype=float), "y")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


def build_generalized_rps(params: RpsParams) -> BimatrixGame:
    """Construct the 3x3 cyclic game with tilted diagonals.

    The row player's matrix puts eps_x on the diagonal, a loss (-1)
    against the move that beats each row and a win (+1) against the move
    it beats.  The column player's matrix has the same cyclic structure
    with eps_y, expressed in row-major cell order, so eps_y == -eps_x
    recovers the zero-sum game payoff_b == -payoff_a.
    """
    ex, ey = params.eps_x, params.eps_y
    a = [[ex, -1.0, 1.0], [1.0, ex, -1.0], [-1.0, 1.0, ex]]
    b = [[ey, 1.0, -1.0], [-1.0, ey, 1.0], [1.0, -1.0, ey]]
    return BimatrixGame(payoff_a=a, payoff_b=b)


def identity_coordination_game(n: int) -> BimatrixGame:
    """n-by-n pure coordination: both players earn 1 on the diagonal."""
    if n < 1:
        raise BoundsError(f"n must be positive, got {n}")
    eye = np.eye(n)
    return BimatrixGame(payoff_a=eye, payoff_b=eye.copy())


def expected_payoffs(game: BimatrixGame, profile: MixedProfile):
    """Return (u_row, u_col) under the given mixed profile."""
    x, y = profile.x, profile.y
    if x.shape[0] != game.rows or y.shape[0] != game.cols:
        raise DimensionError(
            f"profile shapes ({x.shape[0]}, {y.shape[0]}) do not match "
            f"game ({game.rows}, {game.cols})"
        )
    ua = float(x @ game.payoff_a @ y)
    ub = float(x @ game.payoff_b @ y)
    return ua, ub


def is_nash(game: BimatrixGame, profile: MixedProfile, tol: float = 1e-9) -> bool:
    """True if no pure deviation gains more than tol for either player."""
    if tol < 0:
        raise BoundsError(f"tol must be nonnegative, got {tol}")
    ua, ub = expected_payoffs(game, profile)
    row_best = float(np.max(game.payoff_a @ profile.y))
    col_best = float(np.max(profile.x @ game.payoff_b))
    return row_best <= ua + tol and col_best <= ub + tol


def is_zero_sum(game: BimatrixGame, tol: float = 1e-12) -> bool:
    """True if the payoff matrices cancel entrywise to within tol."""
    return bool(np.max(np.abs(game.payoff_a + game.payoff_b)) <= tol)


def game_to_json(game: BimatrixGame) -> str:
    """Serialize a game to a JSON object with nested payoff lists."""
    return json.dumps(
        {
            "rows": game.rows,
            "cols": game.cols,
            "payoff_a": game.payoff_a.tolist(),
            "payoff_b": game.payoff_b.tolist(),
        }
    )


def game_from_json(text: str) -> BimatrixGame:
    """Inverse of :func:`game_to_json`; validates the declared shape."""
    obj = json.loads(text)
    game = BimatrixGame(payoff_a=obj["payoff_a"], payoff_b=obj["payoff_b"])
    if game.rows != obj["rows"] or game.cols != obj["cols"]:
        raise DimensionError(
            f"declared shape ({obj['rows']}, {obj['cols']}) does not match "
            f"payoff arrays ({game.rows}, {game.cols})"
        )
    return game
