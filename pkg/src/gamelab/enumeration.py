"""Exact Nash equilibrium enumeration for small bimatrix games.

Everything here runs in rational arithmetic.  Floating point would
misclassify near-singular indifference systems and fabricate or destroy
equilibria, which matters because the counting laws this module checks
(oddness, the 2^n - 1 and 4x4 bounds, the pure-equilibrium bound) hold
only for nondegenerate games, and degeneracy is a measure-zero knife
edge.

Two independent algorithms are provided: support enumeration, which
finds every equilibrium of a nondegenerate game, and Lemke-Howson
complementary pivoting, which follows a path to a single equilibrium.
Each serves as an oracle for the other.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .errors import BoundsError, DegeneracyError, DomainError, SizeError
from .games import BimatrixGame

MAX_EXACT_DIM = 6
# floats are accepted only when the nearest fraction with denominator
# below this bound reproduces them exactly (terminating decimals, ratios)
FLOAT_DENOMINATOR_LIMIT = 10**6


def to_fraction(value) -> Fraction:
    """Convert a payoff entry to an exact rational.

    Ints, Fractions and "p/q" strings convert exactly.  A float is
    accepted only if the closest rational with denominator <= 10^6
    round-trips to the same float, i.e. the intended ratio is
    recoverable without guessing.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        frac = Fraction(v).limit_denominator(FLOAT_DENOMINATOR_LIMIT)
        if float(frac) == v:
            return frac
        raise DomainError(
            f"float {v!r} is not exactly a ratio with denominator <= "
            f"{FLOAT_DENOMINATOR_LIMIT}; pass a Fraction or 'p/q' string"
        )
    raise DomainError(f"cannot convert {value!r} to a rational payoff")


@dataclass(frozen=True)
class RationalGame:
    """A bimatrix game with exact rational payoffs.

    payoff_b follows the same cell convention as BimatrixGame:
    entry (i, j) is the column player's payoff at that cell.
    """

    payoff_a: tuple
    payoff_b: tuple
    rows: int = field(init=False)
    cols: int = field(init=False)

    def __post_init__(self):
        a = tuple(tuple(to_fraction(v) for v in row) for row in self.payoff_a)
        b = tuple(tuple(to_fraction(v) for v in row) for row in self.payoff_b)
        if len(a) == 0 or len(a) != len(b):
            raise DomainError("payoff matrices must be nonempty and congruent")
        width = len(a[0])
        for row in a + b:
            if len(row) != width:
                raise DomainError("payoff matrices must be rectangular")
        object.__setattr__(self, "payoff_a", a)
        object.__setattr__(self, "payoff_b", b)
        object.__setattr__(self, "rows", len(a))
        object.__setattr__(self, "cols", width)

    @classmethod
    def from_bimatrix(cls, game: BimatrixGame) -> "RationalGame":
        return cls(payoff_a=game.payoff_a.tolist(), payoff_b=game.payoff_b.tolist())

    def to_bimatrix(self) -> BimatrixGame:
        a = [[float(v) for v in row] for row in self.payoff_a]
        b = [[float(v) for v in row] for row in self.payoff_b]
        return BimatrixGame(payoff_a=a, payoff_b=b)


@dataclass(frozen=True)
class Equilibrium:
    """One Nash equilibrium with exact coordinates.

    Supports are the index sets of the strictly positive components;
    is_pure means both supports are singletons.
    """

    x: tuple
    y: tuple
    support_x: tuple = field(init=False)
    support_y: tuple = field(init=False)
    payoff_1: Fraction = Fraction(0)
    payoff_2: Fraction = Fraction(0)
    is_pure: bool = field(init=False)

    def __post_init__(self):
        x = tuple(Fraction(v) for v in self.x)
        y = tuple(Fraction(v) for v in self.y)
        sx = tuple(i for i, v in enumerate(x) if v > 0)
        sy = tuple(j for j, v in enumerate(y) if v > 0)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "support_x", sx)
        object.__setattr__(self, "support_y", sy)
        object.__setattr__(self, "is_pure", len(sx) == 1 and len(sy) == 1)


@dataclass(frozen=True)
class EnumerationReport:
    """All equilibria found plus the counting statistics the laws use."""

    equilibria: tuple
    count: int = field(init=False)
    pure_count: int = field(init=False)
    degenerate: bool = False

    def __post_init__(self):
        eqs = tuple(self.equilibria)
        object.__setattr__(self, "equilibria", eqs)
        object.__setattr__(self, "count", len(eqs))
        object.__setattr__(self, "pure_count", sum(e.is_pure for e in eqs))


@dataclass(frozen=True)
class LawCheck:
    """Outcome of one counting-law check.

    passed is None when the law does not apply (degenerate game, or a
    size regime where the bound is unproven).
    """

    name: str
    applicable: bool
    passed: bool | None
    detail: str


_UNIQUE, _NONE, _CONTINUUM = range(3)


def _solve_exact(matrix, rhs):
    """Gauss-eliminate an exact linear system.

    Returns (_UNIQUE, solution), (_NONE, None) for an inconsistent
    system, or (_CONTINUUM, None) for a consistent rank-deficient one.
    """
    n_rows = len(matrix)
    n_cols = len(matrix[0])
    aug = [list(row) + [r] for row, r in zip(matrix, rhs)]
    pivot_cols = []
    r = 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, n_rows) if aug[i][c] != 0), None)
        if pivot is None:
            continue
        aug[r], aug[pivot] = aug[pivot], aug[r]
        inv = 1 / aug[r][c]
        aug[r] = [v * inv for v in aug[r]]
        for i in range(n_rows):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
        pivot_cols.append(c)
        r += 1
        if r == n_rows:
            break
    for i in range(r, n_rows):
        if aug[i][n_cols] != 0:
            return _NONE, None
    if r < n_cols:
        return _CONTINUUM, None
    sol = [Fraction(0)] * n_cols
    for i, c in enumerate(pivot_cols):
        sol[c] = aug[i][n_cols]
    return _UNIQUE, sol


def _indifference_solve(payoff, own_support, other_support):
    """Mixed strategy for the *other* player equalizing own payoffs.

    Solves for q supported on other_support such that every pure
    strategy in own_support earns the same value w, returning
    (status, q_full, w).  payoff[i][j] must be the own player's payoff
    when it plays i and the other plays j.
    """
    k = len(own_support)
    # unknowns: q_j for j in other_support, then w
    matrix = []
    rhs = []
    for i in own_support:
        matrix.append([payoff[i][j] for j in other_support] + [Fraction(-1)])
        rhs.append(Fraction(0))
    matrix.append([Fraction(1)] * k + [Fraction(0)])
    rhs.append(Fraction(1))
    status, sol = _solve_exact(matrix, rhs)
    if status != _UNIQUE:
        return status, None, None
    q = [Fraction(0)] * len(payoff[0])
    for j, v in zip(other_support, sol[:k]):
        q[j] = v
    return _UNIQUE, q, sol[k]


def _transpose(matrix):
    return tuple(tuple(row[j] for row in matrix) for j in range(len(matrix[0])))


def _dot_matvec(matrix, vec):
    return [sum(a * v for a, v in zip(row, vec)) for row in matrix]


def exact_payoffs(game: RationalGame, x, y):
    """Both players' expected payoffs at (x, y), in exact arithmetic."""
    ay = _dot_matvec(game.payoff_a, y)
    by = _dot_matvec(game.payoff_b, y)
    u1 = sum(xi * v for xi, v in zip(x, ay))
    u2 = sum(xi * v for xi, v in zip(x, by))
    return u1, u2


def exact_is_nash(game: RationalGame, x, y) -> bool:
    """Zero-tolerance best-response check in rational arithmetic."""
    u1, u2 = exact_payoffs(game, x, y)
    ay = _dot_matvec(game.payoff_a, y)
    xb = _dot_matvec(_transpose(game.payoff_b), x)
    return max(ay) <= u1 and max(xb) <= u2


def enumerate_equilibria(game: RationalGame) -> EnumerationReport:
    """Find every Nash equilibrium by exhaustive support enumeration.

    For each pair of equal-size supports the two indifference systems
    are solved exactly; a candidate survives if it is strictly positive
    on its support and no outside pure strategy does better.  The
    degenerate flag is raised when some support system is singular but
    consistent (a continuum of candidates) or when an outside strategy
    exactly ties an equilibrium payoff; in either case the counting
    laws do not apply and the count covers isolated equilibria only.
    """
    if isinstance(game, BimatrixGame):
        game = RationalGame.from_bimatrix(game)
    m, n = game.rows, game.cols
    if m > MAX_EXACT_DIM or n > MAX_EXACT_DIM:
        raise SizeError(
            f"support enumeration budget is {MAX_EXACT_DIM}x{MAX_EXACT_DIM}, "
            f"got {m}x{n}"
        )
    a = game.payoff_a
    bt = _transpose(game.payoff_b)  # bt[j][i]: player 2's payoff for j vs i
    degenerate = False
    found = []
    for k in range(1, min(m, n) + 1):
        for s1 in combinations(range(m), k):
            for s2 in combinations(range(n), k):
                status_y, y, w1 = _indifference_solve(a, s1, s2)
                if status_y == _CONTINUUM:
                    degenerate = True
                    continue
                if status_y == _NONE:
                    continue
                status_x, x, w2 = _indifference_solve(bt, s2, s1)
                if status_x == _CONTINUUM:
                    degenerate = True
                    continue
                if status_x == _NONE:
                    continue
                # zero components collapse to a smaller support pair, where
                # the same equilibrium is found without double counting
                if any(y[j] <= 0 for j in s2) or any(x[i] <= 0 for i in s1):
                    continue
                ay = _dot_matvec(a, y)
                xb = _dot_matvec(bt, x)
                out_rows = [ay[i] for i in range(m) if i not in s1]
                out_cols = [xb[j] for j in range(n) if j not in s2]
                rows_ok = all(v <= w1 for v in out_rows)
                cols_ok = all(v <= w2 for v in out_cols)
                # an exact payoff tie by an unplayed strategy means some
                # mixed strategy has more best replies than its support
                # size: degenerate whether or not the pair is rejected
                if rows_ok and any(v == w1 for v in out_rows):
                    degenerate = True
                if cols_ok and any(v == w2 for v in out_cols):
                    degenerate = True
                if not (rows_ok and cols_ok):
                    continue
                u1, u2 = exact_payoffs(game, x, y)
                found.append(
                    Equilibrium(x=tuple(x), y=tuple(y), payoff_1=u1, payoff_2=u2)
                )
    found.sort(key=lambda e: (e.support_x, e.support_y, e.x))
    return EnumerationReport(equilibria=tuple(found), degenerate=degenerate)


def verify_counting_laws(report: EnumerationReport, n: int) -> list:
    """Check the equilibrium-count theorems against an enumeration.

    n is the square game dimension the bounds refer to.  Laws checked:
    existence (count >= 1), oddness, the 2^n - 1 bound (proven for
    n <= 3), the 4x4 bound of 15, and pure_count <= (count + 1) / 2.
    A degenerate report makes every law not-applicable, and the size
    bounds are skipped outside their proven regimes.
    """
    checks = []

    def add(name, applicable, passed, detail):
        checks.append(
            LawCheck(name=name, applicable=applicable, passed=passed, detail=detail)
        )

    if report.degenerate:
        for name in ("existence", "oddness", "count_bound", "pure_bound"):
            add(name, False, None, "not applicable: degenerate game")
        return checks

    c, p = report.count, report.pure_count
    add("existence", True, c >= 1, f"count={c}")
    add("oddness", True, c % 2 == 1, f"count={c}")
    if n <= 3:
        bound = 2**n - 1
        add("count_bound", True, c <= bound, f"count={c} vs 2^{n}-1={bound}")
    elif n == 4:
        add("count_bound", True, c <= 15, f"count={c} vs 15")
    else:
        add("count_bound", False, None, f"no proven bound tested for n={n}")
    add("pure_bound", True, 2 * p <= c + 1, f"pure={p} vs (count+1)/2={(c + 1) / 2}")
    return checks


# ---------------------------------------------------------------------------
# Lemke-Howson complementary pivoting


class _Tableau:
    """One dictionary of the complementary pivoting scheme.

    Rows express each basic variable as rhs - sum(coeff * nonbasic).
    All arithmetic is exact.
    """

    def __init__(self, basis_vars, entering_vars, matrix):
        # basic[b] = (rhs, {nonbasic var: coeff})
        self.rows = {}
        for bi, bvar in enumerate(basis_vars):
            coeffs = {evar: matrix[bi][ei] for ei, evar in enumerate(entering_vars)}
            self.rows[bvar] = [Fraction(1), coeffs]

    def pivot(self, entering):
        """Bring `entering` into the basis; return the leaving variable."""
        best = None
        tied = []
        for bvar, (rhs, coeffs) in self.rows.items():
            c = coeffs.get(entering, Fraction(0))
            if c > 0:
                ratio = rhs / c
                if best is None or ratio < best:
                    best = ratio
                    tied = [bvar]
                elif ratio == best:
                    tied.append(bvar)
        if best is None:
            raise DegeneracyError(f"no blocking variable for {entering}")
        if len(tied) > 1:
            names = ", ".join(_var_name(v) for v in sorted(tied))
            raise DegeneracyError(f"ratio test tie between basis variables {names}")
        leaving = tied[0]
        rhs, coeffs = self.rows.pop(leaving)
        ce = coeffs.pop(entering)
        # entering = rhs/ce - leaving/ce - sum(coeff/ce * others)
        new_rhs = rhs / ce
        new_coeffs = {v: c / ce for v, c in coeffs.items()}
        new_coeffs[leaving] = 1 / ce
        for bvar, (brhs, bcoeffs) in self.rows.items():
            cb = bcoeffs.pop(entering, Fraction(0))
            if cb == 0:
                continue
            self.rows[bvar][0] = brhs - cb * new_rhs
            for v, c in new_coeffs.items():
                bcoeffs[v] = bcoeffs.get(v, Fraction(0)) - cb * c
        self.rows[entering] = [new_rhs, new_coeffs]
        return leaving

    def value(self, var):
        return self.rows[var][0] if var in self.rows else Fraction(0)


def _var_name(var):
    kind, idx = var
    return f"{kind}{idx + 1}"


def lemke_howson(game: RationalGame, dropped_label: int) -> Equilibrium:
    """Follow one complementary pivoting path to a Nash equilibrium.

    Labels 1..m name the row player's strategies, m+1..m+n the column
    player's.  Starting from the artificial all-slack basis, the
    variable carrying dropped_label enters first and pivoting alternates
    between the two systems until the dropped label leaves, at which
    point the basic solution normalizes to an equilibrium.  A ratio-test
    tie means the game is degenerate for this purpose and raises, naming
    the tied basis variables.
    """
    if isinstance(game, BimatrixGame):
        game = RationalGame.from_bimatrix(game)
    m, n = game.rows, game.cols
    if not 1 <= dropped_label <= m + n:
        raise BoundsError(f"dropped_label must be in 1..{m + n}, got {dropped_label}")
    # positivize so both linear systems have all-positive matrices
    shift_a = 1 - min(min(row) for row in game.payoff_a)
    shift_b = 1 - min(min(row) for row in game.payoff_b)
    a = [[v + shift_a for v in row] for row in game.payoff_a]
    bt = [
        [game.payoff_b[i][j] + shift_b for i in range(m)] for j in range(n)
    ]
    # system I: s_i = 1 - sum_j a[i][j] y_j     (vars s_i label i, y_j label m+j)
    # system II: r_j = 1 - sum_i bt[j][i] x_i   (vars r_j label m+j, x_i label i)
    tab1 = _Tableau(
        [("s", i) for i in range(m)], [("y", j) for j in range(n)], a
    )
    tab2 = _Tableau(
        [("r", j) for j in range(n)], [("x", i) for i in range(m)], bt
    )

    def label(var):
        kind, idx = var
        return idx + 1 if kind in ("x", "s") else m + idx + 1

    def partner(var):
        kind, idx = var
        return {"x": ("s", idx), "s": ("x", idx), "y": ("r", idx), "r": ("y", idx)}[
            kind
        ]

    entering = ("x", dropped_label - 1) if dropped_label <= m else (
        "y", dropped_label - m - 1
    )
    for _ in range(10000):
        tab = tab2 if entering[0] in ("x", "r") else tab1
        leaving = tab.pivot(entering)
        if label(leaving) == dropped_label:
            break
        entering = partner(leaving)
    else:
        raise DegeneracyError("pivoting failed to terminate")
    x_raw = [tab2.value(("x", i)) for i in range(m)]
    y_raw = [tab1.value(("y", j)) for j in range(n)]
    sx, sy = sum(x_raw), sum(y_raw)
    if sx == 0 or sy == 0:
        raise DegeneracyError("pivoting terminated at the artificial equilibrium")
    x = tuple(v / sx for v in x_raw)
    y = tuple(v / sy for v in y_raw)
    u1, u2 = exact_payoffs(game, x, y)
    return Equilibrium(x=x, y=y, payoff_1=u1, payoff_2=u2)


# ---------------------------------------------------------------------------
# sampling and serialization helpers


def random_integer_game(rows, cols, rng, low=-9, high=9) -> RationalGame:
    """Uniform integer-payoff game, the raw material for law sampling."""
    a = rng.integers(low, high + 1, size=(rows, cols))
    b = rng.integers(low, high + 1, size=(rows, cols))
    return RationalGame(payoff_a=a.tolist(), payoff_b=b.tolist())


def random_nondegenerate_game(rows, cols, rng, low=-9, high=9, max_tries=200):
    """Sample integer games until one enumerates as nondegenerate.

    Returns (game, report).  Degeneracy has measure zero in this family
    but does occur at small integer ranges, so rejected draws are simply
    redrawn.
    """
    for _ in range(max_tries):
        game = random_integer_game(rows, cols, rng, low, high)
        report = enumerate_equilibria(game)
        if not report.degenerate:
            return game, report
    raise DegeneracyError(
        f"no nondegenerate {rows}x{cols} game found in {max_tries} draws"
    )


def report_to_json(report: EnumerationReport) -> str:
    """Serialize a report with every rational as a decimal-free string."""
    payload = {
        "count": report.count,
        "pure_count": report.pure_count,
        "degenerate": report.degenerate,
        "equilibria": [
            {
                "x": [str(v) for v in eq.x],
                "y": [str(v) for v in eq.y],
                "payoffs": [str(eq.payoff_1), str(eq.payoff_2)],
            }
            for eq in report.equilibria
        ],
    }
    return json.dumps(payload, indent=2)
