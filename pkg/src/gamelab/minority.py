"""The minority game: inductive agents competing to be on the rare side.

N agents (N odd, so a strict minority always exists) each hold s lookup
tables mapping the last m popularity bits to a choice, 0 for side A and
1 for side B.  Every step each agent plays its currently best table,
"best" meaning the highest virtual score: tables are scored +1 whenever
their prediction matched the minority side, whether or not they were
played.  Real payoff goes to the agents that actually ended up in the
minority.  The popularity bit of the step (0 if A was more popular,
1 if B) is shifted into the shared history window.

Randomness is consumed in a documented order so runs are reproducible
bit for bit: first the full table block, agent-major (shape
(n_agents, s, 2^m), C order), then m initial history bits pushed oldest
first, then one (n_agents, s) uniform block per step for tie-breaking.
History integers keep the most recent bit in the least significant
position.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoundsError, DomainError

MAX_MEMORY_BITS = 16
LOW_SUPPORT = 30


@dataclass(frozen=True)
class StrategyTable:
    """One lookup table: outputs[h] is the choice given history h."""

    m: int
    outputs: np.ndarray

    def __post_init__(self):
        outputs = np.asarray(self.outputs, dtype=np.uint8)
        if not 1 <= self.m <= MAX_MEMORY_BITS:
            raise BoundsError(f"m must be in 1..{MAX_MEMORY_BITS}, got {self.m}")
        if outputs.shape != (2**self.m,):
            raise DomainError(
                f"outputs must have length 2^{self.m}={2 ** self.m}, "
                f"got shape {outputs.shape}"
            )
        if np.any(outputs > 1):
            raise DomainError("outputs must be bits")
        outputs.flags.writeable = False
        object.__setattr__(self, "outputs", outputs)


@dataclass(frozen=True)
class Agent:
    """Read view of one agent's strategies and book-keeping."""

    strategies: tuple
    virtual_scores: np.ndarray
    last_played: int

    def __post_init__(self):
        if len(self.strategies) < 1:
            raise DomainError("an agent needs at least one strategy")
        ms = {st.m for st in self.strategies}
        if len(ms) != 1:
            raise DomainError("all strategies of an agent must share m")


@dataclass(frozen=True)
class MinorityGameConfig:
    n_agents: int
    m: int
    s: int = 2
    t_steps: int = 10000
    seed: int = 0

    def __post_init__(self):
        if self.n_agents < 1 or self.n_agents % 2 == 0:
            raise DomainError(
                f"n_agents must be odd and positive for a strict minority, "
                f"got {self.n_agents}"
            )
        if not 1 <= self.m <= MAX_MEMORY_BITS:
            raise BoundsError(f"m must be in 1..{MAX_MEMORY_BITS}, got {self.m}")
        if self.s < 1:
            raise BoundsError(f"s must be >= 1, got {self.s}")
        if self.t_steps < 1:
            raise BoundsError(f"t_steps must be >= 1, got {self.t_steps}")


@dataclass(frozen=True)
class GameRecord:
    """Attendance and outcome series of one run.

    attendance counts the agents that chose side A each step;
    minority_bits is 1 exactly when A was the more popular side;
    histories holds the m-bit window integer fed to the tables at each
    step (None for synthetic records).
    """

    n_agents: int
    attendance: np.ndarray
    minority_bits: np.ndarray
    histories: np.ndarray | None = None

    def __post_init__(self):
        att = np.asarray(self.attendance, dtype=np.int64)
        mins = np.asarray(self.minority_bits, dtype=np.uint8)
        if att.shape != mins.shape:
            raise DomainError("attendance and minority_bits must align")
        if np.any(att < 0) or np.any(att > self.n_agents):
            raise DomainError("attendance out of 0..n_agents")
        if np.any((2 * att > self.n_agents) != (mins == 1)):
            raise DomainError("minority_bits inconsistent with attendance")
        att.flags.writeable = False
        mins.flags.writeable = False
        object.__setattr__(self, "attendance", att)
        object.__setattr__(self, "minority_bits", mins)
        if self.histories is not None:
            h = np.asarray(self.histories, dtype=np.int64)
            h.flags.writeable = False
            object.__setattr__(self, "histories", h)

    @property
    def popular_bits(self) -> np.ndarray:
        return (1 - self.minority_bits).astype(np.uint8)


class Population:
    """Mutable state of all agents, stored as stacked arrays."""

    def __init__(self, tables: np.ndarray):
        if tables.ndim != 3:
            raise DomainError("tables must have shape (n_agents, s, 2^m)")
        self.tables = tables.astype(np.uint8)
        self.n_agents, self.s, width = tables.shape
        self.m = int(width).bit_length() - 1
        if 2**self.m != width:
            raise DomainError(f"table width {width} is not a power of two")
        self.scores = np.zeros((self.n_agents, self.s), dtype=np.int64)
        self.real_payoffs = np.zeros(self.n_agents, dtype=np.int64)
        self.last_played = np.zeros(self.n_agents, dtype=np.int64)

    def agent(self, i: int) -> Agent:
        strategies = tuple(
            StrategyTable(m=self.m, outputs=self.tables[i, k])
            for k in range(self.s)
        )
        return Agent(
            strategies=strategies,
            virtual_scores=self.scores[i].copy(),
            last_played=int(self.last_played[i]),
        )


def random_strategy(m: int, rng: np.random.Generator) -> StrategyTable:
    """Draw a table uniformly from the 2^(2^m) possible ones."""
    if not 1 <= m <= MAX_MEMORY_BITS:
        raise BoundsError(f"m must be in 1..{MAX_MEMORY_BITS}, got {m}")
    return StrategyTable(m=m, outputs=rng.integers(0, 2, size=2**m, dtype=np.uint8))


def build_population(n_agents: int, m: int, s: int, rng: np.random.Generator) -> Population:
    """Draw every agent's tables in one agent-major block."""
    return Population(rng.integers(0, 2, size=(n_agents, s, 2**m), dtype=np.uint8))


def initial_history(m: int, rng: np.random.Generator) -> int:
    """m random bits pushed oldest-first into the window integer."""
    h = 0
    for b in rng.integers(0, 2, size=m):
        h = (h << 1) | int(b)
    return h


def step(pop: Population, history: int, rng: np.random.Generator):
    """Advance the game one step; returns (new_history, attendance, minority_bit).

    Each agent plays its highest-scoring table's prediction for the
    current history, ties broken uniformly at random each step.  All
    tables are then scored against the realized minority bit and the
    winning agents credited.
    """
    preds = pop.tables[:, :, history]
    # adding U(0,1) noise breaks ties uniformly without disturbing the
    # argmax whenever integer scores differ
    played = np.argmax(pop.scores + rng.random((pop.n_agents, pop.s)), axis=1)
    bits = preds[np.arange(pop.n_agents), played]
    attendance = int(pop.n_agents - bits.sum())
    popular_bit = 0 if 2 * attendance > pop.n_agents else 1
    minority_bit = 1 - popular_bit
    pop.scores += preds == minority_bit
    pop.real_payoffs += bits == minority_bit
    pop.last_played = played
    new_history = ((history << 1) | popular_bit) & (2**pop.m - 1)
    return new_history, attendance, minority_bit


def run_full(config: MinorityGameConfig):
    """Run a full game; returns (GameRecord, Population)."""
    rng = np.random.default_rng(config.seed)
    pop = build_population(config.n_agents, config.m, config.s, rng)
    history = initial_history(config.m, rng)
    attendance = np.empty(config.t_steps, dtype=np.int64)
    minority_bits = np.empty(config.t_steps, dtype=np.uint8)
    histories = np.empty(config.t_steps, dtype=np.int64)
    for t in range(config.t_steps):
        histories[t] = history
        history, attendance[t], minority_bits[t] = step(pop, history, rng)
    record = GameRecord(
        n_agents=config.n_agents,
        attendance=attendance,
        minority_bits=minority_bits,
        histories=histories,
    )
    return record, pop


def run(config: MinorityGameConfig) -> GameRecord:
    """Seed-deterministic game run."""
    return run_full(config)[0]


def attendance_sigma(record: GameRecord, discard: int = 0) -> float:
    """Sample standard deviation of attendance after a discard window."""
    kept = record.attendance[discard:]
    if kept.size < 100:
        raise DomainError(f"need >= 100 steps after discard, have {kept.size}")
    return float(np.std(kept, ddof=1))


@dataclass(frozen=True)
class PredictabilityTable:
    """P(next minority bit = 1) conditioned on each m_probe-bit history.

    Entries whose history occurred fewer than 30 times are flagged
    low_support; flatness is the largest deviation from 1/2 among the
    well-supported entries (nan if there are none).
    """

    m_probe: int
    probs: np.ndarray
    counts: np.ndarray
    low_support: np.ndarray
    flatness: float = field(init=False)

    def __post_init__(self):
        for name in ("probs", "counts", "low_support"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        good = ~self.low_support
        flat = float(np.max(np.abs(self.probs[good] - 0.5))) if good.any() else float("nan")
        object.__setattr__(self, "flatness", flat)


def predictability(record: GameRecord, m_probe: int) -> PredictabilityTable:
    """Conditional next-minority-bit frequencies over popularity windows.

    Windows use the same encoding as the game's own history integers
    (most recent bit least significant), so probing a record at
    m_probe = m asks exactly the question the agents' tables answer.
    """
    if not 1 <= m_probe <= MAX_MEMORY_BITS:
        raise BoundsError(f"m_probe must be in 1..{MAX_MEMORY_BITS}, got {m_probe}")
    pop_bits = record.popular_bits
    n = pop_bits.size
    counts = np.zeros(2**m_probe, dtype=np.int64)
    ones = np.zeros(2**m_probe, dtype=np.int64)
    if n > m_probe:
        windows = np.zeros(n - m_probe, dtype=np.int64)
        for k in range(m_probe):
            windows = (windows << 1) | pop_bits[k : k + n - m_probe]
        nxt = record.minority_bits[m_probe:]
        np.add.at(counts, windows, 1)
        np.add.at(ones, windows, nxt)
    with np.errstate(invalid="ignore"):
        probs = np.where(counts > 0, ones / np.maximum(counts, 1), np.nan)
    return PredictabilityTable(
        m_probe=m_probe,
        probs=probs,
        counts=counts,
        low_support=counts < LOW_SUPPORT,
    )


@dataclass(frozen=True)
class SweepRow:
    m: int
    sigma_mean: float
    sigma_stderr: float
    n_seeds: int


@dataclass(frozen=True)
class SweepResult:
    rows: tuple

    @property
    def argmin_m(self) -> int:
        best = min(self.rows, key=lambda r: r.sigma_mean)
        return best.m


def sigma_vs_m_sweep(
    n_agents: int,
    s: int,
    m_list,
    t_steps: int,
    seeds,
    discard: int | None = None,
) -> SweepResult:
    """Volatility of attendance as a function of memory length.

    Runs every (m, seed) pair and aggregates per-m mean and standard
    error.  At least 5 seeds are required so the error bars mean
    something.
    """
    seeds = list(seeds)
    if len(seeds) < 5:
        raise DomainError(f"need >= 5 seeds for error bars, got {len(seeds)}")
    if discard is None:
        discard = t_steps // 10
    rows = []
    for m in m_list:
        sigmas = [
            attendance_sigma(
                run(MinorityGameConfig(n_agents=n_agents, m=m, s=s,
                                       t_steps=t_steps, seed=seed)),
                discard=discard,
            )
            for seed in seeds
        ]
        sigmas = np.array(sigmas)
        rows.append(
            SweepRow(
                m=int(m),
                sigma_mean=float(sigmas.mean()),
                sigma_stderr=float(sigmas.std(ddof=1) / np.sqrt(len(seeds))),
                n_seeds=len(seeds),
            )
        )
    return SweepResult(rows=tuple(rows))
