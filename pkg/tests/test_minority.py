import numpy as np
import pytest

from gamelab.errors import BoundsError, DomainError
from gamelab.minority import (
    GameRecord,
    MinorityGameConfig,
    Population,
    StrategyTable,
    attendance_sigma,
    build_population,
    predictability,
    random_strategy,
    run,
    run_full,
    sigma_vs_m_sweep,
    step,
)


def coin_record(n_steps, n_agents=101, seed=123):
    """Synthetic i.i.d. record: attendance binomial, no strategy feedback."""
    rng = np.random.default_rng(seed)
    att = rng.binomial(n_agents, 0.5, size=n_steps)
    return GameRecord(n_agents=n_agents, attendance=att,
                      minority_bits=(2 * att > n_agents).astype(np.uint8))


class TestConfigValidation:
    def test_even_n_rejected(self):
        with pytest.raises(DomainError):
            MinorityGameConfig(n_agents=100, m=2)

    def test_memory_bounds(self):
        with pytest.raises(BoundsError):
            MinorityGameConfig(n_agents=101, m=0)
        with pytest.raises(BoundsError):
            MinorityGameConfig(n_agents=101, m=17)

    def test_strategy_count_bound(self):
        with pytest.raises(BoundsError):
            MinorityGameConfig(n_agents=101, m=2, s=0)


class TestStrategyTable:
    def test_random_strategy_shape(self):
        rng = np.random.default_rng(0)
        st = random_strategy(3, rng)
        assert st.outputs.shape == (8,)
        assert set(np.unique(st.outputs)) <= {0, 1}

    def test_wrong_length_rejected(self):
        with pytest.raises(DomainError):
            StrategyTable(m=2, outputs=np.zeros(3, dtype=np.uint8))

    def test_memory_bounds(self):
        rng = np.random.default_rng(0)
        with pytest.raises(BoundsError):
            random_strategy(0, rng)


class TestHandTraceFixture:
    """Frozen 3-agent, 1-bit, single-strategy game, seed 7, 5 steps.

    Traced by hand from the drawn tables: agents 0 and 2 map history
    1 -> 0 and agent 1 maps 1 -> 1, while all three map 0 -> 1.  From
    the initial history bit 1 the play oscillates: at h=1 the choices
    are (0,1,0), side A is popular, the minority bit is 1 and agent 1
    alone wins; the popular bit 0 becomes the next history, where all
    three choose B, attendance is 0, the minority bit is 0 and nobody
    wins.  Every odd step repeats the first pattern, every even step
    the second.
    """

    EXPECTED_TABLES = [[1, 0], [1, 1], [1, 0]]
    EXPECTED_HISTORIES = [1, 0, 1, 0, 1]
    EXPECTED_ATTENDANCE = [2, 0, 2, 0, 2]
    EXPECTED_MINORITY = [1, 0, 1, 0, 1]
    EXPECTED_SCORES = [0, 3, 0]
    EXPECTED_REAL = [0, 3, 0]

    def test_fixture_matches_exactly(self):
        cfg = MinorityGameConfig(n_agents=3, m=1, s=1, t_steps=5, seed=7)
        record, pop = run_full(cfg)
        assert pop.tables[:, 0, :].tolist() == self.EXPECTED_TABLES
        assert record.histories.tolist() == self.EXPECTED_HISTORIES
        assert record.attendance.tolist() == self.EXPECTED_ATTENDANCE
        assert record.minority_bits.tolist() == self.EXPECTED_MINORITY
        assert pop.scores.ravel().tolist() == self.EXPECTED_SCORES
        assert pop.real_payoffs.tolist() == self.EXPECTED_REAL


class TestStepInvariants:
    def test_minority_side_strictly_smaller(self):
        rng = np.random.default_rng(11)
        pop = build_population(11, 2, 2, rng)
        history = 0
        for _ in range(50):
            history, attendance, minority_bit = step(pop, history, rng)
            minority_size = attendance if minority_bit == 0 else 11 - attendance
            assert minority_size <= 5

    def test_real_payoff_goes_to_minority_only(self):
        rng = np.random.default_rng(2)
        pop = build_population(5, 1, 2, rng)
        before = pop.real_payoffs.copy()
        history, attendance, minority_bit = step(pop, 0, rng)
        gained = pop.real_payoffs - before
        winners = int(gained.sum())
        assert winners == (attendance if minority_bit == 0 else 5 - attendance)
        assert set(np.unique(gained)) <= {0, 1}

    def test_single_agent_never_wins(self):
        # with one agent the chosen side is popular by definition, so
        # the strict minority side is always the empty one
        record, pop = run_full(MinorityGameConfig(n_agents=1, m=1, s=2,
                                                  t_steps=50, seed=0))
        assert set(np.unique(record.attendance)) <= {0, 1}
        assert pop.real_payoffs.tolist() == [0]

    def test_virtual_scores_track_all_strategies(self):
        # two agents given identical tables must end with identical
        # virtual scores no matter what they actually played
        rng = np.random.default_rng(9)
        pop = build_population(3, 2, 2, rng)
        pop.tables[1] = pop.tables[0]
        pop.scores[:] = 0
        history = 1
        for _ in range(30):
            history, _, _ = step(pop, history, rng)
        assert pop.scores[0].tolist() == pop.scores[1].tolist()


class TestRecordValidation:
    def test_attendance_bounds_checked(self):
        with pytest.raises(DomainError):
            GameRecord(n_agents=3, attendance=np.array([4]),
                       minority_bits=np.array([1], dtype=np.uint8))

    def test_consistency_checked(self):
        with pytest.raises(DomainError):
            GameRecord(n_agents=3, attendance=np.array([2]),
                       minority_bits=np.array([0], dtype=np.uint8))


class TestAperiodicity:
    def test_no_short_period_when_s_2(self):
        record = run(MinorityGameConfig(n_agents=11, m=3, s=2,
                                        t_steps=10000, seed=4))
        bits = record.minority_bits
        for period in range(1, 101):
            assert np.any(bits[period:] != bits[:-period]), \
                f"minority bits repeat with period {period}"


class TestSigma:
    def test_needs_100_samples(self):
        record = run(MinorityGameConfig(n_agents=11, m=2, s=2,
                                        t_steps=150, seed=0))
        with pytest.raises(DomainError):
            attendance_sigma(record, discard=100)

    def test_matches_numpy_ddof1(self):
        record = run(MinorityGameConfig(n_agents=11, m=2, s=2,
                                        t_steps=500, seed=0))
        assert attendance_sigma(record) == pytest.approx(
            np.std(record.attendance, ddof=1))


class TestPredictability:
    def test_coin_record_is_flat(self):
        table = predictability(coin_record(40000), m_probe=2)
        assert not table.low_support.any()
        assert table.flatness < 0.03
        assert np.all(np.abs(table.probs - 0.5) < 0.03)

    def test_window_encoding_most_recent_lsb(self):
        # popular bits 0,1 then minority 1: window int is 0b01 = 1
        record = GameRecord(
            n_agents=3,
            attendance=np.array([2, 0, 0]),
            minority_bits=np.array([1, 0, 0], dtype=np.uint8),
        )
        table = predictability(record, m_probe=2)
        assert table.counts.tolist() == [0, 1, 0, 0]
        assert table.probs[1] == 0.0

    def test_low_support_flagged_and_excluded(self):
        table = predictability(coin_record(200), m_probe=6)
        assert table.low_support.any()

    def test_probe_bounds(self):
        with pytest.raises(BoundsError):
            predictability(coin_record(200), m_probe=0)


class TestSweep:
    def test_requires_five_seeds(self):
        with pytest.raises(DomainError):
            sigma_vs_m_sweep(11, 2, [1, 2], 300, seeds=range(4))

    def test_rows_and_argmin(self):
        result = sigma_vs_m_sweep(11, 2, [1, 2, 3], 400, seeds=range(5))
        assert [r.m for r in result.rows] == [1, 2, 3]
        assert all(r.n_seeds == 5 for r in result.rows)
        assert result.argmin_m in (1, 2, 3)


class TestDeterminism:
    def test_same_seed_same_record(self):
        cfg = MinorityGameConfig(n_agents=21, m=3, s=2, t_steps=400, seed=33)
        a = run(cfg)
        b = run(cfg)
        assert np.array_equal(a.attendance, b.attendance)
        assert np.array_equal(a.minority_bits, b.minority_bits)
        assert np.array_equal(a.histories, b.histories)

    def test_different_seeds_differ(self):
        a = run(MinorityGameConfig(n_agents=21, m=3, s=2, t_steps=400, seed=1))
        b = run(MinorityGameConfig(n_agents=21, m=3, s=2, t_steps=400, seed=2))
        assert not np.array_equal(a.attendance, b.attendance)
