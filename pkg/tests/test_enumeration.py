from fractions import Fraction

import numpy as np
import pytest

from gamelab.enumeration import (
    Equilibrium,
    RationalGame,
    enumerate_equilibria,
    exact_is_nash,
    lemke_howson,
    random_integer_game,
    random_nondegenerate_game,
    report_to_json,
    to_fraction,
    verify_counting_laws,
)
from gamelab.errors import BoundsError, DegeneracyError, DomainError, SizeError
from gamelab.games import RpsParams, build_generalized_rps, identity_coordination_game

F = Fraction


def rational_identity(n):
    return RationalGame.from_bimatrix(identity_coordination_game(n))


def rational_rps(ex, ey):
    return RationalGame.from_bimatrix(
        build_generalized_rps(RpsParams(eps_x=ex, eps_y=ey))
    )


class TestToFraction:
    def test_exact_conversions(self):
        assert to_fraction(3) == F(3)
        assert to_fraction("2/7") == F(2, 7)
        assert to_fraction(0.5) == F(1, 2)
        assert to_fraction(0.125) == F(1, 8)

    def test_unrecoverable_float_rejected(self):
        # float(1/3) is not the float of any small-denominator ratio
        with pytest.raises(DomainError):
            to_fraction(np.float64(1.0) / 3.0 + 1e-12)

    def test_third_as_float_is_recoverable(self):
        # 1/3 rounds to a float that limit_denominator maps back to 1/3,
        # which round-trips to the identical float, so it is accepted
        assert to_fraction(1.0 / 3.0) == F(1, 3)


class TestIdentityCounts:
    def test_identity_2_equilibria_exact(self):
        report = enumerate_equilibria(rational_identity(2))
        assert report.count == 3
        profiles = {(e.x, e.y) for e in report.equilibria}
        assert ((F(1), F(0)), (F(1), F(0))) in profiles
        assert ((F(0), F(1)), (F(0), F(1))) in profiles
        assert ((F(1, 2), F(1, 2)), (F(1, 2), F(1, 2))) in profiles

    def test_identity_3_count(self):
        report = enumerate_equilibria(rational_identity(3))
        assert report.count == 7
        assert report.pure_count == 3

    def test_mixed_payoffs(self):
        report = enumerate_equilibria(rational_identity(2))
        interior = [e for e in report.equilibria if not e.is_pure][0]
        assert interior.payoff_1 == F(1, 2)
        assert interior.payoff_2 == F(1, 2)


class TestRpsEnumeration:
    def test_unique_uniform_equilibrium(self):
        report = enumerate_equilibria(rational_rps(0.0, 0.0))
        assert report.count == 1
        eq = report.equilibria[0]
        assert eq.x == (F(1, 3),) * 3
        assert eq.y == (F(1, 3),) * 3
        assert not report.degenerate

    def test_uniform_across_eps(self):
        report = enumerate_equilibria(rational_rps(0.5, -0.25))
        assert report.count == 1
        assert report.equilibria[0].x == (F(1, 3),) * 3


class TestOrderingAndShape:
    def test_sorted_lexicographically(self):
        report = enumerate_equilibria(rational_identity(3))
        keys = [(e.support_x, e.support_y, e.x) for e in report.equilibria]
        assert keys == sorted(keys)

    def test_size_budget(self):
        rng = np.random.default_rng(0)
        big = random_integer_game(7, 7, rng)
        with pytest.raises(SizeError):
            enumerate_equilibria(big)

    def test_rectangular_game(self):
        # 2x3 matching-pennies-like game still enumerates
        game = RationalGame(
            payoff_a=((F(1), F(-1), F(0)), (F(-1), F(1), F(0))),
            payoff_b=((F(-1), F(1), F(0)), (F(1), F(-1), F(0))),
        )
        report = enumerate_equilibria(game)
        assert report.count >= 1
        for eq in report.equilibria:
            assert exact_is_nash(game, eq.x, eq.y)


class TestDegeneracy:
    def test_indifferent_game_flagged(self):
        flat = RationalGame(
            payoff_a=((F(1), F(1)), (F(1), F(1))),
            payoff_b=((F(1), F(1)), (F(1), F(1))),
        )
        report = enumerate_equilibria(flat)
        assert report.degenerate

    def test_laws_not_applicable_when_degenerate(self):
        flat = RationalGame(
            payoff_a=((F(1), F(1)), (F(1), F(1))),
            payoff_b=((F(1), F(1)), (F(1), F(1))),
        )
        report = enumerate_equilibria(flat)
        for law in verify_counting_laws(report, 2):
            assert law.passed is None
            assert not law.applicable


class TestCountingLaws:
    def test_laws_pass_on_identity(self):
        report = enumerate_equilibria(rational_identity(3))
        for law in verify_counting_laws(report, 3):
            assert law.applicable
            assert law.passed

    def test_count_bound_unproven_above_4(self):
        report = enumerate_equilibria(rational_identity(3))
        laws = {law.name: law for law in verify_counting_laws(report, 5)}
        assert not laws["count_bound"].applicable
        assert laws["oddness"].applicable


class TestLemkeHowson:
    def test_rps_all_labels_reach_uniform(self):
        game = rational_rps(0.0, 0.0)
        for label in range(1, 7):
            eq = lemke_howson(game, label)
            assert eq.x == (F(1, 3),) * 3
            assert eq.y == (F(1, 3),) * 3

    def test_label_out_of_range(self):
        with pytest.raises(BoundsError):
            lemke_howson(rational_rps(0.0, 0.0), 0)
        with pytest.raises(BoundsError):
            lemke_howson(rational_rps(0.0, 0.0), 7)

    def test_member_of_enumerated_set(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            game, report = random_nondegenerate_game(3, 3, rng)
            found = {(e.x, e.y) for e in report.equilibria}
            eq = lemke_howson(game, 1)
            assert (eq.x, eq.y) in found

    def test_degenerate_tie_detected(self):
        # both rows of A tie everywhere, forcing a ratio-test tie
        game = RationalGame(
            payoff_a=((F(1), F(1)), (F(1), F(1))),
            payoff_b=((F(1), F(2)), (F(2), F(1))),
        )
        with pytest.raises(DegeneracyError):
            lemke_howson(game, 2)


class TestRandomGames:
    def test_random_nondegenerate_is_nondegenerate(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            game, report = random_nondegenerate_game(2, 2, rng)
            assert not report.degenerate
            assert report.count % 2 == 1

    def test_every_equilibrium_verifies(self):
        rng = np.random.default_rng(3)
        game, report = random_nondegenerate_game(3, 3, rng)
        for eq in report.equilibria:
            assert exact_is_nash(game, eq.x, eq.y)


class TestReportJson:
    def test_fractions_serialized_as_strings(self):
        report = enumerate_equilibria(rational_identity(2))
        text = report_to_json(report)
        assert '"1/2"' in text
        assert '"count": 3' in text
