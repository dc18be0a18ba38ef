"""Birth/death proposal mechanics, acceptance ratios and their identities."""
import math

import numpy as np
import pytest

from transjump.birthdeath import (
    BirthDeathSchedule,
    BoDDetail,
    SortedRestriction,
    birth_propose_sorted,
    birth_propose_unsorted,
    bod_log_ratio,
    bod_move_set,
    death_propose,
    legacy_log_ratio,
    pmf_component_proposal,
    schedule_probabilities,
    sorted_log_ratio,
    uniform_component_proposal,
)
from transjump.core import (
    BrokenKernelError,
    ConfigurationError,
    VarDimState,
    rng_stream,
)
from transjump.sinusoid import PriorOnlyTarget, SinusoidPosterior

NEG_INF = float("-inf")


def random_model(rng, n_obs=24, k_max=8):
    y = rng.standard_normal(n_obs)
    return SinusoidPosterior(y, lam=float(rng.uniform(0.5, 6.0)),
                             delta2=float(rng.uniform(1.0, 200.0)), k_max=k_max)


def random_state(rng, k):
    omega = np.sort(rng.uniform(0.1, math.pi - 0.1, size=k))
    return VarDimState(tuple(omega))


class TestScheduleProbabilities:
    def test_birth_full_when_prior_ratio_exceeds_one(self):
        p_b, p_d = schedule_probabilities(0, 32, 5.0, 0.25)
        assert p_b == 0.25
        assert p_d == 0.0

    def test_birth_scaled_by_prior_ratio(self):
        p_b, _ = schedule_probabilities(7, 32, 5.0, 0.25)
        assert p_b == pytest.approx(0.25 * 5.0 / 8.0, rel=1e-15)

    def test_death_zero_at_origin_birth_zero_at_cap(self):
        assert schedule_probabilities(0, 8, 2.0, 0.4)[1] == 0.0
        assert schedule_probabilities(8, 8, 2.0, 0.4)[0] == 0.0

    def test_ratio_identity_every_order(self):
        """p_d(k+1)/p_b(k) = (k+1)/lam for every k below the cap."""
        for lam in (0.7, 2.5, 5.0, 11.0):
            for k in range(32):
                p_b, _ = schedule_probabilities(k, 32, lam, 0.25)
                _, p_d_next = schedule_probabilities(k + 1, 32, lam, 0.25)
                assert p_d_next / p_b == pytest.approx((k + 1) / lam, rel=1e-12)

    def test_mass_left_for_within_model_moves(self):
        for k in range(9):
            p_b, p_d = schedule_probabilities(k, 8, 3.0, 0.5)
            assert p_b + p_d <= 1.0 + 1e-15

    def test_invalid_constants_rejected(self):
        with pytest.raises(ConfigurationError):
            schedule_probabilities(0, 8, 3.0, 0.75)
        with pytest.raises(ConfigurationError):
            schedule_probabilities(0, 8, -1.0, 0.25)
        with pytest.raises(ConfigurationError):
            schedule_probabilities(9, 8, 3.0, 0.25)


class TestBirthProposeUnsorted:
    def test_from_empty_state_single_slot(self):
        rng = rng_stream(30)
        target = PriorOnlyTarget(2.0, 8)
        sched = BirthDeathSchedule.green(2.0, 8)
        out = birth_propose_unsorted(VarDimState(), sched, target, rng)
        assert out.proposed.k == 1
        assert out.detail.index == 0
        assert out.proposed.components == (out.detail.value,)

    def test_insertion_preserves_order_of_others(self):
        rng = rng_stream(31)
        target = PriorOnlyTarget(2.0, 8)
        sched = BirthDeathSchedule.green(2.0, 8)
        x = VarDimState((1.0, 2.0))
        for _ in range(50):
            out = birth_propose_unsorted(x, sched, target, rng)
            d = out.detail
            rest = list(out.proposed.components)
            assert rest.pop(d.index) == d.value
            assert tuple(rest) == x.components

    def test_insertion_slot_uniform(self):
        """Slot counts for k=2 stay within 3-sigma of uniform over 1e5 draws."""
        rng = rng_stream(32)
        target = PriorOnlyTarget(2.0, 8)
        sched = BirthDeathSchedule.green(2.0, 8)
        x = VarDimState((1.0, 2.0))
        n = 100_000
        counts = np.zeros(3)
        for _ in range(n):
            counts[birth_propose_unsorted(x, sched, target, rng).detail.index] += 1
        band = 3.0 * math.sqrt((1 / 3) * (2 / 3) / n)
        assert np.all(np.abs(counts / n - 1 / 3) < band)

    def test_sampler_outside_support_is_hard_error(self):
        bad = uniform_component_proposal(0.0, math.pi)
        bad = type(bad)(sample=lambda rng: 4.0, log_density=bad.log_density, cdf=bad.cdf)
        sched = BirthDeathSchedule(
            p_birth=lambda x: 0.5, p_death=lambda x: 0.5 if x.k else 0.0,
            proposal=bad)
        with pytest.raises(BrokenKernelError):
            birth_propose_unsorted(VarDimState(), sched, PriorOnlyTarget(2.0, 8),
                                   rng_stream(33))


class TestDeathPropose:
    def test_single_component_to_empty(self):
        rng = rng_stream(34)
        target = PriorOnlyTarget(2.0, 8)
        sched = BirthDeathSchedule.green(2.0, 8)
        out = death_propose(VarDimState((0.7,)), sched, target, rng)
        assert out.proposed == VarDimState()
        assert out.detail.value == 0.7

    def test_removal_keeps_others_in_order(self):
        rng = rng_stream(35)
        target = PriorOnlyTarget(2.0, 8)
        sched = BirthDeathSchedule.green(2.0, 8)
        x = VarDimState((1.0, 2.0, 3.0))
        seen = set()
        for _ in range(200):
            out = death_propose(x, sched, target, rng)
            seen.add(out.detail.index)
            expect = list(x.components)
            expect.pop(out.detail.index)
            assert out.proposed.components == tuple(expect)
        assert seen == {0, 1, 2}

    def test_removal_index_uniform(self):
        rng = rng_stream(36)
        target = PriorOnlyTarget(3.0, 8)
        sched = BirthDeathSchedule.green(3.0, 8)
        x = VarDimState((0.5, 1.0, 1.5, 2.0))
        n = 100_000
        counts = np.zeros(4)
        for _ in range(n):
            counts[death_propose(x, sched, target, rng).detail.index] += 1
        band = 3.0 * math.sqrt(0.25 * 0.75 / n)
        assert np.all(np.abs(counts / n - 0.25) < band)

    def test_death_at_empty_state_is_hard_error(self):
        sched = BirthDeathSchedule.green(2.0, 8)
        with pytest.raises(BrokenKernelError):
            death_propose(VarDimState(), sched, PriorOnlyTarget(2.0, 8), rng_stream(37))


class TestBodLogRatio:
    def test_zero_when_everything_balances(self):
        """Equal densities, matched schedule and unit proposal density give ratio 0."""
        class Flat:
            def log_density(self, x):
                return 0.0

        sched = BirthDeathSchedule(
            p_birth=lambda x: 0.3, p_death=lambda x: 0.3 if x.k else 0.0,
            proposal=uniform_component_proposal(0.0, 1.0))  # density 1 on (0,1)
        x = VarDimState((0.5,))
        x_new = x.insert(1, 0.25)
        detail = BoDDetail("birth", 1, 0.25, 0.0)
        assert bod_log_ratio(x, x_new, detail, sched, Flat()) == pytest.approx(0.0, abs=1e-15)

    def test_antisymmetry_with_reverse_death(self):
        """Reverse-move log ratio is the exact negation, across random setups."""
        rng = rng_stream(38)
        for _ in range(100):
            model = random_model(rng)
            sched = BirthDeathSchedule.green(model.lam, model.k_max)
            x = random_state(rng, int(rng.integers(0, 5)))
            out = birth_propose_unsorted(x, sched, model, rng)
            if out.log_ratio == NEG_INF:
                continue
            back = BoDDetail("death", out.detail.index, out.detail.value, out.detail.log_q)
            reverse = bod_log_ratio(out.proposed, x, back, sched, model)
            assert reverse == pytest.approx(-out.log_ratio, abs=1e-12)

    def test_location_terms_cancel_against_naive_form(self):
        """Matches a deliberately naive ratio carrying both 1/(k+1) location terms."""
        rng = rng_stream(39)
        for _ in range(100):
            model = random_model(rng)
            sched = BirthDeathSchedule.green(model.lam, model.k_max)
            k = int(rng.integers(0, 5))
            x = random_state(rng, k)
            out = birth_propose_unsorted(x, sched, model, rng)
            if out.log_ratio == NEG_INF:
                continue
            naive = (model.log_density(out.proposed) - model.log_density(x)
                     + (math.log(sched.p_death(out.proposed)) - math.log(k + 1))
                     - (math.log(sched.p_birth(x)) - math.log(k + 1))
                     - out.detail.log_q)
            assert out.log_ratio == pytest.approx(naive, abs=1e-12)

    def test_zero_proposal_density_is_hard_error(self):
        sched = BirthDeathSchedule.green(2.0, 8)
        x = VarDimState((0.5,))
        detail = BoDDetail("birth", 0, 0.2, NEG_INF)
        with pytest.raises(BrokenKernelError):
            bod_log_ratio(x, x.insert(0, 0.2), detail, sched, PriorOnlyTarget(2.0, 8))


class TestLegacyLogRatio:
    def test_equal_to_corrected_for_birth_from_empty(self):
        rng = rng_stream(40)
        model = random_model(rng)
        sched = BirthDeathSchedule.green(model.lam, model.k_max)
        x = VarDimState()
        out = birth_propose_unsorted(x, sched, model, rng)
        legacy = legacy_log_ratio(x, out.proposed, out.detail, sched, model)
        assert legacy == pytest.approx(out.log_ratio, abs=1e-12)

    def test_birth_offset_is_log_k_plus_one(self):
        rng = rng_stream(41)
        for k in (1, 2, 3, 5):
            model = random_model(rng)
            sched = BirthDeathSchedule.green(model.lam, model.k_max)
            x = random_state(rng, k)
            out = birth_propose_unsorted(x, sched, model, rng)
            legacy = legacy_log_ratio(x, out.proposed, out.detail, sched, model)
            assert legacy - out.log_ratio == pytest.approx(-math.log(k + 1), abs=1e-12)

    def test_death_offset_is_plus_log_k(self):
        rng = rng_stream(42)
        for k in (1, 2, 4):
            model = random_model(rng)
            sched = BirthDeathSchedule.green(model.lam, model.k_max)
            x = random_state(rng, k)
            out = death_propose(x, sched, model, rng)
            legacy = legacy_log_ratio(x, out.proposed, out.detail, sched, model)
            assert legacy - out.log_ratio == pytest.approx(math.log(k), abs=1e-12)


class TestSortedKernel:
    def test_insertion_at_unique_sorted_slot(self):
        rng = rng_stream(43)
        target = SortedRestriction(PriorOnlyTarget(2.0, 8))
        sched = BirthDeathSchedule.green(2.0, 8, representation="sorted")
        x = VarDimState((0.3, 0.9))
        for _ in range(100):
            out = birth_propose_sorted(x, sched, target, rng)
            assert out.proposed.is_sorted()
            assert out.proposed.components[out.detail.index] == out.detail.value

    def test_empty_state_slot_zero(self):
        rng = rng_stream(44)
        target = SortedRestriction(PriorOnlyTarget(2.0, 8))
        sched = BirthDeathSchedule.green(2.0, 8, representation="sorted")
        out = birth_propose_sorted(VarDimState(), sched, target, rng)
        assert out.detail.index == 0

    def test_tie_rejects_surely(self):
        prop = pmf_component_proposal([0.5, 1.5], [0.5, 0.5])
        sched = BirthDeathSchedule(
            p_birth=lambda x: 0.4, p_death=lambda x: 0.4 if x.k else 0.0,
            proposal=prop, representation="sorted")
        target = SortedRestriction(PriorOnlyTarget(2.0, 8))
        x = VarDimState((0.5, 1.5))
        rng = rng_stream(45)
        outs = [birth_propose_sorted(x, sched, target, rng) for _ in range(20)]
        assert all(o.log_ratio == NEG_INF for o in outs)

    def test_unsorted_input_is_hard_error(self):
        sched = BirthDeathSchedule.green(2.0, 8, representation="sorted")
        target = SortedRestriction(PriorOnlyTarget(2.0, 8))
        with pytest.raises(BrokenKernelError):
            birth_propose_sorted(VarDimState((1.0, 0.5)), sched, target, rng_stream(46))
        detail = BoDDetail("birth", 0, 0.1, 0.0)
        with pytest.raises(BrokenKernelError):
            sorted_log_ratio(VarDimState((1.0, 0.5)), VarDimState((0.1, 1.0, 0.5)),
                             detail, sched, target)

    def test_insertion_slot_probability_matches_gap(self):
        """Middle-slot hits over 1e5 draws match (0.9-0.3)/pi within 3 sigma."""
        rng = rng_stream(47)
        target = SortedRestriction(PriorOnlyTarget(2.0, 8))
        sched = BirthDeathSchedule.green(2.0, 8, representation="sorted")
        x = VarDimState((0.3, 0.9))
        p_gap = (0.9 - 0.3) / math.pi
        n = 100_000
        hits = 0
        log_eta_seen = None
        for _ in range(n):
            out = birth_propose_sorted(x, sched, target, rng)
            if out.detail.index == 1:
                hits += 1
                log_eta_seen = out.detail.log_eta
        band = 3.0 * math.sqrt(p_gap * (1 - p_gap) / n)
        assert abs(hits / n - p_gap) < band
        assert log_eta_seen == pytest.approx(math.log(p_gap), abs=1e-12)

    def test_ratio_equals_unsorted_for_exchangeable_target(self):
        """Sorted ratio on k!-rescaled target equals the unsorted ratio exactly."""
        rng = rng_stream(48)
        for _ in range(100):
            model = random_model(rng)
            usched = BirthDeathSchedule.green(model.lam, model.k_max)
            ssched = BirthDeathSchedule.green(model.lam, model.k_max,
                                              representation="sorted")
            x = random_state(rng, int(rng.integers(0, 5)))
            out = birth_propose_sorted(x, ssched, SortedRestriction(model), rng)
            if out.log_ratio == NEG_INF:
                continue
            unsorted_ratio = bod_log_ratio(
                x, out.proposed,
                BoDDetail("birth", out.detail.index, out.detail.value, out.detail.log_q),
                usched, model)
            assert out.log_ratio == pytest.approx(unsorted_ratio, abs=1e-12)

    def test_flat_sorted_target_birth_ratio_closed_form(self):
        """Constant density, matched p_b/p_d, uniform q, k=0 birth: ratio = log(pi)."""
        class FlatSorted:
            def log_density(self, x):
                return 0.0 if x.is_sorted() else NEG_INF

        sched = BirthDeathSchedule(
            p_birth=lambda x: 0.3, p_death=lambda x: 0.3 if x.k else 0.0,
            proposal=uniform_component_proposal(), representation="sorted")
        rng = rng_stream(49)
        out = birth_propose_sorted(VarDimState(), sched, FlatSorted(), rng)
        # -log q(s*) - log(0+1) with q = 1/pi
        assert out.log_ratio == pytest.approx(math.log(math.pi), abs=1e-12)

    def test_sorted_death_antisymmetry(self):
        rng = rng_stream(50)
        model = random_model(rng)
        target = SortedRestriction(model)
        sched = BirthDeathSchedule.green(model.lam, model.k_max,
                                         representation="sorted")
        x = random_state(rng, 3)
        out = death_propose(x, sched, target, rng)
        back = BoDDetail("birth", out.detail.index, out.detail.value, out.detail.log_q)
        reverse = sorted_log_ratio(out.proposed, x, back, sched, target)
        assert reverse == pytest.approx(-out.log_ratio, abs=1e-12)


class TestMoveSetFactory:
    def test_weights_sum_to_one_at_every_order(self):
        target = PriorOnlyTarget(3.0, 6)
        sched = BirthDeathSchedule.green(3.0, 6)
        moves = bod_move_set(target, sched)
        for k in range(7):
            x = VarDimState(tuple(0.1 + 0.3 * j for j in range(k)))
            assert moves.weights(x).sum() == pytest.approx(1.0, abs=1e-15)

    def test_update_slot_holds_at_empty_state(self):
        target = PriorOnlyTarget(3.0, 6)
        sched = BirthDeathSchedule.green(3.0, 6)
        called = []

        def update(x, rng):
            called.append(x)
            raise AssertionError("should not be reached at k=0")

        moves = bod_move_set(target, sched, update)
        out = moves.by_label["update"].propose(VarDimState(), rng_stream(51))
        assert out.proposed == VarDimState()
        assert out.log_ratio == 0.0
        assert called == []

    def test_schedule_validation(self):
        with pytest.raises(ConfigurationError):
            BirthDeathSchedule(p_birth=lambda x: 0.1, p_death=lambda x: 0.1,
                               proposal=uniform_component_proposal(),
                               representation="diagonal")
        with pytest.raises(ConfigurationError):
            BirthDeathSchedule(p_birth=lambda x: 0.1, p_death=lambda x: 0.1,
                               proposal=uniform_component_proposal(),
                               ratio_mode="fixed")
