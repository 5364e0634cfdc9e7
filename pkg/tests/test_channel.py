"""Channel model tests: state generation, the noiseless map, lifting, JSON."""

import numpy as np
import pytest

from xsdof import matcore
from xsdof.channel import (
    AntennaConfig,
    FeedbackModel,
    Regime,
    apply_channel,
    generate_states,
    lift_phase,
    lift_rows,
    state_sequence_from_json,
    state_sequence_to_json,
)
from xsdof.errors import InvalidInput, InvalidShape


def make_states(m, n, horizon, seed=1):
    return generate_states(AntennaConfig(m, n), horizon, matcore.substream(seed, "states"))


class TestAntennaConfig:
    def test_regimes(self):
        assert AntennaConfig(1, 3).regime is Regime.DEGENERATE
        assert AntennaConfig(2, 3).regime is Regime.MID
        assert AntennaConfig(5, 4).regime is Regime.HIGH
        # boundaries fold into the smaller regime; formulas agree there
        assert AntennaConfig(2, 4).regime is Regime.DEGENERATE
        assert AntennaConfig(3, 3).regime is Regime.MID
        assert AntennaConfig(4, 4).regime is Regime.MID

    def test_effective_antennas(self):
        assert AntennaConfig(4, 2).effective_m == 2
        assert AntennaConfig(2, 3).effective_m == 2

    def test_rejects_zero(self):
        with pytest.raises(InvalidInput):
            AntennaConfig(0, 1)


class TestGenerateStates:
    def test_stacked_rank_every_slot(self):
        seq = make_states(2, 3, 16)
        assert seq.horizon == 16
        for state in seq.states:
            assert matcore.rank_value(state.stacked()) == 4

    def test_high_regime_rank(self):
        seq = make_states(4, 3, 5)
        for state in seq.states:
            assert matcore.rank_value(state.stacked()) == 6

    def test_singleton_horizon(self):
        assert make_states(2, 2, 1).horizon == 1

    def test_determinism(self):
        a, b = make_states(2, 3, 4, seed=9), make_states(2, 3, 4, seed=9)
        for sa, sb in zip(a.states, b.states):
            assert np.array_equal(sa.stacked(), sb.stacked())

    def test_one_based_indexing(self):
        seq = make_states(1, 1, 3)
        assert seq[1] is seq.states[0]
        with pytest.raises(InvalidInput):
            seq[0]
        with pytest.raises(InvalidInput):
            seq[4]


class TestApplyChannel:
    def test_zero_inputs(self):
        state = make_states(2, 3, 1)[1]
        y1, y2 = apply_channel(state, np.zeros(2), np.zeros(2))
        assert not y1.any() and not y2.any()

    def test_identity_channel(self):
        base = make_states(2, 2, 1)[1]
        state = type(base)(np.eye(2), np.zeros((2, 2)), base.h21, base.h22, slot=1)
        e1 = np.array([1.0, 0.0])
        y1, _ = apply_channel(state, e1, np.zeros(2))
        np.testing.assert_array_equal(y1, e1)

    def test_matches_reordered_accumulation(self):
        # oracle: accumulate the two terms in the opposite order, entrywise
        state = make_states(3, 4, 1, seed=5)[1]
        r = matcore.substream(5, "x")
        x1, x2 = matcore.random_vector(3, r), matcore.random_vector(3, r)
        y1, y2 = apply_channel(state, x1, x2)
        alt1 = state.h12 @ x2 + state.h11 @ x1
        alt2 = state.h22 @ x2 + state.h21 @ x1
        assert np.linalg.norm(y1 - alt1) <= 1e-12 * max(np.linalg.norm(alt1), 1.0)
        assert np.linalg.norm(y2 - alt2) <= 1e-12 * max(np.linalg.norm(alt2), 1.0)

    def test_linearity(self):
        state = make_states(2, 3, 1, seed=6)[1]
        r = matcore.substream(6, "x")
        x1, x2 = matcore.random_vector(2, r), matcore.random_vector(2, r)
        w1, w2 = matcore.random_vector(2, r), matcore.random_vector(2, r)
        alpha = complex(r.standard_normal(), r.standard_normal())
        ya = apply_channel(state, alpha * x1 + w1, alpha * x2 + w2)
        yb = apply_channel(state, x1, x2)
        yc = apply_channel(state, w1, w2)
        for a, b, c in zip(ya, yb, yc):
            np.testing.assert_allclose(a, alpha * b + c, atol=1e-12)

    def test_shape_mismatch(self):
        state = make_states(2, 3, 1)[1]
        with pytest.raises(InvalidShape):
            apply_channel(state, np.zeros(3), np.zeros(2))


class TestLiftPhase:
    def test_single_slot_unchanged(self):
        seq = make_states(2, 3, 1)
        np.testing.assert_array_equal(lift_phase([seq[1]], (1, 1)), seq[1].h11)

    def test_lift_rank(self):
        seq = make_states(2, 3, 3, seed=7)
        lifted = lift_phase(seq.states, (1, 1))
        assert lifted.shape == (9, 6)
        assert matcore.rank_value(lifted) == 6  # sum of per-slot ranks

    def test_concatenation_equals_union(self):
        seq = make_states(2, 3, 4, seed=8)
        first = lift_phase(seq.states[:2], (2, 1))
        second = lift_phase(seq.states[2:], (2, 1))
        union = lift_phase(seq.states, (2, 1))
        np.testing.assert_array_equal(matcore.block_diag([first, second]), union)

    def test_empty_range_rejected(self):
        with pytest.raises(InvalidInput):
            lift_phase([], (1, 1))

    def test_lifting_commutes_with_channel(self):
        seq = make_states(2, 3, 3, seed=9)
        r = matcore.substream(9, "x")
        xs = [(matcore.random_vector(2, r), matcore.random_vector(2, r)) for _ in range(3)]
        per_slot = np.concatenate(
            [apply_channel(seq[t], x1, x2)[0] for t, (x1, x2) in enumerate(xs, start=1)]
        )
        stacked = np.concatenate(
            [np.concatenate([x1 for x1, _ in xs]), np.concatenate([x2 for _, x2 in xs])]
        )
        lifted = lift_rows(seq.states, 1) @ stacked
        np.testing.assert_allclose(lifted, per_slot, atol=1e-12)

    def test_effective_column_restriction(self):
        seq = make_states(4, 2, 2, seed=10)
        lifted = lift_phase(seq.states, (1, 2), m_eff=2)
        assert lifted.shape == (4, 4)


class TestFeedbackModel:
    def test_tables(self):
        m = FeedbackModel.ASYM_FB_DELAYED_CSIT
        assert m.feedback_sources(1) == (1,) and m.feedback_sources(2) == (2,)
        assert m.grants_delayed_csi(1) and m.grants_delayed_csi(2)
        m = FeedbackModel.SYM_FB_NO_CSIT
        assert m.feedback_sources(1) == (1, 2) and m.feedback_sources(2) == (1, 2)
        assert not m.grants_delayed_csi(1)
        m = FeedbackModel.ASYM_FB_ONLY
        assert m.feedback_sources(2) == (2,) and not m.grants_delayed_csi(2)
        m = FeedbackModel.ASYM_FB_DCSIT_TX1_ONLY
        assert m.grants_delayed_csi(1) and not m.grants_delayed_csi(2)

    def test_from_key(self):
        assert FeedbackModel.from_key("sym-fb") is FeedbackModel.SYM_FB_NO_CSIT
        with pytest.raises(InvalidInput):
            FeedbackModel.from_key("bogus")


class TestSerialization:
    def test_round_trip_bit_exact(self):
        seq = make_states(2, 3, 4, seed=12)
        text = state_sequence_to_json(seq)
        back = state_sequence_from_json(text)
        assert back.config == seq.config
        assert back.horizon == seq.horizon
        for a, b in zip(seq.states, back.states):
            assert np.array_equal(a.stacked(), b.stacked())
        # serializing again produces the identical document
        assert state_sequence_to_json(back) == text
