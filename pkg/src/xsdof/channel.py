"""The two-transmitter / two-receiver fading channel.

Per-slot channel states (four independent complex-Gaussian blocks, full
rank almost surely), the noiseless channel map, the feedback-topology
descriptors, and block-diagonal lifting of a phase's slots into one matrix.

Noise is omitted entirely, not merely made small: every decode and secrecy
check in this package is a statement about the noiseless linear maps, which
is exactly the level at which degrees-of-freedom accounting lives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import matcore
from .errors import InvalidInput, InvalidShape

STACKED_RANK_TOL = 1e-9


class Regime(Enum):
    """Antenna-count regime; boundaries resolve to the smaller branch.

    Every regime-dependent formula in the package agrees across the shared
    boundaries (2m = n and m = n), which the test suite asserts by
    evaluating both branches there.
    """

    DEGENERATE = "degenerate"  # 2m <= n: no secure transmission possible
    MID = "mid"                # n <= 2m <= 2n
    HIGH = "high"              # 2m >= 2n


class FeedbackModel(Enum):
    """Who learns which receiver outputs and whether transmitters get delayed CSI."""

    ASYM_FB_DELAYED_CSIT = "asym-fb-dcsit"
    SYM_FB_NO_CSIT = "sym-fb"
    ASYM_FB_ONLY = "asym-fb"
    ASYM_FB_DCSIT_TX1_ONLY = "asym-fb-dcsit-tx1"

    def feedback_sources(self, tx: int) -> tuple[int, ...]:
        """Receiver indices whose outputs are fed back to transmitter ``tx``."""
        if tx not in (1, 2):
            raise InvalidInput(f"transmitter index must be 1 or 2, got {tx}")
        if self is FeedbackModel.SYM_FB_NO_CSIT:
            return (1, 2)
        return (tx,)

    def grants_delayed_csi(self, tx: int) -> bool:
        """Whether transmitter ``tx`` receives the delayed channel state."""
        if tx not in (1, 2):
            raise InvalidInput(f"transmitter index must be 1 or 2, got {tx}")
        if self is FeedbackModel.ASYM_FB_DELAYED_CSIT:
            return True
        if self is FeedbackModel.ASYM_FB_DCSIT_TX1_ONLY:
            return tx == 1
        return False

    @classmethod
    def from_key(cls, key: str) -> "FeedbackModel":
        for model in cls:
            if model.value == key:
                return model
        raise InvalidInput(f"unknown feedback model {key!r}")


@dataclass(frozen=True)
class AntennaConfig:
    """Antenna counts: ``m`` per transmitter, ``n`` per receiver."""

    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise InvalidInput(f"antenna counts must be >= 1, got ({self.m}, {self.n})")

    @property
    def effective_m(self) -> int:
        """Transmit antennas a scheme actually drives; extra ones stay silent."""
        return min(self.m, self.n)

    @property
    def regime(self) -> Regime:
        if 2 * self.m <= self.n:
            return Regime.DEGENERATE
        if 2 * self.m <= 2 * self.n:
            return Regime.MID
        return Regime.HIGH


@dataclass(frozen=True)
class ChannelState:
    """One slot's four channel blocks, each ``n x m``, full rank jointly."""

    h11: np.ndarray
    h12: np.ndarray
    h21: np.ndarray
    h22: np.ndarray
    slot: int

    def block(self, rx: int, tx: int) -> np.ndarray:
        return getattr(self, f"h{rx}{tx}")

    def stacked(self) -> np.ndarray:
        """The joint 2n x 2m matrix of all four blocks."""
        return np.block([[self.h11, self.h12], [self.h21, self.h22]])


@dataclass(frozen=True)
class StateSequence:
    """An i.i.d. draw of channel states over a horizon, immutable once built."""

    config: AntennaConfig
    states: tuple[ChannelState, ...]
    seed: int | None = None

    @property
    def horizon(self) -> int:
        return len(self.states)

    def __getitem__(self, slot: int) -> ChannelState:
        """1-based slot access, matching the protocol's slot numbering."""
        if not 1 <= slot <= len(self.states):
            raise InvalidInput(f"slot {slot} outside horizon 1..{len(self.states)}")
        return self.states[slot - 1]


def generate_states(
    config: AntennaConfig,
    horizon: int,
    rng: np.random.Generator,
    seed: int | None = None,
    max_redraws: int = 16,
) -> StateSequence:
    """Draw ``horizon`` independent channel states.

    Each slot's stacked 2n x 2m matrix must have rank ``min(2n, 2m)`` at the
    working tolerance; a failing slot (a null-set event for Gaussian draws)
    is redrawn rather than accepted.
    """
    if horizon < 1:
        raise InvalidInput(f"horizon must be >= 1, got {horizon}")
    n, m = config.n, config.m
    want = min(2 * n, 2 * m)
    states = []
    for slot in range(1, horizon + 1):
        for _ in range(max_redraws):
            blocks = [matcore.random_matrix(n, m, rng) for _ in range(4)]
            state = ChannelState(*blocks, slot=slot)
            if matcore.rank_value(state.stacked(), STACKED_RANK_TOL) == want:
                break
        else:  # pragma: no cover - probability ~0 for Gaussian draws
            raise InvalidInput("could not draw a full-rank channel state")
        states.append(state)
    return StateSequence(config, tuple(states), seed)


def apply_channel(state: ChannelState, x1: np.ndarray, x2: np.ndarray):
    """Noiseless channel map: ``y_j = h_j1 x1 + h_j2 x2`` for both receivers.

    Inputs may carry a trailing axis of stacked columns (used by the linear
    replay machinery); outputs then carry the same trailing axis.
    """
    x1 = np.asarray(x1, dtype=complex)
    x2 = np.asarray(x2, dtype=complex)
    m = state.h11.shape[1]
    if x1.shape[0] != m or x2.shape[0] != m:
        raise InvalidShape(f"inputs must have {m} coordinates, got {x1.shape[0]}, {x2.shape[0]}")
    y1 = state.h11 @ x1 + state.h12 @ x2
    y2 = state.h21 @ x1 + state.h22 @ x2
    return y1, y2


def lift_phase(states: Sequence[ChannelState], which: tuple[int, int], m_eff: int | None = None) -> np.ndarray:
    """Block-diagonal lift of one channel block over a contiguous slot range.

    ``which = (j, i)`` selects the receiver-``j`` / transmitter-``i`` block;
    ``m_eff`` restricts to the first ``m_eff`` transmit antennas (the
    coordinates a scheme actually drives).
    """
    if len(states) == 0:
        raise InvalidInput("lift_phase requires a nonempty slot range")
    j, i = which
    blocks = [s.block(j, i) if m_eff is None else s.block(j, i)[:, :m_eff] for s in states]
    return matcore.block_diag(blocks)


def lift_rows(states: Sequence[ChannelState], rx: int, m_eff: int | None = None) -> np.ndarray:
    """Receiver ``rx``'s lifted map on the stacked pair of transmit vectors.

    Returns ``[lift(h_rx1) | lift(h_rx2)]``, i.e. the matrix multiplying
    ``[x1_stack; x2_stack]`` to give that receiver's stacked phase output.
    """
    return np.hstack([lift_phase(states, (rx, 1), m_eff), lift_phase(states, (rx, 2), m_eff)])


def state_sequence_to_json(seq: StateSequence) -> str:
    """Serialize a state sequence for trial replay.

    Complex entries are written as ``[re, im]`` pairs using Python's
    shortest round-trip decimal form (at most 17 significant digits), so
    parsing the document reproduces every float bit for bit.
    """
    doc = {
        "config": {"m": seq.config.m, "n": seq.config.n},
        "seed": seq.seed,
        "horizon": seq.horizon,
        "states": [
            [[[float(z.real), float(z.imag)] for z in state.block(j, i).ravel()]
             for (j, i) in ((1, 1), (1, 2), (2, 1), (2, 2))]
            for state in seq.states
        ],
    }
    return json.dumps(doc, separators=(",", ":"))


def state_sequence_from_json(text: str) -> StateSequence:
    """Parse the document produced by :func:`state_sequence_to_json`."""
    doc = json.loads(text)
    config = AntennaConfig(doc["config"]["m"], doc["config"]["n"])
    n, m = config.n, config.m
    states = []
    for slot, raw in enumerate(doc["states"], start=1):
        blocks = [
            np.array([complex(re, im) for re, im in entries], dtype=complex).reshape(n, m)
            for entries in raw
        ]
        states.append(ChannelState(*blocks, slot=slot))
    if len(states) != doc["horizon"]:
        raise InvalidInput("horizon field does not match the number of states")
    return StateSequence(config, tuple(states), doc["seed"])
