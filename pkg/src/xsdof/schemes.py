"""Phase-based transmission schemes as ledger-constrained encoders + decoders.

Five schemes share one machinery:

* ``A``: own-receiver feedback plus delayed transmitter CSI; four phases
  (artificial noise, fresh symbols for receiver 1, fresh symbols for
  receiver 2, joint retransmission of the overheard side information).
* ``D``: the same construction driven purely by symmetric output feedback:
  every quantity a transmitter needs arrives directly, so no CSI is read.
* ``B``: single-slot phases for the many-antenna regime (m >= n); only
  own-receiver feedback is needed.
* ``C``: feedback-only variant for the mid regime with shorter fresh
  phases; each side-information vector is retransmitted by the one
  transmitter that heard it.  A run-mode flag moves every knowledge-heavy
  role onto transmitter 1 (feedback and delayed CSI to transmitter 1 only).
* ``E``: the no-secrecy variant: the scheme-A construction with the noise
  phase removed.

Encoders obtain every non-local quantity through capability views; when the
direct fed-back route is not granted they fall back to reconstruction
(recover the peer's inputs from own feedback and delayed CSI, then rebuild
the other receiver's output).  If neither route is granted the run aborts
with :class:`UnauthorizedAccess`; that abort is the enforcement working,
not a failure of the simulator.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from . import matcore
from .channel import (
    AntennaConfig,
    FeedbackModel,
    Regime,
    StateSequence,
    apply_channel,
    generate_states,
    lift_rows,
)
from .errors import (
    DecodeFailure,
    DegeneratePrecoders,
    InvalidInput,
    InvalidTranscript,
    RegimeError,
    UnauthorizedAccess,
)
from .knowledge import (
    KnowledgeBase,
    Node,
    recover_peer_inputs,
    rebuild_receiver_output,
)

DECODE_TOL = 1e-6

MUTATIONS = ("theta1_zero", "phi1_zero", "skip_phase1")


class SchemeId(Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"


def default_model(scheme: SchemeId, tx1_only: bool = False) -> FeedbackModel:
    """The weakest feedback model each scheme is designed for."""
    if tx1_only:
        return FeedbackModel.ASYM_FB_DCSIT_TX1_ONLY
    return {
        SchemeId.A: FeedbackModel.ASYM_FB_DELAYED_CSIT,
        SchemeId.B: FeedbackModel.ASYM_FB_ONLY,
        SchemeId.C: FeedbackModel.ASYM_FB_ONLY,
        SchemeId.D: FeedbackModel.SYM_FB_NO_CSIT,
        SchemeId.E: FeedbackModel.ASYM_FB_DELAYED_CSIT,
    }[scheme]


@dataclass(frozen=True)
class PhasePlan:
    """Slot counts per phase and the per-receiver symbol budget."""

    phase_lengths: tuple[int, ...]
    symbols_per_receiver: int

    @property
    def horizon(self) -> int:
        return sum(self.phase_lengths)

    def dof_target(self) -> Fraction:
        return Fraction(self.symbols_per_receiver, self.horizon)


def plan(scheme: SchemeId, config: AntennaConfig) -> PhasePlan:
    """Phase lengths and symbol budget for a scheme at a configuration.

    Schemes operate on ``min(m, n)`` effective transmit antennas; surplus
    antennas send structural zeros.  Secrecy schemes refuse the degenerate
    regime (``2m <= n``), where the secure region is the origin alone.
    """
    if scheme is SchemeId.B:
        if config.m < config.n:
            raise RegimeError(f"scheme B needs m >= n, got (m={config.m}, n={config.n})")
        return PhasePlan((1, 1, 1, 1), 2 * config.n)
    if config.regime is Regime.DEGENERATE:
        raise RegimeError(
            f"(m={config.m}, n={config.n}): 2m <= n, the secure region is {{(0,0)}}; "
            f"scheme {scheme.value} does not apply"
        )
    m, n = config.effective_m, config.n
    t2_fresh = n * (2 * m - n)
    t3 = (2 * m - n) ** 2
    if scheme in (SchemeId.A, SchemeId.D):
        return PhasePlan((n * n, t2_fresh, t2_fresh, t3), 2 * m * t2_fresh)
    if scheme is SchemeId.E:
        return PhasePlan((t2_fresh, t2_fresh, t3), 2 * m * t2_fresh)
    if scheme is SchemeId.C:
        t2 = m * (2 * m - n)
        return PhasePlan((n * n, t2, t2, t3), 2 * m * t2)
    raise InvalidInput(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class Precoders:
    """Publicly known mixing and retransmission matrices.

    ``theta1``/``theta2`` mix the phase-1 outputs into the fresh-information
    phases; ``phi1``/``phi2`` combine the side-information vectors in the
    final phase.  Shapes depend on the scheme; absent matrices are ``None``.
    """

    theta1: np.ndarray | None
    theta2: np.ndarray | None
    phi1: np.ndarray
    phi2: np.ndarray


def _precoder_shapes(scheme: SchemeId, config: AntennaConfig, pln: PhasePlan):
    m, n = config.effective_m, config.n
    if scheme is SchemeId.B:
        return {"theta1": (n, n), "theta2": (n, n), "phi1": (n, n), "phi2": (n, n)}
    t1 = pln.phase_lengths[0] if len(pln.phase_lengths) == 4 else 0
    t2 = pln.phase_lengths[-3]
    t3 = pln.phase_lengths[-1]
    if scheme in (SchemeId.A, SchemeId.D):
        # Both transmitters mix the fed-forward output, so the mixing map
        # spans all 2m input coordinates of each fresh slot.  A mixing map
        # confined to one transmitter's m coordinates cannot reach the rank
        # the zero-leakage identity needs when m < n.
        return {
            "theta1": (2 * m * t2, n * t1),
            "theta2": (2 * m * t2, n * t1),
            "phi1": (2 * m * t3, n * t2),
            "phi2": (2 * m * t3, n * t2),
        }
    if scheme is SchemeId.E:
        return {
            "theta1": None,
            "theta2": None,
            "phi1": (2 * m * t3, n * t2),
            "phi2": (2 * m * t3, n * t2),
        }
    if scheme is SchemeId.C:
        return {
            "theta1": (m * t2, n * t1),
            "theta2": (m * t2, n * t1),
            "phi1": (m * t3, n * t2),
            "phi2": (m * t3, n * t2),
        }
    raise InvalidInput(f"unknown scheme {scheme!r}")


def draw_precoders(
    scheme: SchemeId,
    config: AntennaConfig,
    pln: PhasePlan,
    rng: np.random.Generator,
    max_retries: int = 16,
) -> Precoders:
    """Draw Gaussian precoders, redrawing any that miss full rank.

    A Gaussian draw is full rank almost surely; exhausting the retries
    therefore signals a tolerance bug, not bad luck.
    """
    shapes = _precoder_shapes(scheme, config, pln)
    drawn = {}
    for name, shape in shapes.items():
        if shape is None:
            drawn[name] = None
            continue
        for _ in range(max_retries):
            cand = matcore.random_matrix(*shape, rng)
            if matcore.rank_value(cand) == min(shape):
                drawn[name] = cand
                break
        else:
            raise DegeneratePrecoders(f"{name} of shape {shape} failed rank target")
    return Precoders(**drawn)


@dataclass(frozen=True)
class Symbols:
    """All random payloads of one run: artificial noise and fresh symbols."""

    u1: np.ndarray
    u2: np.ndarray
    v11: np.ndarray
    v21: np.ndarray
    v12: np.ndarray
    v22: np.ndarray

    @property
    def u(self) -> np.ndarray:
        return np.concatenate([self.u1, self.u2])

    @property
    def v1(self) -> np.ndarray:
        return np.concatenate([self.v11, self.v21])

    @property
    def v2(self) -> np.ndarray:
        return np.concatenate([self.v12, self.v22])


@dataclass
class Transcript:
    """Complete record of one scheme run.

    ``plan`` reflects the phase lengths actually used (a structural mutation
    may drop the noise phase).  ``knowledge`` retains the ledgers so that
    decoding runs through the same capability checks as encoding did.
    """

    scheme: SchemeId
    config: AntennaConfig
    model: FeedbackModel
    plan: PhasePlan
    states: StateSequence
    precoders: Precoders
    symbols: Symbols
    inputs: list  # per slot: (x1, x2) at full m width
    outputs: list  # per slot: (y1, y2)
    selections: dict
    knowledge: KnowledgeBase
    mutation: str | None = None
    tx1_only: bool = False
    seed: int | None = None
    notes: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.plan.horizon

    @property
    def access_log(self):
        return self.knowledge.log

    def phase_ranges(self) -> list[list[int]]:
        """1-based slot numbers per phase; a missing noise phase is empty."""
        lengths = self.plan.phase_lengths
        if len(lengths) == 3:
            lengths = (0,) + lengths
        out, start = [], 1
        for length in lengths:
            out.append(list(range(start, start + length)))
            start += length
        return out

    def check_complete(self):
        if len(self.inputs) != self.horizon or len(self.outputs) != self.horizon:
            raise InvalidTranscript(
                f"transcript has {len(self.inputs)} slots, plan says {self.horizon}"
            )


def selection_matrix(width: int, selected) -> np.ndarray:
    """Map a width-``width`` vector to (selected entries, zero padding).

    Row ``i < len(selected)`` picks coordinate ``selected[i]``; remaining
    rows are zero, so the output keeps the original width.
    """
    s = np.zeros((width, width), dtype=complex)
    for i, j in enumerate(selected):
        s[i, j] = 1.0
    return s


def _pad_selected(values: np.ndarray, width: int, selected) -> np.ndarray:
    out = np.zeros((width,) + values.shape[1:], dtype=complex)
    if len(selected):
        out[: len(selected)] = values[list(selected)]
    return out


def _per_slot_selection(rows_per_slot: int, slots: int, take: int) -> tuple[int, ...]:
    """First ``take`` side-information rows of every slot's output block.

    The lifted maps are block diagonal, so each slot's unknowns can only be
    completed by equations overheard in that same slot; any selection that
    starves a slot leaves the decode system rank deficient no matter how the
    retransmission is mixed.
    """
    return tuple(s * rows_per_slot + j for s in range(slots) for j in range(take))


class _Run:
    """Mutable state of one simulation run; produces an immutable Transcript."""

    def __init__(self, config, states, precoders, symbols, kb):
        self.config = config
        self.states = states
        self.precoders = precoders
        self.symbols = symbols
        self.kb = kb
        self.inputs = []
        self.outputs = []
        self.tx_inputs = {1: {}, 2: {}}  # transmitter index -> slot -> effective input
        self.selections = {}

    def transmit(self, slot: int, x1_eff: np.ndarray, x2_eff: np.ndarray):
        m = self.config.m
        x1 = np.zeros(m, dtype=complex)
        x2 = np.zeros(m, dtype=complex)
        x1[: len(x1_eff)] = x1_eff
        x2[: len(x2_eff)] = x2_eff
        state = self.states[slot]
        y1, y2 = apply_channel(state, x1, x2)
        self.inputs.append((x1, x2))
        self.outputs.append((y1, y2))
        self.tx_inputs[1][slot] = np.asarray(x1_eff, dtype=complex)
        self.tx_inputs[2][slot] = np.asarray(x2_eff, dtype=complex)
        self.kb.advance_slot(slot, (y1, y2), state)

    def acquire_output(self, node: Node, target_rx: int, slots, at_slot: int) -> np.ndarray:
        """Stacked outputs of ``target_rx`` over ``slots`` as known to ``node``.

        Direct fed-back route first; otherwise reconstruct through delayed
        CSI.  Raises UnauthorizedAccess when the model grants neither.
        """
        view = self.kb.view(node, at_slot)
        try:
            return np.concatenate([view.fed_back_output(target_rx, t) for t in slots])
        except UnauthorizedAccess:
            pass
        own = [self.tx_inputs[node.index][t] for t in slots]
        peer = recover_peer_inputs(view, self.config, slots, own)
        if node.index == 1:
            x1s, x2s = own, peer
        else:
            x1s, x2s = peer, own
        return rebuild_receiver_output(view, self.config, slots, x1s, x2s, target_rx)


def run(
    scheme: SchemeId,
    config: AntennaConfig,
    model: FeedbackModel | None = None,
    *,
    seed: int = 0,
    mutation: str | None = None,
    tx1_only: bool = False,
    withhold: set | None = None,
) -> Transcript:
    """Execute one scheme run and return its transcript.

    Every encoder computation goes through capability views; a scheme/model
    mismatch therefore surfaces as :class:`UnauthorizedAccess` during the
    run rather than as an upfront refusal.  ``mutation`` applies one of the
    adversarial variants used by the verifier's sensitivity checks.
    ``tx1_only`` selects the run mode of scheme C in which transmitter 1
    performs both side-information reconstructions.
    """
    if mutation is not None and mutation not in MUTATIONS:
        raise InvalidInput(f"unknown mutation {mutation!r}; expected one of {MUTATIONS}")
    if mutation == "skip_phase1" and scheme in (SchemeId.B, SchemeId.C):
        raise InvalidInput("skip_phase1 applies to the retrospective schemes only")
    if tx1_only and scheme is not SchemeId.C:
        raise InvalidInput("the tx1-only run mode is a variant of scheme C")
    if model is None:
        model = default_model(scheme, tx1_only)
    nominal = plan(scheme, config)

    lengths = list(nominal.phase_lengths)
    if len(lengths) == 3:  # scheme E carries no noise phase
        lengths = [0] + lengths
    if mutation == "skip_phase1":
        lengths[0] = 0
    t1, t2 = lengths[0], lengths[1]
    m = config.effective_m

    rng_states = matcore.substream(seed, "states")
    rng_prec = matcore.substream(seed, "precoders")
    rng_sym = matcore.substream(seed, "symbols")

    states = generate_states(config, sum(lengths), rng_states, seed=seed)
    precoders = draw_precoders(scheme, config, nominal, rng_prec)
    if mutation == "theta1_zero" and precoders.theta1 is not None:
        precoders = Precoders(
            np.zeros_like(precoders.theta1), precoders.theta2, precoders.phi1, precoders.phi2
        )
    if mutation == "phi1_zero":
        precoders = Precoders(
            precoders.theta1, precoders.theta2, np.zeros_like(precoders.phi1), precoders.phi2
        )

    symbols = Symbols(
        u1=matcore.random_vector(m * t1, rng_sym),
        u2=matcore.random_vector(m * t1, rng_sym),
        v11=matcore.random_vector(m * t2, rng_sym),
        v21=matcore.random_vector(m * t2, rng_sym),
        v12=matcore.random_vector(m * t2, rng_sym),
        v22=matcore.random_vector(m * t2, rng_sym),
    )

    kb = KnowledgeBase(model, config, withhold=withhold)
    kb.grant_own_symbols(Node.TX1, {"v11": symbols.v11, "v12": symbols.v12}, symbols.u1)
    kb.grant_own_symbols(Node.TX2, {"v21": symbols.v21, "v22": symbols.v22}, symbols.u2)

    runner = _Run(config, states, precoders, symbols, kb)
    if scheme is SchemeId.B:
        _run_single_slot_phases(runner, lengths)
    elif scheme is SchemeId.C:
        _run_feedback_only(runner, lengths, tx1_only)
    else:
        _run_retrospective(runner, lengths)

    effective = tuple(l for i, l in enumerate(lengths) if not (i == 0 and l == 0))
    transcript = Transcript(
        scheme=scheme,
        config=config,
        model=model,
        plan=PhasePlan(effective, nominal.symbols_per_receiver),
        states=states,
        precoders=precoders,
        symbols=symbols,
        inputs=runner.inputs,
        outputs=runner.outputs,
        selections=runner.selections,
        knowledge=kb,
        mutation=mutation,
        tx1_only=tx1_only,
        seed=seed,
    )
    transcript.check_complete()
    return transcript


def _phase_ranges(lengths):
    out, start = [], 1
    for length in lengths:
        out.append(list(range(start, start + length)))
        start += length
    return out


def _run_retrospective(run_: _Run, lengths):
    """Schemes A, D and E (and the structurally mutated variants of A)."""
    cfg, sym, prec = run_.config, run_.symbols, run_.precoders
    m, n = cfg.effective_m, cfg.n
    t1, t2, _, t3 = lengths
    r1, r2, r3, r4 = _phase_ranges(lengths)

    for idx, t in enumerate(r1):
        run_.transmit(t, sym.u1[idx * m : (idx + 1) * m], sym.u2[idx * m : (idx + 1) * m])

    # fresh symbols for receiver 1, cloaked by receiver 1's phase-1 output;
    # each transmitter applies its own half of the joint mixing map
    def mixing(theta, target_rx, source_range, at_slot):
        if not t1 or theta is None:
            z = np.zeros(m * t2, dtype=complex)
            return z, z
        top, bottom = theta[: m * t2], theta[m * t2 :]
        carrier_tx1 = run_.acquire_output(Node.TX1, target_rx, source_range, at_slot)
        carrier_tx2 = run_.acquire_output(Node.TX2, target_rx, source_range, at_slot)
        return top @ carrier_tx1, bottom @ carrier_tx2

    mix1_tx1, mix1_tx2 = mixing(prec.theta1, 1, r1, at_slot=r2[0])
    for idx, t in enumerate(r2):
        sl = slice(idx * m, (idx + 1) * m)
        run_.transmit(t, sym.v11[sl] + mix1_tx1[sl], sym.v21[sl] + mix1_tx2[sl])

    mix2_tx1, mix2_tx2 = mixing(prec.theta2, 2, r1, at_slot=r3[0])
    for idx, t in enumerate(r3):
        sl = slice(idx * m, (idx + 1) * m)
        run_.transmit(t, sym.v12[sl] + mix2_tx1[sl], sym.v22[sl] + mix2_tx2[sl])

    # joint retransmission of the overheard equations both receivers still need
    sel = _per_slot_selection(n, t2, 2 * m - n)
    run_.selections["side_info_rx2"] = sel
    run_.selections["side_info_rx1"] = sel
    nt2 = n * t2
    half = m * t3
    payloads = {}
    for node in (Node.TX1, Node.TX2):
        y2p2 = run_.acquire_output(node, 2, r2, at_slot=r4[0])
        y1p3 = run_.acquire_output(node, 1, r3, at_slot=r4[0])
        payloads[node.index] = (
            _pad_selected(y2p2, nt2, sel),
            _pad_selected(y1p3, nt2, sel),
        )
    i_tx1 = prec.phi1[:half] @ payloads[1][0] + prec.phi2[:half] @ payloads[1][1]
    i_tx2 = prec.phi1[half:] @ payloads[2][0] + prec.phi2[half:] @ payloads[2][1]
    for idx, t in enumerate(r4):
        sl = slice(idx * m, (idx + 1) * m)
        run_.transmit(t, i_tx1[sl], i_tx2[sl])


def _run_single_slot_phases(run_: _Run, lengths):
    """Scheme B: four single-slot phases on n effective antennas."""
    sym, prec = run_.symbols, run_.precoders
    r1, r2, r3, r4 = _phase_ranges(lengths)

    run_.transmit(r1[0], sym.u1, sym.u2)

    y1p1 = run_.acquire_output(Node.TX1, 1, r1, at_slot=r2[0])
    run_.transmit(r2[0], sym.v11 + prec.theta1 @ y1p1, sym.v21)

    y2p1 = run_.acquire_output(Node.TX2, 2, r1, at_slot=r3[0])
    run_.transmit(r3[0], sym.v12, sym.v22 + prec.theta2 @ y2p1)

    y1p3 = run_.acquire_output(Node.TX1, 1, r3, at_slot=r4[0])
    y2p2 = run_.acquire_output(Node.TX2, 2, r2, at_slot=r4[0])
    run_.transmit(r4[0], prec.phi2 @ y1p3, prec.phi1 @ y2p2)


def _run_feedback_only(run_: _Run, lengths, tx1_only: bool):
    """Scheme C: mid-regime scheme whose transmitters never read CSI...

    ...except in the tx1-only run mode, where transmitter 2 knows nothing
    beyond its own symbols: transmitter 1 reconstructs receiver 2's phase-1
    output (for the mixing of phase 3) and the overheard side information
    (for phase 4) through its own feedback plus delayed CSI, and carries the
    whole final phase alone.
    """
    cfg, sym, prec = run_.config, run_.symbols, run_.precoders
    m, n = cfg.effective_m, cfg.n
    t2 = lengths[1]
    r1, r2, r3, r4 = _phase_ranges(lengths)

    for idx, t in enumerate(r1):
        run_.transmit(t, sym.u1[idx * m : (idx + 1) * m], sym.u2[idx * m : (idx + 1) * m])

    mix1 = prec.theta1 @ run_.acquire_output(Node.TX1, 1, r1, at_slot=r2[0])
    for idx, t in enumerate(r2):
        sl = slice(idx * m, (idx + 1) * m)
        run_.transmit(t, sym.v11[sl] + mix1[sl], sym.v21[sl])

    mixer = Node.TX1 if tx1_only else Node.TX2
    mix2 = prec.theta2 @ run_.acquire_output(mixer, 2, r1, at_slot=r3[0])
    for idx, t in enumerate(r3):
        sl = slice(idx * m, (idx + 1) * m)
        if tx1_only:
            run_.transmit(t, sym.v12[sl] + mix2[sl], sym.v22[sl])
        else:
            run_.transmit(t, sym.v12[sl], sym.v22[sl] + mix2[sl])

    if tx1_only:
        sel = _per_slot_selection(n, t2, 2 * m - n)  # (2m-n)*t2 == m*t3 rows
        run_.selections["side_info_rx2"] = sel
        run_.selections["side_info_rx1"] = sel
        nt2 = n * t2
        y2p2 = run_.acquire_output(Node.TX1, 2, r2, at_slot=r4[0])
        y1p3 = run_.acquire_output(Node.TX1, 1, r3, at_slot=r4[0])
        i_tx1 = prec.phi1 @ _pad_selected(y2p2, nt2, sel) + prec.phi2 @ _pad_selected(
            y1p3, nt2, sel
        )
        for idx, t in enumerate(r4):
            sl = slice(idx * m, (idx + 1) * m)
            run_.transmit(t, i_tx1[sl], np.zeros(m, dtype=complex))
    else:
        i_tx1 = prec.phi2 @ run_.acquire_output(Node.TX1, 1, r3, at_slot=r4[0])
        i_tx2 = prec.phi1 @ run_.acquire_output(Node.TX2, 2, r2, at_slot=r4[0])
        for idx, t in enumerate(r4):
            sl = slice(idx * m, (idx + 1) * m)
            run_.transmit(t, i_tx1[sl], i_tx2[sl])


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------


def _own_rows_lift(view, slots, m_eff) -> np.ndarray:
    """[lift(h_own,tx1) | lift(h_own,tx2)] from the instantaneous CSI grants."""
    blocks_1, blocks_2 = [], []
    for t in slots:
        h_a, h_b = view.own_csi_rows(t)
        blocks_1.append(h_a[:, :m_eff])
        blocks_2.append(h_b[:, :m_eff])
    return np.hstack([matcore.block_diag(blocks_1), matcore.block_diag(blocks_2)])


def _cross_rows_lift(view, slots, m_eff, other_rx) -> np.ndarray:
    """The other receiver's lifted rows over ``slots``, via delayed CSI."""
    states = [view.delayed_csi(t) for t in slots]
    return np.hstack(
        [
            matcore.block_diag([s.block(other_rx, 1)[:, :m_eff] for s in states]),
            matcore.block_diag([s.block(other_rx, 2)[:, :m_eff] for s in states]),
        ]
    )


def _stacked_outputs(view, slots) -> np.ndarray:
    if not slots:
        return np.zeros(0, dtype=complex)
    return np.concatenate([view.own_output(t) for t in slots])


def _check_residual(a, x, b):
    scale = np.linalg.norm(b)
    residual = np.linalg.norm(a @ x - b)
    if residual > DECODE_TOL * max(scale, 1.0):
        raise DecodeFailure(f"decode residual {residual:.3e} exceeds tolerance")


def decode(transcript: Transcript, receiver: Node) -> np.ndarray:
    """Recover the receiver's fresh symbols using only its decoder view.

    Returns the stacked pair (both transmitters' symbols destined to this
    receiver).  Raises :class:`DecodeFailure` when the final residual
    exceeds the relative tolerance, and :class:`SingularSystem` /
    :class:`IllConditioned` on null-set channel draws (callers resample).
    """
    transcript.check_complete()
    if receiver not in (Node.RX1, Node.RX2):
        raise InvalidInput("decode expects a receiver node")
    if transcript.scheme is SchemeId.B:
        return _decode_single_slot(transcript, receiver)
    if transcript.scheme is SchemeId.C:
        return _decode_feedback_only(transcript, receiver)
    return _decode_retrospective(transcript, receiver)


def _decode_retrospective(transcript: Transcript, receiver: Node) -> np.ndarray:
    cfg, prec = transcript.config, transcript.precoders
    m, n = cfg.effective_m, cfg.n
    r1, r2, r3, r4 = transcript.phase_ranges()
    t1, t2 = len(r1), len(r2)
    k = (2 * m - n) * t2
    view = transcript.knowledge.view(receiver, transcript.horizon, decoder=True)
    own_rx = receiver.index

    if receiver is Node.RX1:
        fresh_range, side_range = r2, r3
        theta = prec.theta1
        phi_mine, phi_theirs = prec.phi2, prec.phi1
        sel_mine = transcript.selections["side_info_rx1"]
        sel_theirs = transcript.selections["side_info_rx2"]
    else:
        fresh_range, side_range = r3, r2
        theta = prec.theta2
        phi_mine, phi_theirs = prec.phi1, prec.phi2
        sel_mine = transcript.selections["side_info_rx2"]
        sel_theirs = transcript.selections["side_info_rx1"]

    own_f = _own_rows_lift(view, fresh_range, m)
    cross_f = _cross_rows_lift(view, fresh_range, m, 2 if own_rx == 1 else 1)
    own4 = _own_rows_lift(view, r4, m)

    y_fresh = _stacked_outputs(view, fresh_range)
    y_side = _stacked_outputs(view, side_range)
    y_final = _stacked_outputs(view, r4)
    if t1 and theta is not None:
        mix = theta @ _stacked_outputs(view, r1)
    else:
        mix = np.zeros(2 * m * t2, dtype=complex)

    rhs_fresh = y_fresh - own_f @ mix

    # peel the known side-information payload off the final phase, then
    # solve the square system for the equations overheard at the other side
    nt2 = n * t2
    s = y_final - own4 @ (phi_mine @ _pad_selected(y_side, nt2, sel_mine))
    recover = matcore.solve_square(
        own4 @ phi_theirs[:, :k], s, condition_limit=matcore.CONDITION_LIMIT
    )
    rhs_side = recover.x - (cross_f @ mix)[list(sel_theirs)]

    a = np.vstack([own_f, cross_f[list(sel_theirs), :]])
    rhs = np.concatenate([rhs_fresh, rhs_side])
    sol = matcore.solve_square(a, rhs, condition_limit=matcore.CONDITION_LIMIT)
    _check_residual(a, sol.x, rhs)
    return sol.x


def _decode_single_slot(transcript: Transcript, receiver: Node) -> np.ndarray:
    cfg, prec = transcript.config, transcript.precoders
    n = cfg.n
    r1, r2, r3, r4 = transcript.phase_ranges()
    view = transcript.knowledge.view(receiver, transcript.horizon, decoder=True)
    own_rx = receiver.index

    if receiver is Node.RX1:
        fresh_range, side_range = r2, r3
        theta, phi_mine, phi_theirs = prec.theta1, prec.phi2, prec.phi1
        mix_on_top = True  # phase-2 mixing rides on transmitter 1
    else:
        fresh_range, side_range = r3, r2
        theta, phi_mine, phi_theirs = prec.theta2, prec.phi1, prec.phi2
        mix_on_top = False  # phase-3 mixing rides on transmitter 2

    own_f = _own_rows_lift(view, fresh_range, n)
    cross_f = _cross_rows_lift(view, fresh_range, n, 2 if own_rx == 1 else 1)
    own4 = _own_rows_lift(view, r4, n)
    y_ref = _stacked_outputs(view, r1)
    y_fresh = _stacked_outputs(view, fresh_range)
    y_side = _stacked_outputs(view, side_range)
    y_final = _stacked_outputs(view, r4)

    carrier = theta @ y_ref
    zero = np.zeros(n, dtype=complex)
    mix = np.concatenate([carrier, zero] if mix_on_top else [zero, carrier])
    rhs_fresh = y_fresh - own_f @ mix

    # final phase: x1 = phi2 @ y1p3, x2 = phi1 @ y2p2
    own4_tx1, own4_tx2 = own4[:, :n], own4[:, n:]
    own4_mine = own4_tx1 if receiver is Node.RX1 else own4_tx2
    own4_theirs = own4_tx2 if receiver is Node.RX1 else own4_tx1
    s = y_final - own4_mine @ (phi_mine @ y_side)
    recover = matcore.solve_square(
        own4_theirs @ phi_theirs, s, condition_limit=matcore.CONDITION_LIMIT
    )
    rhs_side = recover.x - cross_f @ mix

    a = np.vstack([own_f, cross_f])
    rhs = np.concatenate([rhs_fresh, rhs_side])
    sol = matcore.solve_square(a, rhs, condition_limit=matcore.CONDITION_LIMIT)
    _check_residual(a, sol.x, rhs)
    return sol.x


def _decode_feedback_only(transcript: Transcript, receiver: Node) -> np.ndarray:
    cfg, prec = transcript.config, transcript.precoders
    m, n = cfg.effective_m, cfg.n
    r1, r2, r3, r4 = transcript.phase_ranges()
    t2, t3 = len(r2), len(r4)
    nt2 = n * t2
    view = transcript.knowledge.view(receiver, transcript.horizon, decoder=True)
    own_rx = receiver.index

    if receiver is Node.RX1:
        fresh_range, side_range = r2, r3
        theta_fresh = prec.theta1  # phase 2 mixes, and its rows are what leaked to Rx2
        phi_mine, phi_theirs = prec.phi2, prec.phi1
    else:
        fresh_range, side_range = r3, r2
        theta_fresh = prec.theta2
        phi_mine, phi_theirs = prec.phi1, prec.phi2

    own_f = _own_rows_lift(view, fresh_range, m)
    cross_f = _cross_rows_lift(view, fresh_range, m, 2 if own_rx == 1 else 1)
    own4 = _own_rows_lift(view, r4, m)
    y_ref = _stacked_outputs(view, r1)
    y_fresh = _stacked_outputs(view, fresh_range)
    y_side = _stacked_outputs(view, side_range)
    y_final = _stacked_outputs(view, r4)

    own_f_tx1, own_f_tx2 = own_f[:, : m * t2], own_f[:, m * t2 :]
    cross_f_tx1, cross_f_tx2 = cross_f[:, : m * t2], cross_f[:, m * t2 :]
    own4_tx1, own4_tx2 = own4[:, : m * t3], own4[:, m * t3 :]

    carrier = theta_fresh @ y_ref  # the mixing carrier of MY fresh phase

    if transcript.tx1_only:
        # everything in the final phase rides on transmitter 1
        sel_mine = transcript.selections[
            "side_info_rx1" if receiver is Node.RX1 else "side_info_rx2"
        ]
        sel_theirs = transcript.selections[
            "side_info_rx2" if receiver is Node.RX1 else "side_info_rx1"
        ]
        mix_f = own_f_tx1 @ carrier
        cross_mix = cross_f_tx1 @ carrier
        s = (
            y_final
            - own4_tx1 @ (phi_mine @ _pad_selected(y_side, nt2, sel_mine))
            - own4_tx1 @ (phi_theirs @ _pad_selected(cross_mix, nt2, sel_theirs))
        )
        a4 = own4_tx1 @ phi_theirs @ selection_matrix(nt2, sel_theirs) @ cross_f
    else:
        if receiver is Node.RX1:
            mix_f = own_f_tx1 @ carrier
            cross_mix = cross_f_tx1 @ carrier
            own4_mine, own4_theirs = own4_tx1, own4_tx2
        else:
            mix_f = own_f_tx2 @ carrier
            cross_mix = cross_f_tx2 @ carrier
            own4_mine, own4_theirs = own4_tx2, own4_tx1
        s = y_final - own4_mine @ (phi_mine @ y_side) - own4_theirs @ (phi_theirs @ cross_mix)
        a4 = own4_theirs @ phi_theirs @ cross_f

    rhs_fresh = y_fresh - mix_f
    a = np.vstack([own_f, a4])
    rhs = np.concatenate([rhs_fresh, s])
    sol = matcore.solve_full_column_rank(a, rhs, condition_limit=matcore.CONDITION_LIMIT)
    _check_residual(a, sol.x, rhs)
    return sol.x


# ---------------------------------------------------------------------------
# closed-form linear replay (audit tool; bypasses the ledgers on purpose)
# ---------------------------------------------------------------------------


def linear_response(transcript: Transcript, u=None, v1=None, v2=None):
    """Stacked receiver outputs as an explicit linear map of the symbols.

    Recomputes the whole run from the channel states, precoders and
    selections alone, with the symbol groups replaceable: pass identity
    matrices to read off the coefficient maps of ``u``, ``v1`` or ``v2``.
    This is an independent code path from the ledger-driven engine (used to
    cross-check it) and from the rank-identity assembly in ``verify``.

    Symbol groups must share their trailing shape: all plain vectors, or all
    matrices with the same column count.
    """
    transcript.check_complete()
    cfg, prec, sym = transcript.config, transcript.precoders, transcript.symbols
    m, n = cfg.effective_m, cfg.n
    r1, r2, r3, r4 = transcript.phase_ranges()
    t1, t2, t3 = len(r1), len(r2), len(r4)

    u = sym.u if u is None else np.asarray(u, dtype=complex)
    v1 = sym.v1 if v1 is None else np.asarray(v1, dtype=complex)
    v2 = sym.v2 if v2 is None else np.asarray(v2, dtype=complex)
    trailing = {arr.shape[1:] for arr in (u, v1, v2)}
    if len(trailing) != 1:
        raise InvalidInput("symbol groups must share their trailing shape")
    trailing = trailing.pop()

    states = transcript.states
    lift = lambda slots, rx_: lift_rows([states[t] for t in slots], rx_, m)

    def zeros(rows):
        return np.zeros((rows,) + trailing, dtype=complex)

    if t1:
        y1p1 = lift(r1, 1) @ u
        y2p1 = lift(r1, 2) @ u
    else:
        y1p1, y2p1 = zeros(0), zeros(0)

    def mixed(theta, carrier, top: bool | None):
        """Mixing term on the stacked 2*m*t2 fresh-phase input coordinates."""
        if theta is None or not t1:
            return zeros(2 * m * t2)
        term = theta @ carrier
        if top is None:  # joint mixing spanning both transmitters
            return term
        parts = [term, zeros(m * t2)] if top else [zeros(m * t2), term]
        return np.concatenate(parts)

    if transcript.scheme in (SchemeId.A, SchemeId.D, SchemeId.E):
        x2s = v1 + mixed(prec.theta1, y1p1, top=None)
        x3s = v2 + mixed(prec.theta2, y2p1, top=None)
    elif transcript.scheme is SchemeId.B:
        x2s = v1 + mixed(prec.theta1, y1p1, top=True)
        x3s = v2 + mixed(prec.theta2, y2p1, top=False)
    else:  # scheme C: phase-3 mixing moves to transmitter 1 in tx1-only mode
        x2s = v1 + mixed(prec.theta1, y1p1, top=True)
        x3s = v2 + mixed(prec.theta2, y2p1, top=bool(transcript.tx1_only))

    y1p2, y2p2 = lift(r2, 1) @ x2s, lift(r2, 2) @ x2s
    y1p3, y2p3 = lift(r3, 1) @ x3s, lift(r3, 2) @ x3s

    if transcript.scheme in (SchemeId.A, SchemeId.D, SchemeId.E):
        s2 = selection_matrix(n * t2, transcript.selections["side_info_rx2"])
        s3 = selection_matrix(n * t2, transcript.selections["side_info_rx1"])
        x4s = prec.phi1 @ (s2 @ y2p2) + prec.phi2 @ (s3 @ y1p3)
    elif transcript.scheme is SchemeId.B:
        x4s = np.concatenate([prec.phi2 @ y1p3, prec.phi1 @ y2p2])
    elif transcript.tx1_only:
        s2 = selection_matrix(n * t2, transcript.selections["side_info_rx2"])
        s3 = selection_matrix(n * t2, transcript.selections["side_info_rx1"])
        x4s = np.concatenate(
            [prec.phi1 @ (s2 @ y2p2) + prec.phi2 @ (s3 @ y1p3), zeros(m * t3)]
        )
    else:
        x4s = np.concatenate([prec.phi2 @ y1p3, prec.phi1 @ y2p2])

    y1p4, y2p4 = lift(r4, 1) @ x4s, lift(r4, 2) @ x4s

    y1 = np.concatenate([y1p1, y1p2, y1p3, y1p4])
    y2 = np.concatenate([y2p1, y2p2, y2p3, y2p4])
    return y1, y2


def recorded_output_stack(transcript: Transcript, rx: int) -> np.ndarray:
    """The receiver's recorded outputs stacked over all slots."""
    idx = 0 if rx == 1 else 1
    return np.concatenate([out[idx] for out in transcript.outputs])


def transcript_to_json(transcript: Transcript) -> str:
    """Audit serialization: identity, plan, precoder digests, slots, access log."""

    def digest(a):
        if a is None:
            return None
        return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()[:16]

    def pairs(vec):
        return [[float(z.real), float(z.imag)] for z in np.asarray(vec)]

    doc = {
        "scheme": transcript.scheme.value,
        "config": {"m": transcript.config.m, "n": transcript.config.n},
        "model": transcript.model.value,
        "seed": transcript.seed,
        "plan": {
            "phase_lengths": list(transcript.plan.phase_lengths),
            "symbols_per_receiver": transcript.plan.symbols_per_receiver,
        },
        "mutation": transcript.mutation,
        "tx1_only": transcript.tx1_only,
        "precoder_digests": {
            name: digest(getattr(transcript.precoders, name))
            for name in ("theta1", "theta2", "phi1", "phi2")
        },
        "selections": {k: list(v) for k, v in sorted(transcript.selections.items())},
        "slots": [
            {"x1": pairs(x1), "x2": pairs(x2), "y1": pairs(y1), "y2": pairs(y2)}
            for (x1, x2), (y1, y2) in zip(transcript.inputs, transcript.outputs)
        ],
        "access_log": [
            {
                "node": rec.node.value,
                "kind": rec.kind.value,
                "key": repr(rec.key),
                "at_slot": rec.at_slot,
                "granted": rec.granted,
            }
            for rec in transcript.access_log
        ],
    }
    return json.dumps(doc, separators=(",", ":"))
