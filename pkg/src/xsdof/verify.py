"""Executable security analysis: rank identities and a subspace oracle.

Two independent formalizations of the zero-leakage claim are provided.

:func:`secrecy_rank_report` assembles the stacked matrices of the scheme's
security analysis from the transcript's lifted channel blocks and precoders:
the *rate* matrix (whose rank counts the equations a legitimate receiver can
use) and the *leakage* matrix (whose full rank certifies that everything the
eavesdropping receiver sees about the other receiver's symbols is already
explained by the injected noise).

:func:`equivocation_subspace_check` never assembles those identities.  It
reads off the eavesdropper's observation as an explicit linear map of the
symbol groups (by replaying the run with identity-matrix symbols) and tests
column-space containment directly: conditioned on its own messages, the
secret symbols' columns must lie inside the noise columns' span, so any
secret value is explainable by some noise realization.

Leakage is verified structurally, not by Monte Carlo mutual-information
estimation: at the infinite-SNR scale the secrecy claim *is* a rank
identity, and a finite-sample estimator would add noise without evidence.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import matcore, schemes
from .channel import lift_phase, lift_rows
from .errors import DecodeFailure, InvalidInput
from .knowledge import Node
from .schemes import SchemeId, Transcript, selection_matrix


@dataclass(frozen=True)
class SecrecyReport:
    """Rank-identity audit of one transcript.

    ``rate_rank_*`` should reach ``rate_target`` (the per-receiver symbol
    count); ``leak_defect_*`` is the rank the leakage identity fell short
    by, zero meaning no leakage at the degrees-of-freedom scale.  Reports
    for schemes whose security analysis the source constructions do not
    state in closed rank form (C, and E which claims no secrecy at all) are
    flagged ``advisory``.
    """

    scheme: SchemeId
    rate_rank_rx1: int
    rate_rank_rx2: int
    rate_target: int
    leak_defect_rx1: int
    leak_defect_rx2: int
    advisory: bool
    matrices_audited: tuple
    rel_tol: float

    def to_jsonable(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "rate_rank_rx1": self.rate_rank_rx1,
            "rate_rank_rx2": self.rate_rank_rx2,
            "rate_target": self.rate_target,
            "leak_defect_rx1": self.leak_defect_rx1,
            "leak_defect_rx2": self.leak_defect_rx2,
            "advisory": self.advisory,
            "matrices_audited": [
                {"name": name, "rows": r, "cols": c} for name, r, c in self.matrices_audited
            ],
        }


def _phase_lifts(transcript: Transcript):
    """Lifted per-phase row maps ``H_p`` (receiver 1) and ``G_p`` (receiver 2)."""
    m = transcript.config.effective_m
    ranges = transcript.phase_ranges()
    states = transcript.states
    h, g = {}, {}
    for p, slots in enumerate(ranges, start=1):
        if not slots:
            continue
        phase_states = [states[t] for t in slots]
        h[p] = lift_rows(phase_states, 1, m)
        g[p] = lift_rows(phase_states, 2, m)
    return h, g


def secrecy_rank_report(transcript: Transcript, rel_tol: float = matcore.DEFAULT_REL_TOL) -> SecrecyReport:
    """Compute the rate and leakage rank identities for a transcript.

    The leakage matrix for the eavesdropper on receiver ``j``'s symbols
    stacks that eavesdropper's phase-1 map on the noise with the noise
    mixing it sees during phase ``j+1``; its rank is compared against the
    full ``n*(t1+t2)`` rows.  Rate matrices stack the legitimate receiver's
    fresh-phase map with the retransmitted side-information map.
    """
    transcript.check_complete()
    cfg = transcript.config
    m, n = cfg.effective_m, cfg.n
    r1, r2, r3, r4 = transcript.phase_ranges()
    t1, t2 = len(r1), len(r2)
    prec = transcript.precoders
    h, g = _phase_lifts(transcript)
    scheme = transcript.scheme
    states4 = [transcript.states[t] for t in r4]

    audited = []

    def noted(name, mat):
        audited.append((name, mat.shape[0], mat.shape[1]))
        return mat

    # --- rate identities -------------------------------------------------
    if scheme in (SchemeId.A, SchemeId.D, SchemeId.E):
        s2 = selection_matrix(n * t2, transcript.selections["side_info_rx2"])
        s3 = selection_matrix(n * t2, transcript.selections["side_info_rx1"])
        rate1 = noted("rate_rx1", np.vstack([h[2], h[4] @ prec.phi1 @ s2 @ g[2]]))
        rate2 = noted("rate_rx2", np.vstack([g[3], g[4] @ prec.phi2 @ s3 @ h[3]]))
        rate_target = 2 * m * t2
    elif scheme is SchemeId.B:
        h12_4 = lift_phase(states4, (1, 2), m)
        h21_4 = lift_phase(states4, (2, 1), m)
        rate1 = noted("rate_rx1", np.vstack([h[2], h12_4 @ prec.phi1 @ g[2]]))
        rate2 = noted("rate_rx2", np.vstack([g[3], h21_4 @ prec.phi2 @ h[3]]))
        rate_target = 2 * n
    elif transcript.tx1_only:
        s2 = selection_matrix(n * t2, transcript.selections["side_info_rx2"])
        s3 = selection_matrix(n * t2, transcript.selections["side_info_rx1"])
        h11_4 = lift_phase(states4, (1, 1), m)
        h21_4 = lift_phase(states4, (2, 1), m)
        rate1 = noted("rate_rx1", np.vstack([h[2], h11_4 @ prec.phi1 @ s2 @ g[2]]))
        rate2 = noted("rate_rx2", np.vstack([g[3], h21_4 @ prec.phi2 @ s3 @ h[3]]))
        rate_target = 2 * m * t2
    else:  # scheme C
        h12_4 = lift_phase(states4, (1, 2), m)
        h21_4 = lift_phase(states4, (2, 1), m)
        rate1 = noted("rate_rx1", np.vstack([h[2], h12_4 @ prec.phi1 @ g[2]]))
        rate2 = noted("rate_rx2", np.vstack([g[3], h21_4 @ prec.phi2 @ h[3]]))
        rate_target = 2 * m * t2

    # --- leakage identities ----------------------------------------------
    leak_rows = n * (t1 + t2)
    if t1 == 0:
        # no noise phase: the mixing map has no columns at all
        defect_rx2 = leak_rows
        defect_rx1 = leak_rows
        audited.append(("leak_rx2", leak_rows, 0))
        audited.append(("leak_rx1", leak_rows, 0))
    else:
        if scheme in (SchemeId.A, SchemeId.D):
            mix_rx2 = g[2] @ prec.theta1 @ h[1]
            mix_rx1 = h[3] @ prec.theta2 @ g[1]
        elif scheme is SchemeId.B:
            states2 = [transcript.states[t] for t in r2]
            states3 = [transcript.states[t] for t in r3]
            mix_rx2 = lift_phase(states2, (2, 1), m) @ prec.theta1 @ h[1]
            mix_rx1 = lift_phase(states3, (1, 2), m) @ prec.theta2 @ g[1]
        else:  # scheme C; in tx1-only mode transmitter 1 carries both mixers
            states2 = [transcript.states[t] for t in r2]
            states3 = [transcript.states[t] for t in r3]
            mixer_block = (1, 1) if transcript.tx1_only else (1, 2)
            mix_rx2 = lift_phase(states2, (2, 1), m) @ prec.theta1 @ h[1]
            mix_rx1 = lift_phase(states3, mixer_block, m) @ prec.theta2 @ g[1]
        leak2 = noted("leak_rx2", np.vstack([g[1], mix_rx2]))
        leak1 = noted("leak_rx1", np.vstack([h[1], mix_rx1]))
        defect_rx2 = leak_rows - matcore.rank_value(leak2, rel_tol)
        defect_rx1 = leak_rows - matcore.rank_value(leak1, rel_tol)

    return SecrecyReport(
        scheme=scheme,
        rate_rank_rx1=matcore.rank_value(rate1, rel_tol),
        rate_rank_rx2=matcore.rank_value(rate2, rel_tol),
        rate_target=rate_target,
        leak_defect_rx1=defect_rx1,
        leak_defect_rx2=defect_rx2,
        advisory=scheme in (SchemeId.C, SchemeId.E),
        matrices_audited=tuple(audited),
        rel_tol=rel_tol,
    )


def observation_maps(transcript: Transcript, receiver: Node):
    """Coefficient maps ``(A_u, A_v1, A_v2)`` of a receiver's full observation.

    Obtained by replaying the run with identity-matrix symbol groups, so the
    result is independent of the rank-identity assembly above.
    """
    if receiver not in (Node.RX1, Node.RX2):
        raise InvalidInput("observation_maps expects a receiver node")
    sym = transcript.symbols
    dims = {"u": len(sym.u), "v1": len(sym.v1), "v2": len(sym.v2)}

    def response_for(active: str):
        groups = {
            name: np.eye(d, dtype=complex) if name == active else np.zeros((d, dims[active]), complex)
            for name, d in dims.items()
        }
        y1, y2 = schemes.linear_response(transcript, u=groups["u"], v1=groups["v1"], v2=groups["v2"])
        return y1 if receiver is Node.RX1 else y2

    return response_for("u"), response_for("v1"), response_for("v2")


def equivocation_subspace_check(
    transcript: Transcript,
    eavesdropper: Node,
    rel_tol: float = matcore.DEFAULT_REL_TOL,
) -> bool:
    """Column-space containment oracle for zero leakage.

    Conditioned on the eavesdropper's own messages, the other receiver's
    symbols must enter its observation only inside the noise columns' span.
    Returns True iff ``rank([noise cols]) == rank([noise cols | secret
    cols])``.
    """
    transcript.check_complete()
    a_u, a_v1, a_v2 = observation_maps(transcript, eavesdropper)
    secret = a_v1 if eavesdropper is Node.RX2 else a_v2
    base = matcore.rank_value(a_u, rel_tol) if a_u.shape[1] else 0
    joint = matcore.rank_value(np.hstack([a_u, secret]), rel_tol)
    return joint == base


def decode_error(transcript: Transcript, receiver: Node) -> float:
    """Relative error of the decoded symbols against the sent ground truth."""
    decoded = schemes.decode(transcript, receiver)
    sent = transcript.symbols.v1 if receiver is Node.RX1 else transcript.symbols.v2
    return float(np.linalg.norm(decoded - sent) / max(np.linalg.norm(sent), 1e-300))


def empirical_dof(transcript: Transcript) -> tuple[Fraction, Fraction]:
    """Symbols recovered per slot, as an exact rational pair.

    Decodes both receivers against the transcript's ground truth first;
    a residual above tolerance propagates as :class:`DecodeFailure`.
    """
    for receiver in (Node.RX1, Node.RX2):
        err = decode_error(transcript, receiver)
        if err > schemes.DECODE_TOL:
            raise DecodeFailure(
                f"{receiver.value} decoded with relative error {err:.3e}"
            )
    budget = transcript.plan.symbols_per_receiver
    horizon = transcript.horizon
    return Fraction(budget, horizon), Fraction(budget, horizon)


def replay_matches_recorded(transcript: Transcript, tol: float = 1e-9) -> bool:
    """Cross-check: the closed-form linear replay reproduces the recorded run."""
    y1, y2 = schemes.linear_response(transcript)
    for rx, stack in ((1, y1), (2, y2)):
        recorded = schemes.recorded_output_stack(transcript, rx)
        scale = max(float(np.linalg.norm(recorded)), 1.0)
        if float(np.linalg.norm(stack - recorded)) > tol * scale:
            return False
    return True


@dataclass(frozen=True)
class MutantOutcome:
    """What the verifier saw on one adversarial variant of scheme A."""

    mutation: str
    decode_failed: bool
    leak_defect_rx1: int
    leak_defect_rx2: int
    oracle_rx1: bool
    oracle_rx2: bool

    @property
    def caught(self) -> bool:
        return (
            self.decode_failed
            or self.leak_defect_rx1 > 0
            or self.leak_defect_rx2 > 0
            or not self.oracle_rx1
            or not self.oracle_rx2
        )


def run_mutant(config, seed: int, mutation: str) -> MutantOutcome:
    """Run one mutated scheme-A trial and report every verifier signal."""
    transcript = schemes.run(SchemeId.A, config, seed=seed, mutation=mutation)
    decode_failed = False
    try:
        for receiver in (Node.RX1, Node.RX2):
            if decode_error(transcript, receiver) > schemes.DECODE_TOL:
                decode_failed = True
    except Exception:  # SingularSystem, IllConditioned, DecodeFailure
        decode_failed = True
    report = secrecy_rank_report(transcript)
    return MutantOutcome(
        mutation=mutation,
        decode_failed=decode_failed,
        leak_defect_rx1=report.leak_defect_rx1,
        leak_defect_rx2=report.leak_defect_rx2,
        oracle_rx1=equivocation_subspace_check(transcript, Node.RX1),
        oracle_rx2=equivocation_subspace_check(transcript, Node.RX2),
    )
