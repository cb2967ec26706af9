"""B92 and BB84 session machinery: preparation, measurement, sifting, QBER.

B92 encodes bit 0 on |z+> and bit 1 on |x+>; Bob keeps only "minus"
outcomes and decodes x- as 0, z- as 1. He only ever announces that a
minus occurred, never its direction, so sifting consumes nothing but the
minus flag. BB84 uses the standard four-state encoding with basis
reconciliation.

Session transcripts are stored column-wise (one numpy array per field)
so statistics over 10^5-pulse sessions stay cheap; `records()` exposes
the same data as per-pulse values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .quantum import (
    QubitState,
    X_MINUS,
    X_PLUS,
    Z_MINUS,
    Z_PLUS,
    measurement_probs,
    state_label,
)
from .rng import RngStream

if TYPE_CHECKING:
    from .adversary import ChannelModel, EveStrategy


class ProtocolKind(Enum):
    B92 = "b92"
    BB84 = "bb84"


class EstimationError(ValueError):
    """Raised when error estimation is impossible (nothing sifted)."""


B92_ENCODING: dict[int, QubitState] = {0: Z_PLUS, 1: X_PLUS}
BB84_ENCODING: dict[tuple[str, int], QubitState] = {
    ("z", 0): Z_PLUS,
    ("z", 1): Z_MINUS,
    ("x", 0): X_PLUS,
    ("x", 1): X_MINUS,
}

BASIS_LABELS = ("z", "x")
EVE_ACTION_LABELS = ("passed", "measured-resent", "suppressed")
EVE_PASSED, EVE_MEASURED_RESENT, EVE_SUPPRESSED = 0, 1, 2


def alice_prepare(
    kind: ProtocolKind,
    bit: int,
    basis: str | None = None,
    encoding: dict | None = None,
) -> QubitState:
    """Alice's carrier state for one bit (plus a basis choice under BB84)."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    if kind is ProtocolKind.B92:
        table = encoding if encoding is not None else B92_ENCODING
        return table[bit]
    if basis not in BASIS_LABELS:
        raise ValueError(f"BB84 needs a basis in {BASIS_LABELS}, got {basis}")
    table = encoding if encoding is not None else BB84_ENCODING
    return table[(basis, bit)]


def bob_measure(kind: ProtocolKind, state: QubitState, rng: RngStream) -> tuple[str, str]:
    """Measure S_z or S_x uniformly at random; same procedure for both protocols.

    Returns (basis, outcome) with outcome "plus" or "minus".
    """
    del kind
    basis = BASIS_LABELS[rng.integers(2)]
    p_plus, _ = measurement_probs(state, basis)
    outcome = "plus" if rng.uniform() < p_plus else "minus"
    return basis, outcome


@dataclass(frozen=True)
class PulseRecord:
    """One end-to-end transmission event."""

    index: int
    alice_bit: int
    alice_basis: str | None
    sent_state: QubitState
    eve_action: str
    eve_forwarded: str | None
    arrived: bool
    bob_basis: str
    bob_outcome: str

    def __post_init__(self) -> None:
        if not self.arrived and self.bob_outcome != "null":
            raise ValueError("lost pulse must have a null outcome")
        if self.eve_action == "suppressed" and self.arrived:
            raise ValueError("suppressed pulse cannot arrive")


@dataclass
class SessionTranscript:
    """Column-wise record of one simulated session.

    `bob_minus` is meaningful only where `arrived` is True; lost pulses
    have outcome "null". Sifting and estimation fill in the key fields.
    """

    protocol: ProtocolKind
    channel: "ChannelModel"
    strategy: "EveStrategy"
    master_seed: int
    n_pulses: int
    alice_bits: np.ndarray
    alice_bases: np.ndarray | None
    sent_ids: np.ndarray
    state_table: tuple[QubitState, ...]
    eve_actions: np.ndarray
    forwarded_ids: np.ndarray
    arrived: np.ndarray
    bob_bases: np.ndarray
    bob_minus: np.ndarray
    sifted_indices: np.ndarray | None = None
    alice_key: np.ndarray | None = None
    bob_key: np.ndarray | None = None
    revealed_indices: np.ndarray | None = None
    qber: float | None = None
    state_labels: tuple[str, ...] = field(init=False)

    def __post_init__(self) -> None:
        self.state_labels = tuple(state_label(s) for s in self.state_table)

    def record(self, i: int) -> PulseRecord:
        forwarded = int(self.forwarded_ids[i])
        arrived = bool(self.arrived[i])
        if not arrived:
            outcome = "null"
        else:
            outcome = "minus" if self.bob_minus[i] else "plus"
        return PulseRecord(
            index=i,
            alice_bit=int(self.alice_bits[i]),
            alice_basis=None if self.alice_bases is None else BASIS_LABELS[self.alice_bases[i]],
            sent_state=self.state_table[self.sent_ids[i]],
            eve_action=EVE_ACTION_LABELS[self.eve_actions[i]],
            eve_forwarded=None if forwarded < 0 else self.state_labels[forwarded],
            arrived=arrived,
            bob_basis=BASIS_LABELS[self.bob_bases[i]],
            bob_outcome=outcome,
        )

    def records(self) -> list[PulseRecord]:
        return [self.record(i) for i in range(self.n_pulses)]

    @property
    def n_arrived(self) -> int:
        return int(np.sum(self.arrived))

    @property
    def n_null(self) -> int:
        return self.n_pulses - self.n_arrived


def sift(kind: ProtocolKind, transcript: SessionTranscript) -> np.ndarray:
    """Public sifting; fills the transcript's sifted indices and raw keys.

    B92 keeps exactly the minus outcomes (Bob decodes x- as 0, z- as 1).
    BB84 keeps arrived pulses whose bases matched (minus decodes as 1).
    """
    if kind is ProtocolKind.B92:
        mask = transcript.arrived & transcript.bob_minus
        bob_bits = np.where(transcript.bob_bases == 1, 0, 1)
    else:
        if transcript.alice_bases is None:
            raise ValueError("BB84 sifting needs Alice's basis column")
        mask = transcript.arrived & (transcript.bob_bases == transcript.alice_bases)
        bob_bits = transcript.bob_minus.astype(np.int8)
    indices = np.nonzero(mask)[0]
    transcript.sifted_indices = indices
    transcript.alice_key = transcript.alice_bits[indices].astype(np.int8)
    transcript.bob_key = bob_bits[indices].astype(np.int8)
    return indices


def _sample_without_replacement(m: int, k: int, rng: RngStream) -> list[int]:
    # partial Fisher-Yates: first k entries are a uniform k-subset of range(m)
    positions = list(range(m))
    for j in range(k):
        t = j + rng.integers(m - j)
        positions[j], positions[t] = positions[t], positions[j]
    return positions[:k]


def estimate_qber(
    transcript: SessionTranscript, reveal_fraction: float, rng: RngStream
) -> tuple[float, np.ndarray]:
    """Reveal a random key subsequence, estimate the error rate, discard it.

    Samples ceil(reveal_fraction * |sifted|) positions without
    replacement; the revealed bits are removed from both keys.
    """
    if not (0.0 < reveal_fraction <= 1.0):
        raise ValueError(f"reveal_fraction must be in (0, 1], got {reveal_fraction}")
    if transcript.sifted_indices is None:
        raise EstimationError("sift the transcript before estimating")
    m = len(transcript.sifted_indices)
    if m == 0:
        raise EstimationError("cannot estimate the error rate of an empty sifted key")
    k = math.ceil(reveal_fraction * m)
    positions = np.array(sorted(_sample_without_replacement(m, k, rng)), dtype=np.int64)
    disagreements = int(np.sum(transcript.alice_key[positions] != transcript.bob_key[positions]))
    qber = disagreements / k
    revealed = transcript.sifted_indices[positions]
    keep = np.ones(m, dtype=bool)
    keep[positions] = False
    transcript.alice_key = transcript.alice_key[keep]
    transcript.bob_key = transcript.bob_key[keep]
    transcript.revealed_indices = revealed
    transcript.qber = qber
    return qber, revealed
