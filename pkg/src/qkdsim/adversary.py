"""The lossy channel and Eve's strategies.

Eve sits at Alice's output, before the lossy channel, so any pulse she
suppresses reaches Bob as an ordinary missing detection. The suppress
strategy runs an unambiguous measurement and forwards an exact copy of
the identified protocol state on conclusive outcomes, nothing otherwise;
it produces zero sifted-key errors by construction and shows up only in
the null rate. The basis-mismatch variant is the same strategy run in a
frame rotated by delta, forwarding Eve's conjectured states.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .protocol import SessionTranscript
from .quantum import (
    QubitState,
    X_MINUS,
    X_PLUS,
    Z_MINUS,
    Z_PLUS,
    measurement_probs,
    rotate_y,
    state_label,
)
from .rng import RngStream
from .usd import UsdScheme, UsdSchemeKind, usd_measure

_HALF_PI = 1.5707963267948966


@dataclass(frozen=True)
class ChannelModel:
    """Per-pulse absorption plus detector efficiency; no noise on survivors."""

    absorption: float = 0.0
    efficiency: float = 1.0

    def __post_init__(self) -> None:
        for name in ("absorption", "efficiency"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {value}")

    @property
    def loss_probability(self) -> float:
        return self.absorption + (1.0 - self.absorption) * (1.0 - self.efficiency)


class EveKind(Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept_resend"
    USD_SUPPRESS = "usd_suppress"
    BASIS_MISMATCH = "basis_mismatch"


@dataclass(frozen=True)
class EveStrategy:
    kind: EveKind
    scheme: UsdScheme | None = None
    delta: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.delta < _HALF_PI):
            raise ValueError(f"delta must be in [0, pi/2), got {self.delta}")
        if self.kind in (EveKind.USD_SUPPRESS, EveKind.BASIS_MISMATCH) and self.scheme is None:
            raise ValueError(f"{self.kind.value} needs a discrimination scheme")

    @classmethod
    def none(cls) -> "EveStrategy":
        return cls(EveKind.NONE)

    @classmethod
    def intercept_resend(cls) -> "EveStrategy":
        return cls(EveKind.INTERCEPT_RESEND)

    @classmethod
    def usd_suppress(cls, scheme: UsdScheme | None = None) -> "EveStrategy":
        return cls(EveKind.USD_SUPPRESS, scheme if scheme is not None else UsdScheme.naive())

    @classmethod
    def basis_mismatch(
        cls, delta: float, scheme_kind: UsdSchemeKind = UsdSchemeKind.NAIVE_RANDOM_BASIS
    ) -> "EveStrategy":
        """Suppression attack under a conjectured pair rotated by delta."""
        if scheme_kind is UsdSchemeKind.NAIVE_RANDOM_BASIS:
            scheme = UsdScheme.naive(delta)
        else:
            scheme = UsdScheme.optimal(rotate_y(Z_PLUS, delta), rotate_y(X_PLUS, delta))
        return cls(EveKind.BASIS_MISMATCH, scheme, delta)


@dataclass(frozen=True)
class EveLog:
    """What Eve did to one pulse."""

    action: str
    forwarded: str | None
    conclusive: int | None


_EIGENSTATES = {"z": (Z_PLUS, Z_MINUS), "x": (X_PLUS, X_MINUS)}


def channel_transmit(
    state: QubitState, channel: ChannelModel, rng: RngStream
) -> QubitState | None:
    """Pass the state through the channel; None means the pulse was lost."""
    if rng.uniform() < channel.loss_probability:
        return None
    return state


def eve_apply(
    strategy: EveStrategy, state: QubitState, rng: RngStream
) -> tuple[QubitState | None, EveLog]:
    """Apply Eve's strategy to one pulse; None means she sent nothing."""
    if strategy.kind is EveKind.NONE:
        return state, EveLog("passed", state_label(state), None)
    if strategy.kind is EveKind.INTERCEPT_RESEND:
        basis = "z" if rng.integers(2) == 0 else "x"
        p_plus, _ = measurement_probs(state, basis)
        resent = _EIGENSTATES[basis][0 if rng.uniform() < p_plus else 1]
        return resent, EveLog("measured-resent", state_label(resent), None)
    outcome = usd_measure(strategy.scheme, state, rng)
    if outcome.conclusive:
        forwarded = strategy.scheme.states()[outcome.identified]
        return forwarded, EveLog("measured-resent", state_label(forwarded), outcome.identified)
    return None, EveLog("suppressed", None, None)


def forwarded_state_symmetry(transcript: SessionTranscript) -> tuple[int, int]:
    """Counts of |z+> vs |x+> among the pulses Eve actually forwarded."""
    forwarded = transcript.forwarded_ids
    labels = transcript.state_labels
    count_z = count_x = 0
    counts = np.bincount(forwarded[forwarded >= 0], minlength=len(labels))
    for state_id, label in enumerate(labels):
        if label == "z+":
            count_z += int(counts[state_id])
        elif label == "x+":
            count_x += int(counts[state_id])
    return count_z, count_x
