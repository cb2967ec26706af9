"""End-to-end pulse pipeline: Alice -> Eve -> channel -> Bob.

Randomness contract: every pulse gets one substream per stage, seeded by
a stable hash of (master_seed, pulse index, stage tag), and each stage
consumes draws from its own substream in a fixed order:

    alice:   draw 0 bit, draw 1 basis (BB84 only)
    eve:     strategy dependent, at most draws 0..1
    channel: draw 0 loss
    bob:     draw 0 basis, draw 1 outcome

Because no stage ever touches another pulse's stream, the whole session
is computed here as numpy array operations over all pulses at once while
remaining draw-for-draw identical to a Python loop over `RngStream`
substreams (the equivalence is pinned by tests). Transcripts are pure
functions of (configuration, master seed) either way.
"""

from __future__ import annotations

import numpy as np

from .adversary import ChannelModel, EveKind, EveStrategy
from .protocol import (
    EVE_MEASURED_RESENT,
    EVE_PASSED,
    EVE_SUPPRESSED,
    ProtocolKind,
    SessionTranscript,
)
from .quantum import (
    QubitState,
    X_MINUS,
    X_PLUS,
    Z_MINUS,
    Z_PLUS,
    born_probabilities,
    measurement_probs,
)
from .rng import RngStream, derive_seed, derive_seed_array, uniform_array
from .usd import UsdSchemeKind, idp_povm, naive_frame_povms

STAGE_ALICE = 0
STAGE_EVE = 1
STAGE_CHANNEL = 2
STAGE_BOB = 3
STAGE_ESTIMATE = 4
STAGE_SWEEP = 5


def pulse_stream(master_seed: int, index: int, stage: int) -> RngStream:
    """The substream a given pulse and stage draw from."""
    return RngStream(derive_seed(master_seed, index, stage))


def protocol_states(kind: ProtocolKind) -> tuple[QubitState, ...]:
    if kind is ProtocolKind.B92:
        return (Z_PLUS, X_PLUS)
    return (Z_PLUS, Z_MINUS, X_PLUS, X_MINUS)


def _coin(u: np.ndarray) -> np.ndarray:
    # matches RngStream.integers(2): min(int(u * 2), 1)
    return np.minimum((u * 2.0).astype(np.int64), 1)


def _build_state_table(
    kind: ProtocolKind, strategy: EveStrategy
) -> tuple[tuple[QubitState, ...], dict[QubitState, int]]:
    ordered: dict[QubitState, int] = {}
    candidates = list(protocol_states(kind))
    if strategy.kind is EveKind.INTERCEPT_RESEND:
        candidates += [Z_PLUS, Z_MINUS, X_PLUS, X_MINUS]
    elif strategy.scheme is not None:
        candidates += list(strategy.scheme.states())
    for state in candidates:
        if state not in ordered:
            ordered[state] = len(ordered)
    table = tuple(ordered)
    return table, ordered


def _eve_stage(
    strategy: EveStrategy,
    sent_ids: np.ndarray,
    ids: dict[QubitState, int],
    p_plus: np.ndarray,
    seeds: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Forwarded state ids (-1 for suppressed) and action codes."""
    n = sent_ids.shape[0]
    if strategy.kind is EveKind.NONE:
        return sent_ids.copy(), np.full(n, EVE_PASSED, dtype=np.int8)

    if strategy.kind is EveKind.INTERCEPT_RESEND:
        basis = _coin(uniform_array(seeds, 0))
        plus = uniform_array(seeds, 1) < p_plus[sent_ids, basis]
        eig_ids = np.array(
            [[ids[Z_PLUS], ids[Z_MINUS]], [ids[X_PLUS], ids[X_MINUS]]], dtype=np.int64
        )
        forwarded = eig_ids[basis, np.where(plus, 0, 1)]
        return forwarded, np.full(n, EVE_MEASURED_RESENT, dtype=np.int8)

    scheme = strategy.scheme
    scheme_ids = np.array([ids[scheme.state0], ids[scheme.state1]], dtype=np.int64)
    table = tuple(ids)

    if scheme.kind is UsdSchemeKind.NAIVE_RANDOM_BASIS:
        frames = naive_frame_povms(scheme.rotation)
        frame_plus = np.array(
            [[born_probabilities(s, f)[0] for f in frames] for s in table]
        )
        frame = _coin(uniform_array(seeds, 0))
        conclusive = uniform_array(seeds, 1) >= frame_plus[sent_ids, frame]
        identified = np.where(frame == 0, 1, 0)
    else:
        povm = idp_povm(scheme.state0, scheme.state1)
        probs = np.array([born_probabilities(s, povm) for s in table])
        cum0 = probs[:, 0]
        cum1 = probs[:, 0] + probs[:, 1]
        u = uniform_array(seeds, 0)
        conclusive0 = u < cum0[sent_ids]
        conclusive1 = ~conclusive0 & (u < cum1[sent_ids])
        conclusive = conclusive0 | conclusive1
        identified = np.where(conclusive0, 0, 1)

    forwarded = np.where(conclusive, scheme_ids[identified], -1)
    actions = np.where(conclusive, EVE_MEASURED_RESENT, EVE_SUPPRESSED).astype(np.int8)
    return forwarded, actions


def simulate_session(
    kind: ProtocolKind,
    n_pulses: int,
    channel: ChannelModel,
    strategy: EveStrategy,
    master_seed: int,
) -> SessionTranscript:
    """Simulate one session; deterministic given (arguments, master seed)."""
    if n_pulses < 1:
        raise ValueError("n_pulses must be at least 1")
    table, ids = _build_state_table(kind, strategy)
    p_plus = np.array([[measurement_probs(s, b)[0] for b in ("z", "x")] for s in table])
    idx = np.arange(n_pulses, dtype=np.uint64)

    seeds_alice = derive_seed_array(master_seed, idx, STAGE_ALICE)
    bits = _coin(uniform_array(seeds_alice, 0)).astype(np.int8)
    if kind is ProtocolKind.B92:
        alice_bases = None
        sent_ids = np.where(bits == 0, ids[Z_PLUS], ids[X_PLUS])
    else:
        alice_bases = _coin(uniform_array(seeds_alice, 1)).astype(np.int8)
        encode = np.array(
            [[ids[Z_PLUS], ids[Z_MINUS]], [ids[X_PLUS], ids[X_MINUS]]], dtype=np.int64
        )
        sent_ids = encode[alice_bases, bits]

    seeds_eve = derive_seed_array(master_seed, idx, STAGE_EVE)
    forwarded_ids, eve_actions = _eve_stage(strategy, sent_ids, ids, p_plus, seeds_eve)

    seeds_channel = derive_seed_array(master_seed, idx, STAGE_CHANNEL)
    lost = uniform_array(seeds_channel, 0) < channel.loss_probability
    arrived = (forwarded_ids >= 0) & ~lost

    seeds_bob = derive_seed_array(master_seed, idx, STAGE_BOB)
    bob_bases = _coin(uniform_array(seeds_bob, 0)).astype(np.int8)
    safe_ids = np.maximum(forwarded_ids, 0)
    plus_prob = p_plus[safe_ids, bob_bases]
    bob_minus = arrived & (uniform_array(seeds_bob, 1) >= plus_prob)

    return SessionTranscript(
        protocol=kind,
        channel=channel,
        strategy=strategy,
        master_seed=master_seed,
        n_pulses=n_pulses,
        alice_bits=bits,
        alice_bases=alice_bases,
        sent_ids=sent_ids.astype(np.int16),
        state_table=table,
        eve_actions=eve_actions,
        forwarded_ids=forwarded_ids.astype(np.int16),
        arrived=arrived,
        bob_bases=bob_bases,
        bob_minus=bob_minus,
    )
