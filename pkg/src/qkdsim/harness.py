"""Experiment configuration, execution, sweeps and machine-readable reports.

Configs are flat JSON documents with exactly the `ExperimentConfig`
field names; unknown fields are rejected so a typo cannot silently relax
a security experiment. Reports render as one key-sorted JSON document
(byte-identical for identical configs) or as CSV rows in a fixed column
order: config fields, then counts, then statistics, then test decisions,
then discrimination diagnostics.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .adversary import ChannelModel, EveStrategy, forwarded_state_symmetry
from .detection import TestDecision, expected_rates, null_ratio_test, qber_test
from .protocol import ProtocolKind, estimate_qber, sift
from .quantum import (
    Povm,
    QubitState,
    SX_POVM,
    SZ_POVM,
    X_PLUS,
    Z_PLUS,
    density_equal,
    mixture_density,
    random_povm,
    state_from_bloch,
)
from .rng import GENERATOR_NAME, RngStream, derive_seed
from .session import (
    STAGE_ESTIMATE,
    STAGE_SWEEP,
    protocol_states,
    pulse_stream,
    simulate_session,
)
from .usd import (
    UsdScheme,
    UsdSchemeKind,
    gram_matrix,
    idp_povm,
    inner_product,
    no_signaling_distributions,
    usd_efficiency,
    usd_feasible,
)

_HALF_PI = 1.5707963267948966


def _is_strict_int(value) -> bool:
    # bools are ints in Python; a config saying true is a mistake, not a 1
    return isinstance(value, int) and not isinstance(value, bool)


class ConfigurationError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class InfeasibleStrategyError(ValueError):
    """Strategy cannot exist against this protocol (CLI exit code 3)."""


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str
    n_pulses: int
    absorption: float = 0.0
    efficiency: float = 1.0
    eve_strategy: str = "none"
    usd_scheme: str = "naive"
    delta: float = 0.0
    reveal_fraction: float = 0.2
    alpha: float = 0.001
    qber_threshold: float = 0.0
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.protocol not in ("b92", "bb84"):
            raise ConfigurationError(f"unknown protocol {self.protocol!r}")
        if not _is_strict_int(self.n_pulses) or self.n_pulses < 1:
            raise ConfigurationError("n_pulses must be a positive integer")
        for name in ("absorption", "efficiency"):
            if not (0.0 <= getattr(self, name) <= 1.0):
                raise ConfigurationError(f"{name} must be in [0, 1]")
        if (1.0 - self.absorption) * self.efficiency <= 0.0:
            raise ConfigurationError("channel never delivers a pulse; nothing to test")
        if self.eve_strategy not in ("none", "intercept_resend", "usd_suppress", "basis_mismatch"):
            raise ConfigurationError(f"unknown eve_strategy {self.eve_strategy!r}")
        if self.usd_scheme not in ("naive", "optimal"):
            raise ConfigurationError(f"unknown usd_scheme {self.usd_scheme!r}")
        if not (0.0 <= self.delta < _HALF_PI):
            raise ConfigurationError("delta must be in [0, pi/2)")
        if not (0.0 < self.reveal_fraction <= 1.0):
            raise ConfigurationError("reveal_fraction must be in (0, 1]")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigurationError("alpha must be in (0, 1)")
        if not (0.0 <= self.qber_threshold <= 1.0):
            raise ConfigurationError("qber_threshold must be in [0, 1]")
        if not _is_strict_int(self.master_seed):
            raise ConfigurationError("master_seed must be an integer")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigurationError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        missing = {"protocol", "n_pulses"} - set(data)
        if missing:
            raise ConfigurationError(f"missing required config fields: {sorted(missing)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def protocol_kind(self) -> ProtocolKind:
        return ProtocolKind(self.protocol)

    def channel(self) -> ChannelModel:
        return ChannelModel(self.absorption, self.efficiency)

    def strategy(self) -> EveStrategy:
        if self.eve_strategy == "none":
            return EveStrategy.none()
        if self.eve_strategy == "intercept_resend":
            return EveStrategy.intercept_resend()
        scheme_kind = (
            UsdSchemeKind.NAIVE_RANDOM_BASIS
            if self.usd_scheme == "naive"
            else UsdSchemeKind.OPTIMAL_IDP
        )
        if self.eve_strategy == "usd_suppress":
            if scheme_kind is UsdSchemeKind.NAIVE_RANDOM_BASIS:
                return EveStrategy.usd_suppress(UsdScheme.naive())
            return EveStrategy.usd_suppress(UsdScheme.optimal())
        return EveStrategy.basis_mismatch(self.delta, scheme_kind)


@dataclass(frozen=True)
class RunReport:
    """Aggregated counts, statistics and test decisions for one session."""

    config: ExperimentConfig
    sent: int
    arrived: int
    null: int
    sifted: int
    revealed: int
    key_length: int
    sift_rate: float
    qber: float | None
    null_ratio: float | None
    expected_arrival: float
    expected_null_ratio: float
    qber_test: TestDecision | None
    null_ratio_test: TestDecision
    scheme_efficiency: float | None
    forwarded_z: int
    forwarded_x: int
    rng: str = GENERATOR_NAME

    def __post_init__(self) -> None:
        if self.arrived + self.null != self.sent:
            raise ValueError("inconsistent counts: arrived + null != sent")
        if self.sifted > self.arrived:
            raise ValueError("inconsistent counts: sifted > arrived")

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "counts": {
                "sent": self.sent,
                "arrived": self.arrived,
                "null": self.null,
                "sifted": self.sifted,
                "revealed": self.revealed,
                "key_length": self.key_length,
            },
            "statistics": {
                "sift_rate": self.sift_rate,
                "qber": self.qber,
                "null_ratio": self.null_ratio,
                "expected_arrival": self.expected_arrival,
                "expected_null_ratio": self.expected_null_ratio,
            },
            "tests": {
                "qber_test": None if self.qber_test is None else self.qber_test.to_dict(),
                "null_ratio_test": self.null_ratio_test.to_dict(),
            },
            "usd": {
                "scheme_efficiency": self.scheme_efficiency,
                "forwarded_z": self.forwarded_z,
                "forwarded_x": self.forwarded_x,
            },
            "rng": self.rng,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _check_feasibility(config: ExperimentConfig) -> None:
    """Fail fast when a discrimination attack cannot exist for the protocol."""
    if config.eve_strategy not in ("usd_suppress", "basis_mismatch"):
        return
    states = protocol_states(config.protocol_kind())
    if usd_feasible(states):
        return
    eigvals = np.linalg.eigvalsh(gram_matrix(states))
    rank = int(np.sum(eigvals > 1e-10))
    raise InfeasibleStrategyError(
        f"unambiguous discrimination of the {len(states)} {config.protocol} states "
        f"is impossible: Gram matrix rank {rank} < {len(states)}"
    )


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Run one full session and assemble its report.

    Deterministic given the config (including master_seed). Raises
    InfeasibleStrategyError for discrimination attacks on four-state
    protocols, before any pulse is simulated.
    """
    _check_feasibility(config)
    kind = config.protocol_kind()
    channel = config.channel()
    strategy = config.strategy()
    transcript = simulate_session(
        kind, config.n_pulses, channel, strategy, config.master_seed
    )
    sift(kind, transcript)
    n_sifted = len(transcript.sifted_indices)
    if n_sifted > 0:
        qber, revealed = estimate_qber(
            transcript,
            config.reveal_fraction,
            pulse_stream(config.master_seed, 0, STAGE_ESTIMATE),
        )
        n_revealed = len(revealed)
    else:
        qber, n_revealed = None, 0

    n_arrived = transcript.n_arrived
    n_null = transcript.n_null
    expected = expected_rates(channel)
    null_decision = null_ratio_test(config.n_pulses, n_null, expected, config.alpha)
    qber_decision = (
        qber_test(qber, n_revealed, config.qber_threshold) if n_revealed > 0 else None
    )
    count_z, count_x = forwarded_state_symmetry(transcript)
    efficiency = None if strategy.scheme is None else usd_efficiency(strategy.scheme)

    return RunReport(
        config=config,
        sent=config.n_pulses,
        arrived=n_arrived,
        null=n_null,
        sifted=n_sifted,
        revealed=n_revealed,
        key_length=0 if transcript.alice_key is None else len(transcript.alice_key),
        sift_rate=n_sifted / config.n_pulses,
        qber=qber,
        null_ratio=None if n_arrived == 0 else n_null / n_arrived,
        expected_arrival=expected.expected_arrival,
        expected_null_ratio=expected.expected_null_ratio,
        qber_test=qber_decision,
        null_ratio_test=null_decision,
        scheme_efficiency=efficiency,
        forwarded_z=count_z,
        forwarded_x=count_x,
    )


SWEEP_PARAMETERS = ("delta", "n_pulses", "absorption", "efficiency", "alpha")


def sweep(config: ExperimentConfig, parameter: str, values: list) -> list[RunReport]:
    """One report per value, with per-point seeds hashed from the base seed.

    Each point's seed is derived from (master_seed, value index) alone,
    so every report equals a standalone run at that derived seed; points
    share no state, and truncating the value list never changes the
    reports that remain.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigurationError(
            f"unknown sweep parameter {parameter!r}; choose from {SWEEP_PARAMETERS}"
        )
    reports = []
    for index, value in enumerate(values):
        point = replace(
            config,
            **{
                parameter: value,
                "master_seed": derive_seed(config.master_seed, index, STAGE_SWEEP),
            },
        )
        reports.append(run_experiment(point))
    return reports


def _complex_list(vector) -> list:
    return [[float(z.real), float(z.imag)] for z in vector]


def _complex_pairs(matrix: np.ndarray) -> list:
    return [_complex_list(row) for row in matrix]


def usd_check(angles: list[tuple[float, float]]) -> dict:
    """Feasibility report for 1 to 8 states given as (theta, phi) pairs."""
    if not (1 <= len(angles) <= 8):
        raise ConfigurationError("usd_check takes between 1 and 8 states")
    try:
        states = [state_from_bloch(theta, phi) for theta, phi in angles]
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    gram = gram_matrix(states)
    eigvals = np.linalg.eigvalsh(gram)
    feasible = usd_feasible(states)
    report = {
        "states": [
            {"theta": float(t), "phi": float(p), "amplitudes": _complex_list(s.vector)}
            for (t, p), s in zip(angles, states)
        ],
        "gram_matrix": _complex_pairs(gram),
        "gram_eigenvalues": [float(v) for v in eigvals],
        "gram_rank": int(np.sum(eigvals > 1e-10)),
        "feasible": bool(feasible),
        "optimal_conclusive_rate": None,
    }
    if feasible and len(states) == 2:
        report["optimal_conclusive_rate"] = 1.0 - abs(inner_product(states[0], states[1]))
    return report


def _direction_pair(theta: float, phi: float) -> tuple[QubitState, QubitState]:
    """The up and down states along one Bloch direction."""
    anti_phi = phi + math.pi
    if anti_phi >= 2.0 * math.pi:
        anti_phi -= 2.0 * math.pi
    return state_from_bloch(theta, phi), state_from_bloch(math.pi - theta, anti_phi)


def _demo_povm(name: str, seed: int) -> Povm:
    if name == "sz":
        return SZ_POVM
    if name == "sx":
        return SX_POVM
    if name == "idp":
        return idp_povm(Z_PLUS, X_PLUS)
    if name == "random":
        return random_povm(RngStream(seed))
    raise ConfigurationError(f"unknown POVM {name!r}; choose sz, sx, idp or random")


def no_signaling_demo(
    u: tuple[float, float] = (0.0, 0.0),
    u_prime: tuple[float, float] = (_HALF_PI, 0.0),
    povm_name: str = "random",
    seed: int = 0,
) -> dict:
    """Equal-mixture walkthrough: two decompositions, one POVM, no gap.

    Builds the 50/50 mixtures of the up/down pairs along two directions,
    checks their densities coincide, and shows that the chosen POVM's
    outcome distributions on the two mixtures agree to arithmetic noise.
    """
    pair_a = _direction_pair(*u)
    pair_b = _direction_pair(*u_prime)
    povm = _demo_povm(povm_name, seed)
    rho_a = mixture_density(pair_a, (0.5, 0.5))
    rho_b = mixture_density(pair_b, (0.5, 0.5))
    probs_a, probs_b, max_diff = no_signaling_distributions(
        povm, (pair_a, (0.5, 0.5)), (pair_b, (0.5, 0.5))
    )
    return {
        "direction_u": {"theta": u[0], "phi": u[1]},
        "direction_u_prime": {"theta": u_prime[0], "phi": u_prime[1]},
        "density_u": _complex_pairs(rho_a.matrix),
        "density_u_prime": _complex_pairs(rho_b.matrix),
        "densities_equal": density_equal(rho_a, rho_b, 1e-12),
        "povm": povm_name,
        "povm_elements": [_complex_pairs(e) for e in povm.elements],
        "distribution_u": [float(p) for p in probs_a],
        "distribution_u_prime": [float(p) for p in probs_b],
        "max_abs_difference": max_diff,
    }


# -- CSV rendering -----------------------------------------------------------

CSV_COLUMNS = (
    "protocol",
    "n_pulses",
    "absorption",
    "efficiency",
    "eve_strategy",
    "usd_scheme",
    "delta",
    "reveal_fraction",
    "alpha",
    "qber_threshold",
    "master_seed",
    "sent",
    "arrived",
    "null",
    "sifted",
    "revealed",
    "key_length",
    "sift_rate",
    "qber",
    "null_ratio",
    "expected_arrival",
    "expected_null_ratio",
    "qber_test_statistic",
    "qber_test_p_value",
    "qber_test_flagged",
    "qber_test_alpha",
    "null_ratio_test_statistic",
    "null_ratio_test_p_value",
    "null_ratio_test_flagged",
    "null_ratio_test_alpha",
    "scheme_efficiency",
    "forwarded_z",
    "forwarded_x",
    "rng",
)


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_csv_rows(reports: list[RunReport]) -> list[str]:
    """Header line plus one line per report, in CSV_COLUMNS order."""
    lines = [",".join(CSV_COLUMNS)]
    for report in reports:
        flat = dict(report.config.to_dict())
        flat.update(
            sent=report.sent,
            arrived=report.arrived,
            null=report.null,
            sifted=report.sifted,
            revealed=report.revealed,
            key_length=report.key_length,
            sift_rate=report.sift_rate,
            qber=report.qber,
            null_ratio=report.null_ratio,
            expected_arrival=report.expected_arrival,
            expected_null_ratio=report.expected_null_ratio,
            scheme_efficiency=report.scheme_efficiency,
            forwarded_z=report.forwarded_z,
            forwarded_x=report.forwarded_x,
            rng=report.rng,
        )
        for prefix, decision in (
            ("qber_test", report.qber_test),
            ("null_ratio_test", report.null_ratio_test),
        ):
            for attr in ("statistic", "p_value", "flagged", "alpha"):
                flat[f"{prefix}_{attr}"] = None if decision is None else getattr(decision, attr)
        lines.append(",".join(_csv_cell(flat[c]) for c in CSV_COLUMNS))
    return lines
