"""Event-ready experiment loop: attempts, heralds, choices, readout, logging.

Each trial begins with a geometrically distributed number of entanglement
generation attempts (success probability composed from the pattern
probability and the per-arm link budget). On the heralding attempt both
nodes draw a basis bit through the parity extractor, read their spin out in
the chosen basis, and the timestamps of the choice, herald, and readout
completion are synthesised from the timing budget with a configurable jitter.

Every logged trial carries all of a, b, x, y: there is no no-answer branch
anywhere, so discarded-trial selection effects cannot arise by construction.
Trials are strictly sequential; replicas of a whole experiment may run in
parallel with independently derived seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SimulationConfig, config_hash
from .randomness import RngModel, raw_bits, xor_extract
from .readout import measure_in_basis, rotated_povm
from .spacetime import SpacetimeEvent

OUTCOME_PAIRS = ((+1, +1), (+1, -1), (-1, +1), (-1, -1))


class EngineError(ValueError):
    """Invalid engine input or exhausted budget."""


@dataclass(frozen=True)
class TrialRecord:
    """One event-ready Bell trial; all four values are always present.

    Timestamps are nanoseconds in a common frame whose origin is the start
    of the successful entanglement attempt.
    """

    idx: int
    a: int
    b: int
    x: int
    y: int
    t_herald_ns: float
    t_choice_a_ns: float
    t_choice_b_ns: float
    t_read_done_a_ns: float
    t_read_done_b_ns: float
    attempts: int

    def __post_init__(self):
        if self.a not in (0, 1) or self.b not in (0, 1):
            raise EngineError(f"settings must be bits, got a={self.a}, b={self.b}")
        if self.x not in (-1, 1) or self.y not in (-1, 1):
            raise EngineError(f"outcomes must be +-1, got x={self.x}, y={self.y}")
        if self.attempts < 1:
            raise EngineError("attempt count must be >= 1")
        if not (self.t_choice_a_ns < self.t_read_done_a_ns
                and self.t_choice_b_ns < self.t_read_done_b_ns):
            raise EngineError("per-site ordering violated: choice must precede readout end")


@dataclass
class TrialLog:
    """Append-only sequence of trials plus the metadata to re-run them.

    ``seed`` is the master seed as given: an integer for a plain run, or a
    (master, replica) pair for one replica of a parallel batch.
    """

    config_hash: str
    seed: int | tuple
    records: list[TrialRecord] = field(default_factory=list)
    partial: bool = False
    created: str | None = None
    format_version: int = 1

    def append(self, record: TrialRecord) -> None:
        if record.idx != len(self.records):
            raise EngineError(
                f"record index {record.idx} breaks the append-only sequence "
                f"(expected {len(self.records)})"
            )
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)


def herald_probability(link, pattern_probability: float = 0.25) -> float:
    """Herald probability per attempt: pattern probability times both arms.

    Each arm multiplies collection efficiency, fibre transmission
    10^(-loss_db_per_km * km / 10), and detector efficiency. A configured
    ``herald_probability`` bypasses the budget composition entirely.
    """
    direct = getattr(link, "herald_probability", None)
    if direct is not None:
        if not 0.0 < direct <= 1.0:
            raise EngineError(f"herald probability {direct} outside (0, 1]")
        return float(direct)
    if not 0.0 <= pattern_probability <= 1.0:
        raise EngineError("pattern probability must be in [0, 1]")
    transmission = 10.0 ** (-link.loss_db_per_km * link.fibre_km_per_arm / 10.0)
    arm = link.collection_efficiency * transmission * link.detector_efficiency
    if not 0.0 <= arm <= 1.0:
        raise EngineError(f"per-arm efficiency {arm} outside [0, 1]")
    return pattern_probability * arm * arm


@dataclass
class TrialStreams:
    """Independent random streams, one per sampling purpose."""

    settings_a: np.random.Generator
    settings_b: np.random.Generator
    outcomes: np.random.Generator
    timing: np.random.Generator
    attempts: np.random.Generator

    @classmethod
    def from_seed(cls, seed) -> "TrialStreams":
        children = np.random.SeedSequence(seed).spawn(5)
        return cls(*(np.random.default_rng(c) for c in children))


def replica_seed(master_seed: int, replica: int):
    """Derived seed for one replica of the experiment."""
    return (master_seed, replica)


def _setting_bit(model: RngModel, rng: np.random.Generator) -> int:
    return xor_extract(model, raw_bits(model, model.raw_bits_per_output, rng))


def outcome_distribution(cfg: SimulationConfig) -> np.ndarray:
    """P[a, b, outcome-pair] over OUTCOME_PAIRS from the heralded state.

    Born probabilities of the two commuting one-sided POVMs; identical to
    measuring the sides one after the other.
    """
    rho = cfg.heralded_state().spin_state.density_matrix()
    basis = cfg.basis_set()
    model_a = cfg.readout_model("A")
    model_b = cfg.readout_model("B")
    table = np.zeros((2, 2, 4))
    for a in (0, 1):
        ea = rotated_povm(model_a, basis.angle("A", a))
        for b in (0, 1):
            eb = rotated_povm(model_b, basis.angle("B", b))
            for i, (x, y) in enumerate(OUTCOME_PAIRS):
                eff = np.kron(ea[0 if x == 1 else 1], eb[0 if y == 1 else 1])
                table[a, b, i] = max(0.0, float(np.real(np.trace(rho @ eff))))
            table[a, b] /= table[a, b].sum()
    return table


def _timestamps(cfg: SimulationConfig, timing_rng: np.random.Generator) -> dict[str, float]:
    t = cfg.timing
    jitter = timing_rng.uniform(-t.jitter_ns, t.jitter_ns, size=5) if t.jitter_ns > 0 \
        else np.zeros(5)
    t_choice_a = t.choice_delay_ns + jitter[0]
    t_choice_b = t.choice_delay_ns + jitter[1]
    return {
        "t_herald_ns": cfg.herald_delay_ns() + jitter[2],
        "t_choice_a_ns": t_choice_a,
        "t_choice_b_ns": t_choice_b,
        "t_read_done_a_ns": t_choice_a + t.choice_to_readout_ns + t.readout_duration_ns + jitter[3],
        "t_read_done_b_ns": t_choice_b + t.choice_to_readout_ns + t.readout_duration_ns + jitter[4],
    }


def run_trial(cfg: SimulationConfig, idx: int, streams: TrialStreams,
              force_settings: tuple[int, int] | None = None) -> TrialRecord:
    """One event-ready trial, sampled with sequential readout collapse."""
    p = herald_probability(cfg.link)
    attempts = int(streams.attempts.geometric(p))
    if force_settings is not None:
        a, b = force_settings
    else:
        a = _setting_bit(cfg.rng, streams.settings_a)
        b = _setting_bit(cfg.rng, streams.settings_b)
    basis = cfg.basis_set()
    state = cfg.heralded_state().spin_state
    x, post = measure_in_basis(state, basis.angle("A", a), cfg.readout_model("A"),
                               streams.outcomes, subsystem="spin_a")
    y, _ = measure_in_basis(post, basis.angle("B", b), cfg.readout_model("B"),
                            streams.outcomes, subsystem="spin_b")
    return TrialRecord(idx=idx, a=int(a), b=int(b), x=int(x), y=int(y),
                       attempts=attempts, **_timestamps(cfg, streams.timing))


def record_events(record: TrialRecord) -> tuple[SpacetimeEvent, ...]:
    """The five audited spacetime events of one trial."""
    return (
        SpacetimeEvent("choice-A", "A", record.t_choice_a_ns),
        SpacetimeEvent("choice-B", "B", record.t_choice_b_ns),
        SpacetimeEvent("readout-done-A", "A", record.t_read_done_a_ns),
        SpacetimeEvent("readout-done-B", "B", record.t_read_done_b_ns),
        SpacetimeEvent("herald-C", "C", record.t_herald_ns),
    )


def run_experiment(cfg: SimulationConfig, n_trials: int | None = None,
                   hours: float | None = None, seed=None) -> TrialLog:
    """Run trials until the target count or the wall-clock budget is reached.

    The simulated wall clock advances by attempt_period_ns per attempt. If
    the hours budget runs out before ``n_trials`` heralds, the log is
    returned with its ``partial`` flag set.
    """
    if n_trials is None and hours is None:
        n_trials = cfg.experiment.trials
        hours = cfg.experiment.hours
    if seed is None:
        seed = cfg.experiment.seed
    if n_trials is not None and n_trials < 0:
        raise EngineError("trial count must be non-negative")
    streams = TrialStreams.from_seed(seed)
    p = herald_probability(cfg.link)
    table = outcome_distribution(cfg)
    cumulative = table.cumsum(axis=2)
    rng_model = cfg.rng
    budget_ns = None if hours is None else hours * 3600.0 * 1e9
    log = TrialLog(config_hash=config_hash(cfg), seed=seed)
    elapsed_ns = 0.0
    idx = 0
    while True:
        if n_trials is not None and idx >= n_trials:
            break
        attempts = int(streams.attempts.geometric(p))
        elapsed_ns += attempts * cfg.link.attempt_period_ns
        if budget_ns is not None and elapsed_ns > budget_ns:
            log.partial = n_trials is not None
            break
        a = _setting_bit(rng_model, streams.settings_a)
        b = _setting_bit(rng_model, streams.settings_b)
        u = streams.outcomes.random()
        x, y = OUTCOME_PAIRS[int(np.searchsorted(cumulative[a, b], u, side="right"))]
        log.append(TrialRecord(idx=idx, a=a, b=b, x=x, y=y, attempts=attempts,
                               **_timestamps(cfg, streams.timing)))
        idx += 1
    return log
