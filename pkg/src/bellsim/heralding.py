"""Mode-level model of heralded spin-spin entanglement generation.

Each node entangles its spin with the emission time bin of a single photon,
|up, early> + |down, late>, the photons meet on a 50:50 beam splitter at the
midpoint station, and a coincidence of one early and one late photon in
different output ports projects the remote spins onto the singlet.

Partial photon indistinguishability is handled by splitting the node-B photon
into a mode shared with node A (amplitude sqrt(V)) and an orthogonal private
mode (amplitude sqrt(1-V)); only the shared-mode component interferes, which
reproduces the coincidence contrast V and the heralded fidelity (1+V)/2.
Spin-photon imperfections are classical flip mixtures conditioned on the time
bin, and detector dark counts / excitation-laser leakage enter as independent
false-click events per detection window.

All photonic states are second-quantised on a truncated Fock space (a few
modes, at most two photons), carried as one dense subsystem of a
:class:`~bellsim.quantum.QuantumState`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .quantum import ATOL, QuantumState, fidelity_to_pure, psi_minus

Mode = tuple[str, str, str]  # (port, time_bin, sector)

PORT_A_IN = "A-in"
PORT_B_IN = "B-in"
PORT_OUT_1 = "C-out-1"
PORT_OUT_2 = "C-out-2"
EARLY = "early"
LATE = "late"
SHARED = "shared"
PRIVATE = "private"

INPUT_PORTS = (PORT_A_IN, PORT_B_IN)
OUTPUT_PORTS = (PORT_OUT_1, PORT_OUT_2)
TIME_BINS = (EARLY, LATE)
SECTORS = (SHARED, PRIVATE)

PHOTON_SUBSYSTEM = "photons"


class HeraldingError(ValueError):
    """Invalid photonic model input."""


class UnheraldableError(HeraldingError):
    """The requested detection pattern has zero probability."""


@dataclass(frozen=True)
class PhotonicModeSpace:
    """Truncated Fock space over an ordered list of labelled optical modes."""

    modes: tuple[Mode, ...]
    mode_cutoff: int = 2
    max_total_photons: int = 2

    # derived lookup tables, excluded from equality/hash
    _basis: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        modes = tuple(tuple(m) for m in self.modes)
        object.__setattr__(self, "modes", modes)
        if len(set(modes)) != len(modes):
            raise HeraldingError("mode list contains duplicates")
        if self.mode_cutoff < 2:
            raise HeraldingError("per-mode occupation cutoff must be >= 2")
        if self.max_total_photons < 1:
            raise HeraldingError("total photon cap must be >= 1")
        basis = tuple(self._enumerate_basis())
        object.__setattr__(self, "_basis", basis)
        object.__setattr__(self, "_index", {occ: i for i, occ in enumerate(basis)})

    def _enumerate_basis(self):
        n_modes = len(self.modes)

        def rec(prefix, remaining_slots, used):
            if remaining_slots == 0:
                yield tuple(prefix)
                return
            for count in range(min(self.mode_cutoff, self.max_total_photons - used) + 1):
                yield from rec(prefix + [count], remaining_slots - 1, used + count)

        return rec([], n_modes, 0)

    @property
    def dim(self) -> int:
        return len(self._basis)

    @property
    def basis(self) -> tuple[tuple[int, ...], ...]:
        return self._basis

    def index(self, occupation: Sequence[int]) -> int:
        occ = tuple(occupation)
        if occ not in self._index:
            raise HeraldingError(f"occupation {occ} outside the truncated space")
        return self._index[occ]

    def mode_index(self, mode: Mode) -> int:
        try:
            return self.modes.index(tuple(mode))
        except ValueError:
            raise HeraldingError(f"unknown mode {mode}") from None


def default_mode_space() -> PhotonicModeSpace:
    """Two input and two output ports, two time bins, two sectors."""
    modes = tuple(
        (port, time_bin, sector)
        for port in INPUT_PORTS + OUTPUT_PORTS
        for time_bin in TIME_BINS
        for sector in SECTORS
    )
    return PhotonicModeSpace(modes)


@dataclass(frozen=True)
class InterferenceModel:
    """Photon interference and detection imperfections at the midpoint."""

    visibility: float = 0.90
    detector_efficiency: tuple[float, float] = (1.0, 1.0)
    dark_count_prob: float = 0.0
    laser_leakage_prob: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "detector_efficiency",
                           tuple(float(e) for e in self.detector_efficiency))
        probs = (self.visibility, *self.detector_efficiency,
                 self.dark_count_prob, self.laser_leakage_prob)
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise HeraldingError(f"all interference-model probabilities must be in [0, 1]: {probs}")

    @property
    def false_click_prob(self) -> float:
        """Probability of a spurious click per detection window."""
        return 1.0 - (1.0 - self.dark_count_prob) * (1.0 - self.laser_leakage_prob)


@dataclass(frozen=True)
class SpinPhotonErrorModel:
    """Conditional spin-flip probabilities per node and detected time bin."""

    a_early: float = 0.014
    a_late: float = 0.008
    b_early: float = 0.016
    b_late: float = 0.007

    def __post_init__(self):
        for name in ("a_early", "a_late", "b_early", "b_late"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.5:
                raise HeraldingError(f"{name}={v} outside [0, 0.5]")

    def for_side(self, side: str) -> tuple[float, float]:
        side = side.upper()
        if side == "A":
            return (self.a_early, self.a_late)
        if side == "B":
            return (self.b_early, self.b_late)
        raise HeraldingError(f"side must be 'A' or 'B', got {side!r}")


@dataclass(frozen=True)
class HeraldPattern:
    """Required detection windows, e.g. {(out-1, early), (out-2, late)}."""

    clicks: frozenset[tuple[str, str]]

    def __post_init__(self):
        clicks = frozenset((str(p), str(b)) for p, b in self.clicks)
        object.__setattr__(self, "clicks", clicks)
        bins = sorted(b for _, b in clicks)
        if bins != [EARLY, LATE]:
            raise HeraldingError("herald pattern needs exactly one early and one late click")
        for port, _ in clicks:
            if port not in OUTPUT_PORTS:
                raise HeraldingError(f"clicks must be on output ports, got {port!r}")

    @property
    def cross_port(self) -> bool:
        return len({p for p, _ in self.clicks}) == 2


def psi_minus_patterns() -> tuple[HeraldPattern, HeraldPattern]:
    """The two cross-port early/late coincidences heralding the singlet."""
    return (
        HeraldPattern(frozenset({(PORT_OUT_1, EARLY), (PORT_OUT_2, LATE)})),
        HeraldPattern(frozenset({(PORT_OUT_2, EARLY), (PORT_OUT_1, LATE)})),
    )


def psi_plus_patterns() -> tuple[HeraldPattern, HeraldPattern]:
    """Same-port early/late coincidences (excluded from heralds by default)."""
    return (
        HeraldPattern(frozenset({(PORT_OUT_1, EARLY), (PORT_OUT_1, LATE)})),
        HeraldPattern(frozenset({(PORT_OUT_2, EARLY), (PORT_OUT_2, LATE)})),
    )


def _flip_branches(e_early: float, e_late: float):
    """Weights of the four (flip-early?, flip-late?) classical error branches."""
    for f_early, f_late in product((0, 1), repeat=2):
        w = (e_early if f_early else 1.0 - e_early) * (e_late if f_late else 1.0 - e_late)
        if w > 0.0:
            yield w, f_early, f_late


def spin_photon_state(side: str, errors: SpinPhotonErrorModel) -> QuantumState:
    """Spin (x) time-bin state of one node after an emission round.

    Ideal case: (|up, early> + |down, late>)/sqrt(2). With errors, the spin is
    flipped with the configured probability conditioned on the time bin.
    """
    e_early, e_late = errors.for_side(side)
    rho = np.zeros((4, 4), dtype=np.complex128)
    for w, f_early, f_late in _flip_branches(e_early, e_late):
        vec = np.zeros(4, dtype=np.complex128)
        s_early = 0 ^ f_early           # ideal: up with early
        s_late = 1 ^ f_late             # ideal: down with late
        vec[s_early * 2 + 0] = 1 / math.sqrt(2)
        vec[s_late * 2 + 1] = 1 / math.sqrt(2)
        rho += w * np.outer(vec, vec.conj())
    return QuantumState(rho, (("spin", 2), ("time_bin", 2)))


def _expand_creation_product(space: PhotonicModeSpace, occupation: Sequence[int],
                             images: list) -> dict:
    """Expand prod_m (sum_j U[j,m] c_j^dag)^{n_m} |0> into Fock amplitudes.

    ``images[m]`` lists (target_mode_index, amplitude) pairs for source mode m.
    Returns {occupation_tuple: amplitude} with Fock normalisation included.
    """
    n_modes = len(space.modes)
    source_norm = 1.0
    for n in occupation:
        source_norm *= math.factorial(n)
    # polynomial over creation-operator monomials, keyed by occupation vectors
    poly = {tuple([0] * n_modes): 1.0 + 0.0j}
    for m, n in enumerate(occupation):
        for _ in range(n):
            new: dict = {}
            for occ, amp in poly.items():
                for j, c in images[m]:
                    if c == 0.0:
                        continue
                    lifted = list(occ)
                    lifted[j] += 1
                    key = tuple(lifted)
                    new[key] = new.get(key, 0.0 + 0.0j) + amp * c
            poly = new
    out = {}
    for occ, amp in poly.items():
        if sum(occ) > space.max_total_photons or any(n > space.mode_cutoff for n in occ):
            raise HeraldingError(f"photon number above cutoff in occupation {occ}")
        target_norm = 1.0
        for n in occ:
            target_norm *= math.factorial(n)
        out[occ] = amp * math.sqrt(target_norm) / math.sqrt(source_norm)
    return out


def mode_transform_unitary(space: PhotonicModeSpace, mode_images: dict) -> np.ndarray:
    """Fock-space unitary induced by a single-particle mode unitary.

    ``mode_images`` maps a source mode to its image as a list of
    (target mode, amplitude) pairs; unlisted modes map to themselves. The
    single-particle matrix must be unitary, which makes the induced map
    unitary on every photon-number sector of the truncated space.
    """
    n_modes = len(space.modes)
    single = np.zeros((n_modes, n_modes), dtype=np.complex128)
    for m, mode in enumerate(space.modes):
        if mode in mode_images:
            for target, amp in mode_images[mode]:
                single[space.mode_index(target), m] = amp
        else:
            single[m, m] = 1.0
    if float(np.max(np.abs(single.conj().T @ single - np.eye(n_modes)))) > ATOL:
        raise HeraldingError("mode map is not unitary")
    images = [[(j, single[j, m]) for j in range(n_modes) if single[j, m] != 0.0]
              for m in range(n_modes)]
    u = np.zeros((space.dim, space.dim), dtype=np.complex128)
    for col, occ in enumerate(space.basis):
        for occ_out, amp in _expand_creation_product(space, occ, images).items():
            u[space.index(occ_out), col] = amp
    return u


def _beam_splitter_images(space: PhotonicModeSpace) -> dict:
    """50:50 beam-splitter map per time bin and sector, input to output ports."""
    s = 1 / math.sqrt(2)
    images = {}
    for time_bin in TIME_BINS:
        for sector in SECTORS:
            a_in = (PORT_A_IN, time_bin, sector)
            b_in = (PORT_B_IN, time_bin, sector)
            out1 = (PORT_OUT_1, time_bin, sector)
            out2 = (PORT_OUT_2, time_bin, sector)
            present = {m for m in (a_in, b_in, out1, out2) if m in space.modes}
            if not present:
                continue
            if present != {a_in, b_in, out1, out2}:
                raise HeraldingError(f"mode space is missing partners for bin {time_bin}/{sector}")
            images[a_in] = [(out1, s), (out2, s)]
            images[b_in] = [(out1, s), (out2, -s)]
            # unitary completion: the output labels fold back onto the inputs
            images[out1] = [(a_in, s), (b_in, s)]
            images[out2] = [(a_in, s), (b_in, -s)]
    return images


@lru_cache(maxsize=8)
def beam_splitter_unitary(space: PhotonicModeSpace) -> np.ndarray:
    u = mode_transform_unitary(space, _beam_splitter_images(space))
    u.setflags(write=False)
    return u


def beam_splitter(state: QuantumState, space: PhotonicModeSpace,
                  subsystem: str = PHOTON_SUBSYSTEM) -> QuantumState:
    """Interfere the input-port modes on the 50:50 beam splitter."""
    if state.subsystem_dim(subsystem) != space.dim:
        raise HeraldingError(
            f"subsystem {subsystem!r} has dimension {state.subsystem_dim(subsystem)}, "
            f"space needs {space.dim}"
        )
    u = beam_splitter_unitary(space)
    idx = state.subsystem_index(subsystem)
    left = 1
    for _, d in state.subsystems[:idx]:
        left *= d
    right = 1
    for _, d in state.subsystems[idx + 1:]:
        right *= d
    big = np.kron(np.kron(np.eye(left), u), np.eye(right))
    if state.is_ket:
        return QuantumState(big @ state.data, state.subsystems)
    return QuantumState(big @ state.density_matrix() @ big.conj().T, state.subsystems)


def photon_ket(space: PhotonicModeSpace, modes: Iterable[Mode]) -> QuantumState:
    """Fock ket with one photon in each listed mode (repeats allowed)."""
    occ = [0] * len(space.modes)
    for mode in modes:
        occ[space.mode_index(mode)] += 1
    vec = np.zeros(space.dim, dtype=np.complex128)
    vec[space.index(tuple(occ))] = 1.0
    return QuantumState(vec, ((PHOTON_SUBSYSTEM, space.dim),))


def joint_source_state(space: PhotonicModeSpace,
                       errors: SpinPhotonErrorModel,
                       visibility: float) -> QuantumState:
    """Both nodes' spins and photons before the beam splitter.

    Node A emits into its shared mode; node B emits into sqrt(V) shared +
    sqrt(1-V) private, so the mode overlap squared equals the interference
    visibility. The classical spin-flip mixtures of both nodes are applied.
    """
    if not 0.0 <= visibility <= 1.0:
        raise HeraldingError("visibility must be in [0, 1]")
    amp_shared = math.sqrt(visibility)
    amp_private = math.sqrt(1.0 - visibility)
    dim = space.dim
    e_a = errors.for_side("A")
    e_b = errors.for_side("B")
    rho = np.zeros((4 * dim, 4 * dim), dtype=np.complex128)
    for w_a, fe_a, fl_a in _flip_branches(*e_a):
        for w_b, fe_b, fl_b in _flip_branches(*e_b):
            vec = np.zeros(4 * dim, dtype=np.complex128)
            for bin_a, bin_b in product(TIME_BINS, repeat=2):
                s_a = (0 if bin_a == EARLY else 1) ^ (fe_a if bin_a == EARLY else fl_a)
                s_b = (0 if bin_b == EARLY else 1) ^ (fe_b if bin_b == EARLY else fl_b)
                spin_idx = s_a * 2 + s_b
                for sector_b, amp_b in ((SHARED, amp_shared), (PRIVATE, amp_private)):
                    if amp_b == 0.0:
                        continue
                    occ = [0] * len(space.modes)
                    occ[space.mode_index((PORT_A_IN, bin_a, SHARED))] += 1
                    occ[space.mode_index((PORT_B_IN, bin_b, sector_b))] += 1
                    vec[spin_idx * dim + space.index(tuple(occ))] += 0.5 * amp_b
            rho += (w_a * w_b) * np.outer(vec, vec.conj())
    return QuantumState(
        rho, (("spin_a", 2), ("spin_b", 2), (PHOTON_SUBSYSTEM, dim))
    )


def _detection_windows() -> tuple[tuple[str, str], ...]:
    return tuple((port, time_bin) for port in OUTPUT_PORTS for time_bin in TIME_BINS)


def _visible_occupations(space: PhotonicModeSpace) -> dict:
    """Group Fock indices by detector-visible counts (sectors are unresolved)."""
    windows = _detection_windows()
    groups: dict = {}
    for i, occ in enumerate(space.basis):
        visible = [0] * len(windows)
        for m, n in enumerate(occ):
            if n == 0:
                continue
            port, time_bin, _ = space.modes[m]
            if port in OUTPUT_PORTS:
                visible[windows.index((port, time_bin))] += n
        groups.setdefault(tuple(visible), []).append(i)
    return groups


def _click_set_probability(visible: Sequence[int], clicked: Sequence[bool],
                           model: InterferenceModel) -> float:
    """P(exactly this click set | photon counts per window)."""
    windows = _detection_windows()
    eta = {PORT_OUT_1: model.detector_efficiency[0],
           PORT_OUT_2: model.detector_efficiency[1]}
    f = model.false_click_prob
    p = 1.0
    for w, (port, _) in enumerate(windows):
        p_silent = (1.0 - eta[port]) ** visible[w] * (1.0 - f)
        p *= (1.0 - p_silent) if clicked[w] else p_silent
    return p


@dataclass(frozen=True)
class HeraldResult:
    """Herald probability and the conditional two-spin state."""

    probability: float
    spin_state: QuantumState
    pattern_probabilities: tuple[tuple[HeraldPattern, float], ...]


def herald(state: QuantumState, space: PhotonicModeSpace, model: InterferenceModel,
           patterns: Sequence[HeraldPattern] | HeraldPattern | None = None,
           subsystem: str = PHOTON_SUBSYSTEM) -> HeraldResult:
    """Condition on a detection pattern and return the projected spin state.

    ``state`` must hold two spins plus the photonic subsystem, already past
    the beam splitter. ``patterns`` may be a single pattern or several
    mutually exclusive ones (default: both singlet coincidences); the
    conditional states are mixed with their pattern weights.
    """
    if patterns is None:
        patterns = psi_minus_patterns()
    elif isinstance(patterns, HeraldPattern):
        patterns = (patterns,)
    if state.names != ("spin_a", "spin_b", subsystem):
        raise HeraldingError(
            f"herald expects subsystems ('spin_a', 'spin_b', {subsystem!r}), got {state.names}"
        )
    if state.subsystem_dim(subsystem) != space.dim:
        raise HeraldingError("photonic subsystem dimension does not match the mode space")
    windows = _detection_windows()
    dim = space.dim
    rho = state.density_matrix().reshape(4, dim, 4, dim)
    groups = _visible_occupations(space)
    total = np.zeros((4, 4), dtype=np.complex128)
    total_prob = 0.0
    per_pattern = []
    for pattern in patterns:
        clicked = [w in pattern.clicks for w in windows]
        cond = np.zeros((4, 4), dtype=np.complex128)
        for visible, indices in groups.items():
            weight = _click_set_probability(visible, clicked, model)
            if weight == 0.0:
                continue
            block = rho[:, indices, :, :][:, :, :, indices]
            cond += weight * np.einsum("ikjk->ij", block)
        p = float(np.trace(cond).real)
        per_pattern.append((pattern, p))
        total += cond
        total_prob += p
    if total_prob < 1e-15:
        raise UnheraldableError("requested detection pattern has zero probability")
    spin = QuantumState(total / total_prob, (("spin_a", 2), ("spin_b", 2)))
    return HeraldResult(total_prob, spin, tuple(per_pattern))


def click_pattern_distribution(state: QuantumState, space: PhotonicModeSpace,
                               model: InterferenceModel,
                               subsystem: str = PHOTON_SUBSYSTEM) -> dict:
    """Probability of every click subset of the four detection windows.

    The values sum to one: each photon-count configuration produces exactly
    one click set. Useful for budget checks and completeness tests.
    """
    windows = _detection_windows()
    dim = space.dim
    rho = state.density_matrix().reshape(4, dim, 4, dim)
    groups = _visible_occupations(space)
    weights = {}
    for visible, indices in groups.items():
        block = rho[:, indices, :, :][:, :, :, indices]
        weights[visible] = float(np.einsum("ikik->", block).real)
    out = {}
    for clicked in product((False, True), repeat=len(windows)):
        p = 0.0
        for visible, w in weights.items():
            p += w * _click_set_probability(visible, clicked, model)
        out[frozenset(w for w, c in zip(windows, clicked) if c)] = p
    return out


@lru_cache(maxsize=64)
def event_ready_state(model: InterferenceModel,
                      errors: SpinPhotonErrorModel,
                      include_same_port: bool = False) -> HeraldResult:
    """Full pipeline: emission, interference, and herald conditioning.

    Returns the herald probability per emission round (detector and link
    losses aside) and the conditional two-spin density matrix. With
    ``include_same_port`` the same-port early/late coincidences are accepted
    too, without any feed-forward correction, which degrades the state.
    """
    space = default_mode_space()
    joint = joint_source_state(space, errors, model.visibility)
    mixed = beam_splitter(joint, space)
    patterns = psi_minus_patterns()
    if include_same_port:
        patterns = patterns + psi_plus_patterns()
    return herald(mixed, space, model, patterns)


@dataclass(frozen=True)
class VisibilityEstimate:
    value: float
    sigma: float


def hom_visibility(n_indistinguishable: float, n_distinguishable: float) -> VisibilityEstimate:
    """Two-photon interference contrast from central-peak coincidence counts.

    V = 1 - N_ind / N_dist, with the uncertainty from independent Poisson
    errors on both counts.
    """
    if n_indistinguishable < 0 or n_distinguishable < 0:
        raise HeraldingError("coincidence counts must be non-negative")
    if n_distinguishable == 0:
        raise HeraldingError("visibility undefined: zero distinguishable-photon coincidences")
    a, b = float(n_indistinguishable), float(n_distinguishable)
    value = 1.0 - a / b
    sigma = math.sqrt(a / b**2 + a**2 / b**3)
    return VisibilityEstimate(value, sigma)


def heralded_fidelity(model: InterferenceModel, errors: SpinPhotonErrorModel) -> float:
    """Fidelity of the event-ready two-spin state to the singlet."""
    return fidelity_to_pure(event_ready_state(model, errors).spin_state, psi_minus())
