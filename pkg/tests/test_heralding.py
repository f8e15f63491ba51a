import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellsim import heralding as h
from bellsim import quantum as q

SQRT2 = math.sqrt(2.0)
NO_ERRORS = h.SpinPhotonErrorModel(0.0, 0.0, 0.0, 0.0)


# ---- independent brute-force oracle ------------------------------------------
#
# Enumerates every (spin pair, photon routing, sector) amplitude by hand:
# no Fock machinery, just path bookkeeping on dictionaries. Photons from the
# two sources are distinguishable by time bin in the heralded patterns, so no
# bunching factors arise there.


def oracle_herald(visibility, pattern):
    """(probability, 4x4 spin density matrix) for one early/late click pattern.

    ``pattern`` maps time bin -> output port index (1 or 2).
    """
    amp_shared = math.sqrt(visibility)
    amp_private = math.sqrt(1.0 - visibility)
    # routing amplitudes through the 50:50 splitter
    route = {"A": {1: 1 / SQRT2, 2: 1 / SQRT2}, "B": {1: 1 / SQRT2, 2: -1 / SQRT2}}
    vectors = {}  # photonic configuration -> spin amplitude vector
    for spin_a, spin_b in product((0, 1), repeat=2):
        bin_a = "early" if spin_a == 0 else "late"
        bin_b = "early" if spin_b == 0 else "late"
        if {bin_a, bin_b} != {"early", "late"}:
            continue  # same-bin emissions cannot click one early and one late
        for sector_b, amp_b in (("shared", amp_shared), ("private", amp_private)):
            if amp_b == 0.0:
                continue
            port_a = pattern[bin_a]
            port_b = pattern[bin_b]
            amp = 0.5 * amp_b * route["A"][port_a] * route["B"][port_b]
            config = ((bin_a, port_a, "shared"), (bin_b, port_b, sector_b))
            config = tuple(sorted(config))
            vec = vectors.setdefault(config, np.zeros(4, complex))
            vec[spin_a * 2 + spin_b] += amp
    rho = sum(np.outer(v, v.conj()) for v in vectors.values())
    prob = float(np.trace(rho).real)
    return prob, rho / prob


def oracle_psi_minus_herald(visibility):
    """Both cross-port patterns mixed, as the library heralds by default."""
    total = np.zeros((4, 4), complex)
    prob = 0.0
    for pattern in ({"early": 1, "late": 2}, {"early": 2, "late": 1}):
        p, rho = oracle_herald(visibility, pattern)
        total += p * rho
        prob += p
    return prob, total / prob


# ---- spin-photon state ---------------------------------------------------------


def bin_conditionals(state):
    rho = state.density_matrix()
    out = {}
    for bin_idx, name in enumerate(("early", "late")):
        p_bin = rho[bin_idx, bin_idx].real + rho[2 + bin_idx, 2 + bin_idx].real
        p_up = rho[bin_idx, bin_idx].real / p_bin
        out[name] = p_up
    return out


def test_spin_photon_state_ideal_perfectly_correlated():
    state = h.spin_photon_state("A", NO_ERRORS)
    cond = bin_conditionals(state)
    assert abs(cond["early"] - 1.0) < 1e-12
    assert abs(cond["late"] - 0.0) < 1e-12
    # the ideal state is the spin/time-bin Bell pair
    bell = np.zeros(4)
    bell[0] = bell[3] = 1 / SQRT2
    np.testing.assert_allclose(state.density_matrix(), np.outer(bell, bell), atol=1e-12)


def test_spin_photon_state_reproduces_conditional_error_rates():
    errors = h.SpinPhotonErrorModel(a_early=0.014, a_late=0.016, b_early=0.0, b_late=0.0)
    cond = bin_conditionals(h.spin_photon_state("A", errors))
    assert abs((1.0 - cond["early"]) - 0.014) < 1e-12
    assert abs(cond["late"] - 0.016) < 1e-12


def test_spin_photon_state_half_errors_decouple_spin_from_bin():
    errors = h.SpinPhotonErrorModel(a_early=0.5, a_late=0.5, b_early=0.0, b_late=0.0)
    cond = bin_conditionals(h.spin_photon_state("A", errors))
    assert abs(cond["early"] - 0.5) < 1e-12
    assert abs(cond["late"] - 0.5) < 1e-12


def test_error_model_rejects_out_of_range():
    with pytest.raises(h.HeraldingError):
        h.SpinPhotonErrorModel(a_early=0.6)


# ---- beam splitter ----------------------------------------------------------------


def test_single_photon_splits_evenly():
    space = h.default_mode_space()
    state = h.photon_ket(space, [(h.PORT_A_IN, h.EARLY, h.SHARED)])
    out = h.beam_splitter(state, space)
    amp1 = out.data[space.index(_occ(space, [(h.PORT_OUT_1, h.EARLY, h.SHARED)]))]
    amp2 = out.data[space.index(_occ(space, [(h.PORT_OUT_2, h.EARLY, h.SHARED)]))]
    assert abs(abs(amp1) ** 2 - 0.5) < 1e-12
    assert abs(abs(amp2) ** 2 - 0.5) < 1e-12


def _occ(space, modes):
    occ = [0] * len(space.modes)
    for m in modes:
        occ[space.mode_index(m)] += 1
    return tuple(occ)


def _coincidence_probability(space, out_state):
    """P(one photon in each output port), summing bins and sectors."""
    total = 0.0
    for i, occ in enumerate(space.basis):
        counts = {h.PORT_OUT_1: 0, h.PORT_OUT_2: 0}
        for m, n in enumerate(occ):
            port = space.modes[m][0]
            if port in counts:
                counts[port] += n
        if counts[h.PORT_OUT_1] == 1 and counts[h.PORT_OUT_2] == 1:
            total += abs(out_state.data[i]) ** 2
    return total


def test_hom_dip_for_indistinguishable_photons():
    space = h.default_mode_space()
    state = h.photon_ket(space, [(h.PORT_A_IN, h.EARLY, h.SHARED),
                                 (h.PORT_B_IN, h.EARLY, h.SHARED)])
    out = h.beam_splitter(state, space)
    assert _coincidence_probability(space, out) < 1e-12


def test_distinguishable_photons_coincide_half_the_time():
    # oracle: the four routing amplitudes are (+-1/2); the two cross-port ones
    # do not cancel for orthogonal internal states, so P(coincidence) = 1/2
    amps = [0.5 * sa * sb for sa in (1, 1) for sb in (1, -1)]
    cross = abs(amps[1]) ** 2 + abs(amps[2]) ** 2
    assert abs(cross - 0.5) < 1e-15

    space = h.default_mode_space()
    state = h.photon_ket(space, [(h.PORT_A_IN, h.EARLY, h.SHARED),
                                 (h.PORT_B_IN, h.EARLY, h.PRIVATE)])
    out = h.beam_splitter(state, space)
    assert abs(_coincidence_probability(space, out) - 0.5) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_beam_splitter_preserves_norm_on_random_inputs(seed):
    rng = np.random.default_rng(seed)
    space = h.default_mode_space()
    vec = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    vec /= np.linalg.norm(vec)
    out = h.beam_splitter(q.QuantumState(vec, ((h.PHOTON_SUBSYSTEM, space.dim),)), space)
    assert abs(np.linalg.norm(out.data) - 1.0) < 1e-10


def test_beam_splitter_unitary_is_unitary():
    space = h.default_mode_space()
    u = h.beam_splitter_unitary(space)
    assert np.max(np.abs(u.conj().T @ u - np.eye(space.dim))) < 1e-10


# ---- herald -------------------------------------------------------------------------


def _pipeline(visibility, errors=NO_ERRORS, model=None, patterns=None):
    space = h.default_mode_space()
    joint = h.joint_source_state(space, errors, visibility)
    mixed = h.beam_splitter(joint, space)
    model = model or h.InterferenceModel(visibility=visibility)
    return h.herald(mixed, space, model, patterns)


def test_ideal_herald_probability_and_state_match_oracle():
    oracle_p, oracle_rho = oracle_psi_minus_herald(1.0)
    assert abs(oracle_p - 0.25) < 1e-12

    res = _pipeline(1.0)
    assert abs(res.probability - oracle_p) < 1e-10
    np.testing.assert_allclose(res.spin_state.density_matrix(), oracle_rho, atol=1e-10)
    assert q.fidelity_to_pure(res.spin_state, q.psi_minus()) > 1.0 - 1e-10


@pytest.mark.parametrize("visibility", [0.0, 0.25, 0.5, 0.9, 1.0])
def test_fidelity_law_against_oracle(visibility):
    oracle_p, oracle_rho = oracle_psi_minus_herald(visibility)
    res = _pipeline(visibility)
    assert abs(res.probability - oracle_p) < 1e-9
    np.testing.assert_allclose(res.spin_state.density_matrix(), oracle_rho, atol=1e-9)
    fid = q.fidelity_to_pure(res.spin_state, q.psi_minus())
    assert abs(fid - (1.0 + visibility) / 2.0) < 1e-9


def test_zero_visibility_gives_anticorrelated_mixture():
    res = _pipeline(0.0)
    expected = np.diag([0.0, 0.5, 0.5, 0.0])
    np.testing.assert_allclose(res.spin_state.density_matrix(), expected, atol=1e-9)


def test_composed_fidelity_with_characterised_errors_in_band():
    fid = h.heralded_fidelity(h.InterferenceModel(visibility=0.90), h.SpinPhotonErrorModel())
    assert 0.89 <= fid <= 0.95


def test_fidelity_monotone_in_visibility():
    fids = []
    for v in np.linspace(0.0, 1.0, 11):
        res = h.event_ready_state(h.InterferenceModel(visibility=float(v)), NO_ERRORS)
        fids.append(q.fidelity_to_pure(res.spin_state, q.psi_minus()))
    assert all(b >= a - 1e-12 for a, b in zip(fids, fids[1:]))


def test_port_swapped_pattern_gives_identical_state():
    p1, p2 = h.psi_minus_patterns()
    res1 = _pipeline(0.7, patterns=p1)
    res2 = _pipeline(0.7, patterns=p2)
    assert abs(res1.probability - res2.probability) < 1e-12
    np.testing.assert_allclose(res1.spin_state.density_matrix(),
                               res2.spin_state.density_matrix(), atol=1e-10)


def test_click_pattern_distribution_sums_to_one():
    space = h.default_mode_space()
    joint = h.joint_source_state(space, h.SpinPhotonErrorModel(), 0.8)
    mixed = h.beam_splitter(joint, space)
    model = h.InterferenceModel(visibility=0.8, detector_efficiency=(0.7, 0.9),
                                dark_count_prob=0.01, laser_leakage_prob=0.005)
    dist = h.click_pattern_distribution(mixed, space, model)
    assert abs(sum(dist.values()) - 1.0) < 1e-9
    assert all(p >= -1e-12 for p in dist.values())


def test_dark_counts_degrade_the_heralded_state():
    clean = h.event_ready_state(h.InterferenceModel(visibility=1.0), NO_ERRORS)
    noisy = h.event_ready_state(
        h.InterferenceModel(visibility=1.0, dark_count_prob=0.05), NO_ERRORS
    )
    f_clean = q.fidelity_to_pure(clean.spin_state, q.psi_minus())
    f_noisy = q.fidelity_to_pure(noisy.spin_state, q.psi_minus())
    assert f_noisy < f_clean  # false clicks mix in non-projected states
    assert 0.0 < noisy.probability < 1.0


def test_unheraldable_pattern_raises():
    space = h.default_mode_space()
    joint = h.joint_source_state(space, NO_ERRORS, 1.0)
    mixed = h.beam_splitter(joint, space)
    dead = h.InterferenceModel(visibility=1.0, detector_efficiency=(0.0, 0.0))
    with pytest.raises(h.UnheraldableError):
        h.herald(mixed, space, dead)


def test_same_port_pattern_is_psi_plus_like():
    res = _pipeline(1.0, patterns=h.psi_plus_patterns()[0])
    plus = np.zeros(4)
    plus[1] = plus[2] = 1 / SQRT2
    fid = float(np.real(plus @ res.spin_state.density_matrix() @ plus))
    assert abs(res.probability - 0.125) < 1e-10
    assert fid > 1.0 - 1e-9


def test_including_same_port_heralds_degrades_the_mixture():
    # without feed-forward correction the accepted mixture is half singlet,
    # half triplet: fidelity collapses to ~1/2 while the rate doubles
    strict = h.event_ready_state(h.InterferenceModel(visibility=1.0), NO_ERRORS, False)
    loose = h.event_ready_state(h.InterferenceModel(visibility=1.0), NO_ERRORS, True)
    assert abs(loose.probability - 2 * strict.probability) < 1e-9
    fid = q.fidelity_to_pure(loose.spin_state, q.psi_minus())
    assert abs(fid - 0.5) < 1e-9


def test_pattern_validation():
    with pytest.raises(h.HeraldingError):
        h.HeraldPattern(frozenset({(h.PORT_OUT_1, h.EARLY), (h.PORT_OUT_2, h.EARLY)}))
    with pytest.raises(h.HeraldingError):
        h.HeraldPattern(frozenset({(h.PORT_A_IN, h.EARLY), (h.PORT_OUT_2, h.LATE)}))


# ---- visibility estimator -----------------------------------------------------------


def test_hom_visibility_central_peak_counts():
    est = h.hom_visibility(3, 28)
    assert abs(est.value - 0.893) < 5e-4
    assert abs(est.sigma - 0.06) < 0.01


def test_hom_visibility_limits():
    assert h.hom_visibility(0, 50).value == 1.0
    assert h.hom_visibility(50, 50).value == 0.0


def test_hom_visibility_requires_reference_counts():
    with pytest.raises(h.HeraldingError):
        h.hom_visibility(3, 0)
