import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle as O
from blgi_sim.core_sim import (
    DensityMatrix,
    apply_unitary_1q,
    concurrence,
    expectation_z,
    init_register,
    outcome_distribution,
    reduced_state,
)
from blgi_sim.errors import InvalidArgumentError
from blgi_sim.estimator import blgi_correlator, blgi_terms
from blgi_sim.noise import ConfusionMatrix, NoiseModel
from blgi_sim.protocol import (
    BELL_VECTORS,
    DEFAULT_ANGLES,
    BlgiConfig,
    ChshConfig,
    LhvModel,
    blgi_axes,
    blgi_state,
    calibration_factors,
    calibration_traces,
    classical_lgi_values,
    convention_scan,
    evaluate_blgi,
    exact_correlation,
    lhv_baseline,
    linear_sawtooth,
    prepare_bell,
    run_blgi,
    run_chsh,
    run_lgi,
    two_time_distribution,
    weak_lgi_distribution,
    weak_measure,
)

SQRT2 = np.sqrt(2.0)
phis = st.floats(0.0, np.pi / 2)


# ---------------------------------------------------------------- Bell pairs

@pytest.mark.parametrize("variant", ["psi-", "psi+", "phi+", "phi-"])
def test_bell_fidelity(variant):
    rho = prepare_bell(init_register(3), 0, 2, variant)
    pair = reduced_state(rho, [0, 2])
    assert pair.fidelity_to_pure(O.KET[variant]) == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(BELL_VECTORS[variant], O.KET[variant])


def test_singlet_populations_and_coherence():
    rho = prepare_bell(init_register(2), 0, 1, "psi-")
    assert np.allclose(outcome_distribution(rho, [0, 1]).probs, [0, 0.5, 0.5, 0], atol=1e-12)
    assert rho.data[1, 2].real == pytest.approx(-0.5, abs=1e-12)


def test_phi_plus_populations():
    rho = prepare_bell(init_register(2), 0, 1, "Φ+")
    assert np.allclose(outcome_distribution(rho, [0, 1]).probs, [0.5, 0, 0, 0.5], atol=1e-12)


def test_bell_dephasing_reduces_coherence():
    rho = prepare_bell(init_register(2), 0, 1, "psi-", NoiseModel(2, gate_dephasing_p=0.5))
    assert abs(rho.data[1, 2]) < 0.5


def test_bell_rejects():
    with pytest.raises(InvalidArgumentError):
        prepare_bell(init_register(2), 0, 1, "ghz")
    with pytest.raises(InvalidArgumentError):
        prepare_bell(init_register(2), 1, 1)


# -------------------------------------------------------------- weak measure

def prepared(theta):
    """Target (qubit 0) at ``R_y(theta)|0>``, ancilla (qubit 1) in |0>."""
    return apply_unitary_1q(init_register(2), 0, "ry", theta)


@given(theta=st.floats(0, 2 * np.pi), phi=phis)
def test_ancilla_reads_sin_phi_times_target(theta, phi):
    rho = prepared(theta)
    z = expectation_z(rho, 0)
    out = weak_measure(rho, 0, 1, phi)
    assert expectation_z(out, 1) == pytest.approx(z * np.sin(phi), abs=1e-10)


def test_projective_on_one():
    assert expectation_z(weak_measure(prepared(np.pi), 0, 1, np.pi / 2), 1) == pytest.approx(-1.0, abs=1e-12)


def test_zero_strength_extracts_nothing():
    rho = prepared(0.0)
    out = weak_measure(rho, 0, 1, 0.0)
    assert expectation_z(out, 1) == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(reduced_state(out, [0]).data, reduced_state(rho, [0]).data, atol=1e-12)


def test_zero_strength_leaves_superposed_target_unchanged():
    rho = prepared(1.1)
    out = weak_measure(rho, 0, 1, 0.0)
    assert np.allclose(reduced_state(out, [0]).data, reduced_state(rho, [0]).data, atol=1e-12)


def test_quarter_strength_value():
    assert expectation_z(weak_measure(prepared(np.pi), 0, 1, np.pi / 4), 1) == pytest.approx(-np.sin(np.pi / 4), abs=1e-10)


@given(theta=st.floats(0, np.pi))
def test_half_pi_is_cnot_copy(theta):
    out = weak_measure(prepared(theta), 0, 1, np.pi / 2)
    p = outcome_distribution(out, [0, 1]).probs
    # outcomes perfectly correlated: target 0 <-> ancilla 0
    assert p[1] + p[2] == pytest.approx(0.0, abs=1e-12)
    assert p[0] == pytest.approx(np.cos(theta / 2) ** 2, abs=1e-12)


@pytest.mark.parametrize("phi", [-0.1, np.pi / 2 + 0.01])
def test_weak_measure_rejects(phi):
    with pytest.raises(InvalidArgumentError):
        weak_measure(prepared(0.0), 0, 1, phi)


# ------------------------------------------------------------------- BLGI

@pytest.mark.parametrize("phi", [0.0, np.pi / 8, np.pi / 4, 3 * np.pi / 8, np.pi / 2])
def test_blgi_matches_straight_line_oracle(phi):
    got = run_blgi(BlgiConfig(phi1=phi, phi2=phi)).probs
    assert np.max(np.abs(got - O.blgi_probs(DEFAULT_ANGLES, phi, phi))) < 1e-10


@settings(max_examples=25, deadline=None)
@given(angles=st.tuples(*[st.floats(-np.pi, np.pi)] * 4), phi1=phis, phi2=phis,
       variant=st.sampled_from(["psi-", "psi+", "phi+", "phi-"]))
def test_blgi_matches_oracle_any_setting(angles, phi1, phi2, variant):
    cfg = BlgiConfig(*angles, phi1=phi1, phi2=phi2, bell_variant=variant)
    assert np.max(np.abs(run_blgi(cfg).probs - O.blgi_probs(angles, phi1, phi2, variant))) < 1e-10


@settings(max_examples=10, deadline=None)
@given(phi1=phis, phi2=phis, p=st.floats(0, 0.2), g=st.floats(0, 0.1),
       pops=st.lists(st.floats(0, 0.1), min_size=4, max_size=4),
       errs=st.lists(st.tuples(st.floats(0, 0.1), st.floats(0, 0.1)), min_size=4, max_size=4))
def test_noisy_blgi_matches_kraus_oracle(phi1, phi2, p, g, pops, errs):
    nm = NoiseModel(4, p, g, tuple(ConfusionMatrix(*e) for e in errs), tuple(pops))
    got = run_blgi(BlgiConfig(phi1=phi1, phi2=phi2), nm).probs
    ref = O.blgi_probs_noisy(DEFAULT_ANGLES, phi1, phi2, p, g, pops, errs)
    assert np.max(np.abs(got - ref)) < 1e-10


def test_weak_limit_reaches_tsirelson():
    cfg = BlgiConfig(phi1=0.001, phi2=0.001, calibration_mode="sin-phi")
    assert evaluate_blgi(cfg).C == pytest.approx(2 * SQRT2, abs=1e-3)


def test_weak_limit_terms():
    cfg = BlgiConfig(phi1=0.001, phi2=0.001, calibration_mode="sin-phi")
    assert np.allclose(evaluate_blgi(cfg).calibrated, np.array([-1, -1, 1, -1]) / SQRT2, atol=1e-3)


def test_projective_ancilla_correlation():
    out = evaluate_blgi(BlgiConfig(phi1=np.pi / 2, phi2=np.pi / 2, calibration_mode="sin-phi"))
    assert abs(out.calibrated.aa) == pytest.approx(1 / SQRT2, abs=1e-9)
    assert out.C < 2


def test_projective_ancillas_match_direct_readout():
    # alpha marginal at phi = pi/2 equals a Z readout of the rotated Bell pair
    d = run_blgi(BlgiConfig(phi1=np.pi / 2, phi2=np.pi / 2)).marginal(["alpha1", "alpha2"]).probs
    U = np.kron(O.ry(-DEFAULT_ANGLES[0]), O.ry(-DEFAULT_ANGLES[1]))
    ref = O.diag_probs(O.conj(U, np.outer(O.KET["psi-"], O.KET["psi-"].conj())))
    assert np.allclose(d, ref, atol=1e-12)


def test_convention_search_result():
    scan = convention_scan(1e-3)
    assert scan[(-1, 1)] == pytest.approx(2 * SQRT2, abs=1e-3)
    assert scan[(1, -1)] == pytest.approx(2 * SQRT2, abs=1e-3)
    assert abs(scan[(1, 1)]) < 1e-2 and abs(scan[(-1, -1)]) < 1e-2


def test_back_action_concurrence_monotone():
    values = []
    for phi in np.linspace(0, np.pi / 2, 20):
        rho = blgi_state(BlgiConfig(phi1=phi, phi2=phi))
        values.append(concurrence(reduced_state(rho, [1, 2])))
    # sqrt of ~1e-16 eigenvalues limits Wootters' formula to ~1e-8 on pure states
    assert values[0] == pytest.approx(1.0, abs=1e-7)
    assert all(b <= a + 1e-7 for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(0.0, abs=1e-7)
    assert values[0] - values[-1] > 0.99


def test_zero_strength_keeps_bell_pair():
    cfg = BlgiConfig(0.0, 0.0, 0.0, 0.0, phi1=0.0, phi2=0.0)
    pair = reduced_state(blgi_state(cfg), [1, 2])
    assert np.allclose(pair.data, np.outer(O.KET["psi-"], O.KET["psi-"].conj()), atol=1e-10)


@given(angles=st.tuples(*[st.floats(-np.pi, np.pi)] * 4))
def test_zero_strength_pair_is_locally_rotated_bell(angles):
    a, b, ap, bp = angles
    pair = reduced_state(blgi_state(BlgiConfig(*angles, phi1=0.0, phi2=0.0)), [1, 2])
    U = np.kron(O.ry(ap - 2 * a), O.ry(bp - 2 * b))
    assert np.allclose(pair.data, O.conj(U, np.outer(O.KET["psi-"], O.KET["psi-"].conj())), atol=1e-10)


def test_echo_is_transparent_without_noise():
    base = run_blgi(BlgiConfig(phi1=0.4, phi2=0.6)).probs
    echoed = run_blgi(BlgiConfig(phi1=0.4, phi2=0.6, echo=True)).probs
    assert np.allclose(base, echoed, atol=1e-12)


def test_detector_trim_shifts_angles():
    cfg = BlgiConfig(detector_trim=(0.0, -0.05, 0.05, 0.05))
    assert cfg.detector_angles == pytest.approx((0.0, np.pi / 4 - 0.05, np.pi / 2 + 0.05, 3 * np.pi / 4 + 0.05))
    ref = O.blgi_probs(cfg.detector_angles, 0.3, 0.3)
    assert np.allclose(run_blgi(cfg).probs, ref, atol=1e-12)


def test_axes_match_weak_limit_correlations():
    cfg = BlgiConfig(phi1=1e-4, phi2=1e-4, calibration_mode="sin-phi")
    ax = blgi_axes(cfg)
    cal = evaluate_blgi(cfg).calibrated
    E = lambda x, y: -np.cos(ax[x] - ax[y])  # noqa: E731  singlet along x-z axes
    ref = (E("alpha1", "alpha2"), E("alpha1", "beta2"), E("beta1", "alpha2"), E("beta1", "beta2"))
    assert np.allclose(cal, ref, atol=1e-3)


@pytest.mark.parametrize("kw", [{"phi1": -0.1}, {"phi2": 2.0}, {"n_shots": 0}, {"calibration_mode": "x"},
                                {"detector_trim": (0.0,)}, {"bell_variant": "w"}])
def test_blgi_config_rejects(kw):
    with pytest.raises(InvalidArgumentError):
        BlgiConfig(**kw)


# ------------------------------------------------------------- calibration

@given(phi=st.floats(0.01, np.pi / 2))
def test_noiseless_traces_follow_sin(phi):
    t = calibration_traces(phi, phi)
    assert t["alpha1"][0] == pytest.approx(np.sin(phi), abs=1e-12)
    assert t["alpha2"][1] == pytest.approx(-np.sin(phi), abs=1e-12)


@pytest.mark.parametrize("phi", [0.05, 0.2, 0.7, 1.2, np.pi / 2])
def test_noiseless_calibration_modes_agree(phi):
    a = calibration_factors(BlgiConfig(phi1=phi, phi2=phi, calibration_mode="sin-phi"))
    b = calibration_factors(BlgiConfig(phi1=phi, phi2=phi, calibration_mode="empirical-zero"))
    assert np.allclose(a, b, rtol=0, atol=1e-9)


def test_sampled_traces_close_to_exact():
    nm = NoiseModel.device()
    exact = calibration_traces(0.5, 0.5, nm)
    mc = calibration_traces(0.5, 0.5, nm, n_shots=200_000, seed=3)
    for role in exact:
        for e, m in zip(exact[role], mc[role]):
            assert abs(e - m) < 5 * np.sqrt((1 - e * e) / 200_000)


# ------------------------------------------------------------------- CHSH

def test_chsh_tsirelson_at_quarter_pi():
    assert abs(run_chsh(ChshConfig(np.pi / 4)).chsh) == pytest.approx(2 * SQRT2, abs=1e-9)


def test_chsh_aligned_detectors():
    assert abs(run_chsh(ChshConfig(0.0)).E["ab"]) == pytest.approx(1.0, abs=1e-12)


def test_chsh_curves_are_sinusoids():
    thetas = np.linspace(0, np.pi, 33)
    results = [run_chsh(ChshConfig(t)) for t in thetas]
    design = np.column_stack([np.ones_like(thetas), np.cos(thetas), np.sin(thetas)])
    for label in ("ab", "a'b", "ab'", "a'b'"):
        E = np.array([r.E[label] for r in results])
        coef, *_ = np.linalg.lstsq(design, E, rcond=None)
        assert np.max(np.abs(design @ coef - E)) < 1e-9
    chsh = np.array([abs(r.chsh) for r in results])
    assert thetas[np.argmax(chsh)] == pytest.approx(np.pi / 4)
    assert np.allclose(chsh, np.abs(2 * (np.cos(thetas) + np.sin(thetas))), atol=1e-12)


def test_chsh_monte_carlo_consistent():
    exact = run_chsh(ChshConfig(np.pi / 4))
    mc = run_chsh(ChshConfig(np.pi / 4, n_shots=100_000), shots=True, seed=5)
    assert abs(mc.chsh - exact.chsh) < 5 * mc.sem


def test_chsh_noise_lowers_value():
    assert abs(run_chsh(ChshConfig(np.pi / 4), NoiseModel.device()).chsh) < 2 * SQRT2 - 0.05


def test_chsh_config_rejects():
    with pytest.raises(InvalidArgumentError):
        ChshConfig(theta=4.0)


# -------------------------------------------------------------------- LGI

def test_lgi_identical_bases():
    assert run_lgi(0.3, [0.7, 0.7, 0.7]).value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("spacing,expected", [(np.pi / 3, 1.5), (np.pi / 4, np.sqrt(2))])
def test_lgi_even_spacing(spacing, expected):
    res = run_lgi(0.0, [0.0, spacing, 2 * spacing])
    ref = (O.sequential_projective_E(0, spacing, 0) + O.sequential_projective_E(spacing, 2 * spacing, 0)
           - O.sequential_projective_E(0, 2 * spacing, 0))
    assert res.value == pytest.approx(ref, abs=1e-9)
    assert res.value == pytest.approx(expected, abs=1e-9)
    assert res.violates


@given(prep=st.floats(0, 2 * np.pi), t=st.tuples(*[st.floats(-np.pi, np.pi)] * 3))
def test_lgi_correlators_match_oracle(prep, t):
    res = run_lgi(prep, t)
    assert res.E12 == pytest.approx(O.sequential_projective_E(t[0], t[1], prep), abs=1e-10)
    assert res.E13 == pytest.approx(O.sequential_projective_E(t[0], t[2], prep), abs=1e-10)


def test_lgi_quantum_maximum_is_one_and_a_half():
    taus = np.linspace(0, np.pi, 721)
    values = [run_lgi(0.0, [0, t, 2 * t]).value for t in taus]
    assert max(values) == pytest.approx(1.5, abs=1e-5)


def test_classical_lgi_bound():
    values = classical_lgi_values()
    assert min(values) == -3 and max(values) == 1


def test_weak_lgi_approaches_projective_pairs():
    ang = [0.0, np.pi / 3, 2 * np.pi / 3]
    assert run_lgi(0.0, ang, weak_phi=1e-3).value == pytest.approx(1.5, abs=1e-5)


def test_lgi_distributions_normalized():
    state = init_register(1)
    assert two_time_distribution(state, 0.2, 1.0).sum() == pytest.approx(1.0)
    assert weak_lgi_distribution(state, (0.0, 0.5, 1.0), 0.4).sum() == pytest.approx(1.0)


def test_lgi_rejects():
    with pytest.raises(InvalidArgumentError):
        run_lgi(0.0, [0.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        run_lgi(0.0, [0.0, 1.0, 2.0], weak_phi=0.0)


# -------------------------------------------------------------------- LHV

def test_constant_model_saturates_bound():
    res = lhv_baseline(np.linspace(0, np.pi, 9), LhvModel("constant"), 1000, seed=0)
    assert all(abs(c) == 2.0 for c in res.chsh)
    assert all(e == 1.0 for e in res.E)
    assert abs(res.blgi.mean) <= 2.0


def test_sign_model_sawtooth_matches_enumeration():
    model = LhvModel("sign", party2_sign=1.0)
    for theta in np.linspace(0, np.pi, 7):
        ref = exact_correlation(model, 0.0, theta)
        assert ref == pytest.approx(linear_sawtooth(theta), abs=1e-4)


def test_sign_model_chsh_bounded():
    thetas = np.linspace(0, np.pi, 17)
    res = lhv_baseline(thetas, LhvModel("sign"), 10**6, seed=42)
    i = int(np.argmax(np.abs(res.chsh)))
    assert abs(res.chsh[i]) <= 2 + 3 * res.chsh_sem[i]
    assert max(np.abs(res.chsh)) == pytest.approx(2.0, abs=0.01)
    assert np.allclose(res.E, linear_sawtooth(thetas), atol=0.01)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32), gain=st.sampled_from([1.0, 1.5, 3.0]),
       angles=st.tuples(*[st.floats(-np.pi, np.pi)] * 4))
def test_lhv_blgi_bounded(seed, gain, angles):
    res = lhv_baseline([0.0], LhvModel.random(seed), 20_000, seed=seed + 1,
                       blgi_config=BlgiConfig(*angles), ancilla_gain=gain)
    assert abs(res.blgi.mean) <= 2 + 5 * res.blgi.sem


@given(seed=st.integers(0, 2**32), x=st.floats(-7, 7))
def test_lhv_outputs_are_signs(seed, x):
    model = LhvModel.random(seed)
    lam = np.arange(len(model.weights))
    assert set(np.unique(model.response(lam, 0, x))) <= {-1.0, 1.0}


def test_lhv_rejects():
    with pytest.raises(InvalidArgumentError):
        LhvModel("magic")
    with pytest.raises(InvalidArgumentError):
        lhv_baseline([0.0], LhvModel(), 1, seed=0)
    with pytest.raises(InvalidArgumentError):
        lhv_baseline([0.0], LhvModel(), 10, seed=0, ancilla_gain=0.5)


def test_blgi_quantum_terms_consistent_with_combination():
    out = evaluate_blgi(BlgiConfig(phi1=0.5, phi2=0.5))
    assert out.C == pytest.approx(blgi_correlator(*out.calibrated), abs=1e-15)
    assert blgi_terms(out.dist) == out.raw


def test_thermal_state_reduces_violation():
    cfg = BlgiConfig(phi1=0.1, phi2=0.1)
    clean = evaluate_blgi(cfg).C
    hot = evaluate_blgi(cfg, NoiseModel(4, thermal_pops=(0.05,) * 4)).C
    assert hot < clean


def test_density_matrix_roundtrip_of_state():
    rho = blgi_state(BlgiConfig())
    assert isinstance(rho, DensityMatrix) and rho.is_valid()
