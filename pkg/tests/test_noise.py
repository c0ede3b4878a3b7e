import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle as O
from blgi_sim.core_sim import DensityMatrix, ProbabilityTable, apply_unitary_1q, init_register, sample_shots
from blgi_sim.errors import InvalidArgumentError
from blgi_sim.noise import (
    DEVICE_READOUT_ERROR,
    DEVICE_THERMAL_POP,
    ConfusionMatrix,
    NoiseModel,
    amplitude_damping_channel,
    dephasing_channel,
    readout_confusion,
    readout_flip_shots,
)

probs01 = st.floats(0.0, 1.0)


def plus():
    return apply_unitary_1q(init_register(1), 0, "ry", np.pi / 2)


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    rho = a @ a.conj().T
    return DensityMatrix(n, rho / np.trace(rho))


# ------------------------------------------------------------------ dephasing

def test_dephasing_zero_identity():
    rho = random_state(2, 0)
    assert np.allclose(dephasing_channel(rho, 1, 0.0).data, rho.data, atol=1e-15)


def test_dephasing_half_kills_coherence():
    out = dephasing_channel(plus(), 0, 0.5).data
    assert np.allclose(out, np.eye(2) / 2, atol=1e-12)


def test_dephasing_point_one():
    out = dephasing_channel(plus(), 0, 0.1).data
    assert abs(out[0, 1]) == pytest.approx(0.4, abs=1e-12)


@given(p=probs01, q=st.integers(0, 2), seed=st.integers(0, 10_000))
def test_dephasing_matches_oracle_and_keeps_populations(p, q, seed):
    rho = random_state(3, seed)
    out = dephasing_channel(rho, q, p)
    assert np.allclose(out.data, O.dephase(rho.data, q, 3, p), atol=1e-12)
    assert np.allclose(np.diag(out.data), np.diag(rho.data), atol=1e-12)
    assert abs(out.trace() - 1) < 1e-12 and out.min_eigenvalue() >= -1e-10


@given(p1=probs01, p2=probs01)
def test_dephasing_composition(p1, p2):
    out = dephasing_channel(dephasing_channel(plus(), 0, p1), 0, p2).data
    assert out[0, 1].real == pytest.approx(0.5 * (1 - 2 * p1) * (1 - 2 * p2), abs=1e-12)


@pytest.mark.parametrize("p", [-0.01, 1.01, np.nan])
def test_dephasing_rejects(p):
    with pytest.raises(InvalidArgumentError):
        dephasing_channel(plus(), 0, p)


# ----------------------------------------------------------- amplitude damping

def one():
    return apply_unitary_1q(init_register(1), 0, "ry", np.pi)


def test_damping_zero_identity():
    rho = random_state(2, 5)
    assert np.allclose(amplitude_damping_channel(rho, 0, 0.0).data, rho.data, atol=1e-15)


def test_damping_full_decay():
    assert np.allclose(amplitude_damping_channel(one(), 0, 1.0).data, np.diag([1, 0]), atol=1e-15)


def test_damping_point_two():
    assert np.allclose(amplitude_damping_channel(one(), 0, 0.2).data, np.diag([0.2, 0.8]), atol=1e-15)


@given(g=probs01, q=st.integers(0, 1), seed=st.integers(0, 10_000))
def test_damping_matches_oracle(g, q, seed):
    rho = random_state(2, seed)
    out = amplitude_damping_channel(rho, q, g)
    assert np.allclose(out.data, O.damp(rho.data, q, 2, g), atol=1e-12)
    assert abs(out.trace() - 1) < 1e-12 and out.min_eigenvalue() >= -1e-10
    p1_before = O.marginal(O.diag_probs(rho.data), 2, (q,))[1]
    p1_after = O.marginal(O.diag_probs(out.data), 2, (q,))[1]
    assert p1_after == pytest.approx((1 - g) * p1_before, abs=1e-12)


@pytest.mark.parametrize("g", [-0.5, 2.0])
def test_damping_rejects(g):
    with pytest.raises(InvalidArgumentError):
        amplitude_damping_channel(one(), 0, g)


# ---------------------------------------------------------------- readout

def test_confusion_identity():
    dist = ProbabilityTable(("a", "b"), [0.1, 0.2, 0.3, 0.4])
    out = readout_confusion(dist, [ConfusionMatrix(), ConfusionMatrix()])
    assert np.allclose(out.probs, dist.probs, atol=1e-15)


def test_confusion_q0_table_value():
    out = readout_confusion(ProbabilityTable(("q0",), [1, 0]), [ConfusionMatrix(DEVICE_READOUT_ERROR[0], 0.0)])
    assert np.allclose(out.probs, [0.985, 0.015], atol=1e-15)


def test_confusion_two_qubit_explicit_matrix():
    dist = ProbabilityTable(("a", "b"), [0, 0.5, 0.5, 0])
    out = readout_confusion(dist, [ConfusionMatrix.symmetric(0.1)] * 2)
    assert np.allclose(out.probs, O.confuse(dist.probs, 2, [(0.1, 0.1)] * 2), atol=1e-14)
    assert np.allclose(out.probs, [0.09, 0.41, 0.41, 0.09], atol=1e-14)


@given(
    e=st.lists(st.tuples(probs01, probs01), min_size=3, max_size=3),
    w=st.lists(st.floats(0.0, 1.0), min_size=8, max_size=8).filter(lambda v: sum(v) > 0.1),
)
def test_confusion_matches_stochastic_oracle(e, w):
    p = np.array(w) / sum(w)
    out = readout_confusion(ProbabilityTable(("x", "y", "z"), p), [ConfusionMatrix(*x) for x in e])
    assert np.allclose(out.probs, O.confuse(p, 3, e), atol=1e-12)
    assert out.probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_confusion_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        readout_confusion(ProbabilityTable(("a", "b"), [1, 0, 0, 0]), [ConfusionMatrix()])


def test_shot_flips_match_distribution_map():
    n = 10**6
    dist = ProbabilityTable(("a", "b"), [0.4, 0.1, 0.2, 0.3])
    mats = [ConfusionMatrix(0.05, 0.12), ConfusionMatrix(0.02, 0.07)]
    flipped = readout_flip_shots(sample_shots(dist, n, seed=11), mats, seed=12)
    freq = flipped.frequencies()
    expected = readout_confusion(dist, mats).probs
    assert np.all(np.abs(freq - expected) <= 5 * np.sqrt(expected * (1 - expected) / n))


def test_shot_flips_reproducible():
    dist = ProbabilityTable(("a",), [0.5, 0.5])
    shots = sample_shots(dist, 1000, 1)
    a = readout_flip_shots(shots, [ConfusionMatrix.symmetric(0.3)], 5)
    b = readout_flip_shots(shots, [ConfusionMatrix.symmetric(0.3)], 5)
    assert np.array_equal(a.rows, b.rows)


# ---------------------------------------------------------- ConfusionMatrix

@given(v=st.floats(0.0, 1.0))
def test_visibility_roundtrip(v):
    c = ConfusionMatrix.from_visibility(v)
    assert c.visibility == pytest.approx(v, abs=1e-15)
    assert c.p_read1_given0 == c.p_read0_given1
    assert np.allclose(c.matrix.sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("v", [-0.1, 1.1])
def test_visibility_domain(v):
    with pytest.raises(InvalidArgumentError):
        ConfusionMatrix.from_visibility(v)


@pytest.mark.parametrize("args", [(-0.1, 0.0), (0.0, 1.1)])
def test_confusion_rejects(args):
    with pytest.raises(InvalidArgumentError):
        ConfusionMatrix(*args)


# ------------------------------------------------------------- NoiseModel

def test_device_defaults():
    nm = NoiseModel.device()
    assert [c.p_read1_given0 for c in nm.readout_confusion] == list(DEVICE_READOUT_ERROR)
    assert nm.thermal_pops == DEVICE_THERMAL_POP
    assert nm.gate_dephasing_p == 0.0025


def test_noiseless_flags():
    assert NoiseModel.noiseless().is_noiseless
    assert not NoiseModel.device().is_noiseless


@pytest.mark.parametrize("kw", [
    {"gate_dephasing_p": 1.5},
    {"t1_gamma": -0.1},
    {"thermal_pops": (0.6, 0, 0, 0)},
    {"thermal_pops": (0.1, 0.1)},
    {"readout_confusion": (ConfusionMatrix(),)},
])
def test_noise_model_rejects(kw):
    with pytest.raises(InvalidArgumentError):
        NoiseModel(4, **kw)


def test_noise_from_dict_roundtrip():
    nm = NoiseModel(4, 0.01, 0.002, tuple(ConfusionMatrix(0.01 * k, 0.02 * k) for k in range(4)),
                    (0.0, 0.01, 0.02, 0.03))
    assert NoiseModel.from_dict(nm.to_dict()) == nm


def test_noise_from_dict_shorthands():
    assert NoiseModel.from_dict({"visibility": 0.9}).readout_confusion[2].visibility == pytest.approx(0.9)
    assert NoiseModel.from_dict({"readout_error": 0.1}).readout_confusion[0] == ConfusionMatrix(0.1, 0.1)
    with pytest.raises(InvalidArgumentError):
        NoiseModel.from_dict({"visibility": 0.9, "readout_error": 0.1})
    with pytest.raises(InvalidArgumentError):
        NoiseModel.from_dict({"dephasing": 0.1})


def test_layer_noise_touches_only_listed_qubits():
    rho = random_state(3, 7)
    nm = NoiseModel(3, 0.2, 0.1)
    out = nm.apply_layer_noise(rho, [1, 1])
    ref = O.damp(O.dephase(rho.data, 1, 3, 0.2), 1, 3, 0.1)
    assert np.allclose(out.data, ref, atol=1e-12)


@settings(max_examples=30)
@given(p=probs01, g=probs01, seed=st.integers(0, 10_000))
def test_layer_noise_preserves_validity(p, g, seed):
    out = NoiseModel(2, p, g).apply_layer_noise(random_state(2, seed), [0, 1])
    assert out.is_valid()
