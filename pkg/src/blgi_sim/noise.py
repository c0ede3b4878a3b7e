"""Noise channels and the per-qubit noise model.

Gate noise (dephasing, amplitude damping) acts on density matrices; readout
noise acts on outcome distributions or on sampled shots.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core_sim import (
    DensityMatrix,
    PAULI_Z,
    ProbabilityTable,
    ShotTable,
    apply_kraus_1q,
    apply_matrix_1q,
    make_rng,
    _check_qubit,
)
from .errors import InvalidArgumentError

# Four-qubit chain (alpha1, beta1, beta2, alpha2) = device qubits Q0..Q3.
DEVICE_READOUT_ERROR = (0.015, 0.004, 0.067, 0.007)
DEVICE_THERMAL_POP = (0.013, 0.007, 0.028, 0.01)
DEVICE_DEPHASING_PER_GATE = 0.0025


def _check_probability(p, name: str) -> float:
    p = float(p)
    if not np.isfinite(p) or p < 0.0 or p > 1.0:
        raise InvalidArgumentError(f"{name} must lie in [0, 1], got {p!r}")
    return p


@dataclass(frozen=True)
class ConfusionMatrix:
    """Readout assignment error of one qubit.

    Args:
        p_read1_given0: probability of reporting 1 when the qubit is in |0>.
        p_read0_given1: probability of reporting 0 when the qubit is in |1>.
    """

    p_read1_given0: float = 0.0
    p_read0_given1: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "p_read1_given0", _check_probability(self.p_read1_given0, "p_read1_given0"))
        object.__setattr__(self, "p_read0_given1", _check_probability(self.p_read0_given1, "p_read0_given1"))

    @classmethod
    def symmetric(cls, error: float) -> "ConfusionMatrix":
        return cls(error, error)

    @classmethod
    def from_visibility(cls, visibility: float) -> "ConfusionMatrix":
        """Symmetric confusion with both error rates equal to ``(1 - v) / 2``."""
        v = float(visibility)
        if not 0.0 <= v <= 1.0:
            raise InvalidArgumentError(f"visibility must lie in [0, 1], got {v!r}")
        return cls.symmetric(0.5 * (1.0 - v))

    @property
    def visibility(self) -> float:
        return 1.0 - self.p_read1_given0 - self.p_read0_given1

    @property
    def matrix(self) -> np.ndarray:
        """Row-stochastic ``M[true, reported]``."""
        return np.array(
            [
                [1.0 - self.p_read1_given0, self.p_read1_given0],
                [self.p_read0_given1, 1.0 - self.p_read0_given1],
            ]
        )


@dataclass(frozen=True)
class NoiseModel:
    """Per-qubit noise parameters for an ``n``-qubit register.

    ``gate_dephasing_p`` and ``t1_gamma`` are applied once to every qubit that
    takes part in a gate layer.  ``readout_confusion`` and ``thermal_pops`` hold
    one entry per qubit.
    """

    n_qubits: int = 4
    gate_dephasing_p: float = 0.0
    t1_gamma: float = 0.0
    readout_confusion: tuple = ()
    thermal_pops: tuple = ()

    def __post_init__(self):
        n = int(self.n_qubits)
        if n < 1:
            raise InvalidArgumentError("n_qubits must be positive")
        _check_probability(self.gate_dephasing_p, "gate_dephasing_p")
        _check_probability(self.t1_gamma, "t1_gamma")
        conf = tuple(self.readout_confusion) or (ConfusionMatrix(),) * n
        conf = tuple(c if isinstance(c, ConfusionMatrix) else ConfusionMatrix(*c) for c in conf)
        pops = tuple(float(p) for p in self.thermal_pops) or (0.0,) * n
        if len(conf) != n or len(pops) != n:
            raise InvalidArgumentError(f"need one confusion matrix and one thermal population per qubit ({n})")
        for p in pops:
            if not np.isfinite(p) or not 0.0 <= p <= 0.5:
                raise InvalidArgumentError(f"thermal population {p!r} outside [0, 0.5]")
        object.__setattr__(self, "readout_confusion", conf)
        object.__setattr__(self, "thermal_pops", pops)

    @classmethod
    def noiseless(cls, n_qubits: int = 4) -> "NoiseModel":
        return cls(n_qubits)

    @classmethod
    def device(cls) -> "NoiseModel":
        """Device defaults: readout errors, thermal populations, 0.25 % dephasing per gate."""
        return cls(
            4,
            gate_dephasing_p=DEVICE_DEPHASING_PER_GATE,
            readout_confusion=tuple(ConfusionMatrix.symmetric(e) for e in DEVICE_READOUT_ERROR),
            thermal_pops=DEVICE_THERMAL_POP,
        )

    @property
    def is_noiseless(self) -> bool:
        return (
            self.gate_dephasing_p == 0.0
            and self.t1_gamma == 0.0
            and all(c.visibility == 1.0 for c in self.readout_confusion)
            and not any(self.thermal_pops)
        )

    @property
    def has_gate_noise(self) -> bool:
        return self.gate_dephasing_p > 0.0 or self.t1_gamma > 0.0

    def with_visibility(self, visibility: float) -> "NoiseModel":
        conf = ConfusionMatrix.from_visibility(visibility)
        return replace(self, readout_confusion=(conf,) * self.n_qubits)

    def with_dephasing(self, p: float) -> "NoiseModel":
        return replace(self, gate_dephasing_p=p)

    def without_readout_error(self) -> "NoiseModel":
        return replace(self, readout_confusion=(ConfusionMatrix(),) * self.n_qubits)

    def apply_layer_noise(self, state: DensityMatrix, qubits: Sequence[int]) -> DensityMatrix:
        """Gate-layer noise on every qubit that took part in the layer."""
        if not self.has_gate_noise:
            return state
        for q in sorted(set(qubits)):
            if self.gate_dephasing_p:
                state = dephasing_channel(state, q, self.gate_dephasing_p)
            if self.t1_gamma:
                state = amplitude_damping_channel(state, q, self.t1_gamma)
        return state

    def to_dict(self) -> dict:
        return {
            "gate_dephasing_p": self.gate_dephasing_p,
            "t1_gamma": self.t1_gamma,
            "readout_p1_given0": [c.p_read1_given0 for c in self.readout_confusion],
            "readout_p0_given1": [c.p_read0_given1 for c in self.readout_confusion],
            "thermal_pops": list(self.thermal_pops),
        }

    @classmethod
    def from_dict(cls, data: dict, n_qubits: int = 4) -> "NoiseModel":
        """Build from a config mapping; missing keys take noiseless values.

        ``readout_error`` (one symmetric error per qubit, or a scalar) and
        ``visibility`` are accepted as shorthands.
        """
        known = {
            "gate_dephasing_p", "t1_gamma", "readout_p1_given0", "readout_p0_given1",
            "readout_error", "visibility", "thermal_pops",
        }
        unknown = set(data) - known
        if unknown:
            raise InvalidArgumentError(f"unknown noise keys: {sorted(unknown)}")

        def per_qubit(value, name):
            if value is None:
                return [0.0] * n_qubits
            if np.isscalar(value):
                return [float(value)] * n_qubits
            value = [float(v) for v in value]
            if len(value) != n_qubits:
                raise InvalidArgumentError(f"{name} needs {n_qubits} entries")
            return value

        if "visibility" in data:
            if any(k in data for k in ("readout_error", "readout_p1_given0", "readout_p0_given1")):
                raise InvalidArgumentError("give either visibility or explicit readout errors, not both")
            conf = [ConfusionMatrix.from_visibility(data["visibility"])] * n_qubits
        elif "readout_error" in data:
            conf = [ConfusionMatrix.symmetric(e) for e in per_qubit(data["readout_error"], "readout_error")]
        else:
            p10 = per_qubit(data.get("readout_p1_given0"), "readout_p1_given0")
            p01 = per_qubit(data.get("readout_p0_given1"), "readout_p0_given1")
            conf = [ConfusionMatrix(a, b) for a, b in zip(p10, p01)]
        return cls(
            n_qubits,
            gate_dephasing_p=float(data.get("gate_dephasing_p", 0.0)),
            t1_gamma=float(data.get("t1_gamma", 0.0)),
            readout_confusion=tuple(conf),
            thermal_pops=tuple(per_qubit(data.get("thermal_pops"), "thermal_pops")),
        )


def dephasing_channel(state: DensityMatrix, q: int, p: float) -> DensityMatrix:
    """``rho -> (1 - p) rho + p Z rho Z`` on qubit ``q``."""
    p = _check_probability(p, "p")
    q = _check_qubit(state.n_qubits, q)
    if p == 0.0:
        return state.copy()
    flipped = apply_matrix_1q(state, q, PAULI_Z)
    return DensityMatrix(state.n_qubits, (1.0 - p) * state.data + p * flipped)


def amplitude_damping_kraus(gamma: float) -> tuple:
    gamma = _check_probability(gamma, "gamma")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return k0, k1


def amplitude_damping_channel(state: DensityMatrix, q: int, gamma: float) -> DensityMatrix:
    """Energy decay of qubit ``q`` with probability ``gamma``."""
    return apply_kraus_1q(state, q, amplitude_damping_kraus(gamma))


def _check_matrices(n_bits: int, matrices) -> list:
    matrices = list(matrices)
    if len(matrices) != n_bits:
        raise InvalidArgumentError(f"need {n_bits} confusion matrices, got {len(matrices)}")
    for m in matrices:
        if not isinstance(m, ConfusionMatrix):
            raise InvalidArgumentError(f"expected ConfusionMatrix, got {type(m).__name__}")
    return matrices


def readout_confusion(dist: ProbabilityTable, matrices: Sequence[ConfusionMatrix]) -> ProbabilityTable:
    """Push an outcome distribution through independent per-qubit confusion."""
    matrices = _check_matrices(dist.n_bits, matrices)
    k = dist.n_bits
    t = dist.probs.reshape([2] * k)
    for axis, m in enumerate(matrices):
        t = np.moveaxis(np.tensordot(t, m.matrix, axes=([axis], [0])), -1, axis)
    probs = np.clip(t.ravel(), 0.0, None)
    return ProbabilityTable(dist.qubit_roles, probs / probs.sum())


def readout_flip_shots(shots: ShotTable, matrices: Sequence[ConfusionMatrix], seed: int) -> ShotTable:
    """Shot-level confusion: flip each recorded bit independently (seeded)."""
    matrices = _check_matrices(len(shots.qubit_roles), matrices)
    rng = make_rng(seed)
    rows = shots.rows
    flip_prob = np.empty(rows.shape)
    for j, m in enumerate(matrices):
        flip_prob[:, j] = np.where(rows[:, j] == 0, m.p_read1_given0, m.p_read0_given1)
    flips = rng.random(rows.shape) < flip_prob
    return ShotTable(shots.qubit_roles, (rows ^ flips).astype(np.uint8), shots.seed, shots.workers)
