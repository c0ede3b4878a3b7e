"""Gate-layer building blocks shared by the experiments."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from ..core_sim import DensityMatrix, GateOp
from ..errors import InvalidArgumentError
from ..noise import NoiseModel

BELL_VARIANTS = ("psi-", "psi+", "phi+", "phi-")

_BELL_ALIASES = {
    "psi-": "psi-", "Ψ−": "psi-", "Ψ-": "psi-", "singlet": "psi-",
    "psi+": "psi+", "Ψ+": "psi+",
    "phi+": "phi+", "Φ+": "phi+",
    "phi-": "phi-", "Φ−": "phi-", "Φ-": "phi-",
}

_SQRT_HALF = 1.0 / np.sqrt(2.0)
BELL_VECTORS = {
    "phi+": np.array([1, 0, 0, 1]) * _SQRT_HALF,
    "phi-": np.array([1, 0, 0, -1]) * _SQRT_HALF,
    "psi+": np.array([0, 1, 1, 0]) * _SQRT_HALF,
    "psi-": np.array([0, 1, -1, 0]) * _SQRT_HALF,
}


def normalize_variant(variant: str) -> str:
    try:
        return _BELL_ALIASES[variant]
    except (KeyError, TypeError):
        raise InvalidArgumentError(f"unknown Bell variant {variant!r}; expected one of {BELL_VARIANTS}") from None


def run_layer(state: DensityMatrix, ops: Iterable[GateOp], noise: NoiseModel | None = None) -> DensityMatrix:
    """Apply simultaneous gates, then gate noise once per participating qubit."""
    touched = []
    for op in ops:
        state = op.apply(state)
        touched.extend(op.targets)
    if noise is not None:
        state = noise.apply_layer_noise(state, touched)
    return state


def prepare_bell(state: DensityMatrix, q1: int, q2: int, variant: str = "psi-",
                 noise: NoiseModel | None = None) -> DensityMatrix:
    """Entangle two ground-state qubits into a Bell state.

    Three layers: ``R_y(+-pi/2)`` on ``q1`` together with a pre-rotation of
    ``q2``; a CZ; ``R_y(pi/2)`` on ``q2``.  The CZ sandwiched between
    ``R_y(-pi/2)`` and ``R_y(pi/2)`` on ``q2`` is a CNOT; the ``psi`` variants
    additionally flip ``q2`` (folded into its pre-rotation) and the ``-``
    variants start ``q1`` in ``(|0> - |1>)/sqrt(2)``.
    """
    variant = normalize_variant(variant)
    if q1 == q2:
        raise InvalidArgumentError("Bell qubits must differ")
    sign = -1.0 if variant.endswith("-") else 1.0
    flip = np.pi if variant.startswith("psi") else 0.0
    state = run_layer(state, [GateOp("ry", (q1,), sign * np.pi / 2), GateOp("ry", (q2,), flip - np.pi / 2)], noise)
    state = run_layer(state, [GateOp("cz", (q1, q2))], noise)
    return run_layer(state, [GateOp("ry", (q2,), np.pi / 2)], noise)


def _check_phi(phi: float) -> float:
    phi = float(phi)
    if not np.isfinite(phi) or phi < 0.0 or phi > np.pi / 2 + 1e-12:
        raise InvalidArgumentError(f"measurement strength phi must lie in [0, pi/2], got {phi!r}")
    return phi


def weak_measure_many(state: DensityMatrix, pairs: Sequence[tuple], phis: Sequence[float],
                      noise: NoiseModel | None = None) -> DensityMatrix:
    """Simultaneous ancilla probes on several ``(target, ancilla)`` pairs.

    Each probe is ``R_y(phi)`` on the ancilla, a CZ with the target, then
    ``R_y(-pi/2)`` on the ancilla, which leaves ``<Z>_ancilla = sin(phi) <Z>_target``.
    All probes share the same three layers.
    """
    phis = [_check_phi(p) for p in phis]
    if len(phis) != len(pairs):
        raise InvalidArgumentError("one strength per (target, ancilla) pair")
    state = run_layer(state, [GateOp("ry", (a,), phi) for (_, a), phi in zip(pairs, phis)], noise)
    state = run_layer(state, [GateOp("cz", (t, a)) for t, a in pairs], noise)
    return run_layer(state, [GateOp("ry", (a,), -np.pi / 2) for _, a in pairs], noise)


def weak_measure(state: DensityMatrix, target: int, ancilla: int, phi: float,
                 noise: NoiseModel | None = None) -> DensityMatrix:
    """Tunable-strength Z probe of ``target`` by ``ancilla``.

    ``phi = pi/2`` is a CNOT-style projective copy; ``phi = 0`` extracts nothing
    and leaves the target untouched.
    """
    if target == ancilla:
        raise InvalidArgumentError("target and ancilla must differ")
    return weak_measure_many(state, [(target, ancilla)], [phi], noise)
