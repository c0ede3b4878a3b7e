"""Single-qubit Leggett-Garg experiment.

A measurement "at angle x" is a projective measurement along the Bloch axis
at angle ``x`` in the x-z plane: rotate by ``R_y(-x)``, read Z, rotate back.
Intermediate projective measurements are measure-and-forget on the density
matrix, with the outcome kept as a classical branch label.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core_sim import DensityMatrix, apply_unitary_1q, init_register, measure_branches, outcome_distribution
from ..errors import InvalidArgumentError
from .circuits import weak_measure

LGI_UPPER_BOUND = 1.0
LGI_LOWER_BOUND = -3.0


@dataclass(frozen=True)
class LgiResult:
    E12: float
    E23: float
    E13: float

    @property
    def value(self) -> float:
        return self.E12 + self.E23 - self.E13

    @property
    def violates(self) -> bool:
        return self.value > LGI_UPPER_BOUND + 1e-12 or self.value < LGI_LOWER_BOUND - 1e-12


def lgi_combination(E12: float, E23: float, E13: float) -> float:
    return E12 + E23 - E13


def _measure_in_basis(state: DensityMatrix, q: int, angle: float) -> list:
    """``[(sign, prob, post_state)]`` for a projective measurement at ``angle``."""
    rotated = apply_unitary_1q(state, q, "ry", -angle)
    out = []
    for bit, (p, post) in enumerate(measure_branches(rotated, q)):
        out.append((1.0 - 2.0 * bit, p, apply_unitary_1q(post, q, "ry", angle)))
    return out


def two_time_distribution(state: DensityMatrix, first: float, second: float, q: int = 0) -> np.ndarray:
    """``P(b1, b2)`` for sequential projective measurements, index ``2 b1 + b2``."""
    probs = np.zeros(4)
    for s1, p1, post in _measure_in_basis(state, q, first):
        if p1 == 0.0:
            continue
        for s2, p2, _ in _measure_in_basis(post, q, second):
            probs[2 * int(s1 < 0) + int(s2 < 0)] = p1 * p2
    return probs


def two_time_correlator(state: DensityMatrix, first: float, second: float, q: int = 0) -> float:
    """``E = sum s1 s2 P(s1, s2)`` for sequential projective measurements."""
    p = two_time_distribution(state, first, second, q)
    return float(p[0] - p[1] - p[2] + p[3])


def _check_angles(basis_angles) -> tuple:
    angles = tuple(float(x) for x in basis_angles)
    if len(angles) != 3 or not all(np.isfinite(angles)):
        raise InvalidArgumentError("need three finite measurement angles")
    return angles


def run_lgi(state_prep: float, basis_angles, weak_phi: float | None = None) -> LgiResult:
    """Three two-time correlators and their Leggett-Garg combination.

    The qubit starts in ``R_y(state_prep)|0>``.  Without ``weak_phi`` the three
    pairs ``(t1,t2)``, ``(t2,t3)``, ``(t1,t3)`` are separate projective
    experiments.  With ``weak_phi`` a single configuration is run: projective
    at ``t1``, an ancilla probe of strength ``weak_phi`` at ``t2`` (calibrated
    by ``1/sin(weak_phi)``), projective at ``t3``.
    """
    if not np.isfinite(state_prep):
        raise InvalidArgumentError("state_prep must be finite")
    t1, t2, t3 = _check_angles(basis_angles)
    state = lgi_initial_state(state_prep)
    if weak_phi is None:
        return LgiResult(
            two_time_correlator(state, t1, t2),
            two_time_correlator(state, t2, t3),
            two_time_correlator(state, t1, t3),
        )
    return _run_weak_lgi(state, (t1, t2, t3), weak_phi)


def weak_lgi_distribution(state: DensityMatrix, angles: tuple, phi: float) -> np.ndarray:
    """Joint ``P(b1, b3, b_ancilla)`` of the single-configuration weak LGI run.

    Index is ``4 b1 + 2 b3 + b_ancilla``; the ancilla probes the ``t2`` basis.
    """
    phi = float(phi)
    if not 0.0 < phi <= np.pi / 2 + 1e-12:
        raise InvalidArgumentError("weak_phi must lie in (0, pi/2]")
    t1, t2, t3 = angles
    probs = np.zeros(8)
    for s1, p1, post in _measure_in_basis(state, 0, t1):
        if p1 == 0.0:
            continue
        # target 0, ancilla 1
        reg = DensityMatrix(2, np.kron(post.data, init_register(1).data))
        reg = apply_unitary_1q(reg, 0, "ry", -t2)
        reg = weak_measure(reg, 0, 1, phi)
        reg = apply_unitary_1q(reg, 0, "ry", t2 - t3)
        offset = 4 * int(s1 < 0)
        probs[offset:offset + 4] = p1 * outcome_distribution(reg, [0, 1]).probs
    return probs


def weak_lgi_terms(values: np.ndarray, cal: float) -> tuple:
    """``(E12, E23, E13)`` from +-1 columns ``(s1, s3, alpha)`` (rows = realizations)."""
    s1, s3, alpha = values[..., 0], values[..., 1], cal * values[..., 2]
    return s1 * alpha, alpha * s3, s1 * s3


def _run_weak_lgi(state: DensityMatrix, angles: tuple, phi: float) -> LgiResult:
    probs = weak_lgi_distribution(state, angles, phi)
    pm = 1.0 - 2.0 * ((np.arange(8)[:, None] >> np.array([2, 1, 0])) & 1)
    terms = weak_lgi_terms(pm, 1.0 / np.sin(phi))
    return LgiResult(*(float(probs @ t) for t in terms))


def lgi_initial_state(state_prep: float) -> DensityMatrix:
    return apply_unitary_1q(init_register(1), 0, "ry", state_prep)


def classical_lgi_values() -> list:
    """LGI combination for every deterministic assignment of three +-1 values."""
    values = []
    for q1 in (-1, 1):
        for q2 in (-1, 1):
            for q3 in (-1, 1):
                values.append(lgi_combination(q1 * q2, q2 * q3, q1 * q3))
    return values
