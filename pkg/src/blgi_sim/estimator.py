"""Correlators, ancilla calibration and violation statistics.

Bits map to eigenvalues as ``0 -> +1`` and ``1 -> -1``, so ``<Z> = 1 - 2 P(1)``.
The four-qubit role order is ``(alpha1, beta1, beta2, alpha2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .core_sim import ProbabilityTable, ShotTable
from .errors import (
    DegenerateCalibrationError,
    InvalidArgumentError,
    SingularCalibrationError,
)

CLASSICAL_BOUND = 2.0
CALIBRATION_MODES = ("sin-phi", "empirical-zero")
ROLES = ("alpha1", "beta1", "beta2", "alpha2")


class SignificanceWarning(RuntimeWarning):
    """Zero spread with a mean above the bound: significance is unbounded."""


class BlgiTerms(NamedTuple):
    """The four pairwise correlators, ordered as they enter ``<C>``."""

    aa: float  # E(alpha1, alpha2)
    ab: float  # E(alpha1, beta2)
    ba: float  # E(beta1, alpha2)
    bb: float  # E(beta1, beta2)


# (left role, right role) for each term of BlgiTerms
TERM_ROLES = (("alpha1", "alpha2"), ("alpha1", "beta2"), ("beta1", "alpha2"), ("beta1", "beta2"))


@dataclass(frozen=True)
class CorrelatorEstimate:
    mean: float
    sem: float
    n: int
    sigmas_above_classical: float

    @classmethod
    def from_samples(cls, values, bound: float = CLASSICAL_BOUND) -> "CorrelatorEstimate":
        """Mean and standard error of a stream of per-realization values.

        Uses compensated summation so sharded reductions merge exactly.
        """
        values = np.asarray(values, dtype=float).ravel()
        n = values.size
        if n < 2:
            raise InvalidArgumentError("need at least two samples for a standard error")
        mean = math.fsum(values) / n
        var = math.fsum((values - mean) ** 2) / (n - 1)
        sem = math.sqrt(var / n)
        est = cls(mean, sem, n, 0.0)
        return cls(mean, sem, n, violation_significance(est, bound))


@dataclass(frozen=True)
class CalibrationCurve:
    """Raw ancilla ``<Z>`` traces with the target prepared in |0> and in |1>."""

    phi_grid: tuple
    zero_state_trace: tuple
    one_state_trace: tuple

    def __post_init__(self):
        grid = tuple(float(p) for p in self.phi_grid)
        zero = tuple(float(z) for z in self.zero_state_trace)
        one = tuple(float(z) for z in self.one_state_trace)
        if not (len(grid) == len(zero) == len(one)) or not grid:
            raise InvalidArgumentError("calibration traces must be nonempty and match the phi grid")
        if any(abs(z) > 1.0 + 1e-12 for z in zero + one):
            raise InvalidArgumentError("calibration traces must lie in [-1, 1]")
        object.__setattr__(self, "phi_grid", grid)
        object.__setattr__(self, "zero_state_trace", zero)
        object.__setattr__(self, "one_state_trace", one)

    def index_of(self, phi: float) -> int:
        hits = np.flatnonzero(np.isclose(self.phi_grid, phi, rtol=0.0, atol=1e-12))
        if hits.size == 0:
            raise InvalidArgumentError(f"phi={phi!r} is not on the calibration grid")
        return int(hits[0])

    def zero_at(self, phi: float) -> float:
        return self.zero_state_trace[self.index_of(phi)]

    def one_at(self, phi: float) -> float:
        return self.one_state_trace[self.index_of(phi)]


def correlation_E(dist: ProbabilityTable) -> float:
    """``P(00) - P(01) - P(10) + P(11)`` of a two-qubit distribution."""
    if dist.n_bits != 2:
        raise InvalidArgumentError(f"correlation_E needs a two-qubit distribution, got {dist.n_bits} qubits")
    p = dist.probs
    return float(p[0] - p[1] - p[2] + p[3])


def blgi_correlator(E_aa: float, E_ab: float, E_ba: float, E_bb: float) -> float:
    return -E_aa - E_ab + E_ba - E_bb


def blgi_terms(dist: ProbabilityTable) -> BlgiTerms:
    """Raw pairwise correlators of a four-role distribution."""
    return BlgiTerms(*(correlation_E(dist.marginal(pair)) for pair in TERM_ROLES))


def calibration_factor(phi: float, mode: str = "sin-phi", curve: CalibrationCurve | None = None) -> float:
    """Rescaling that restores the target ``<Z>`` from the compressed ancilla signal.

    ``sin-phi`` returns ``1/sin(phi)``.  ``empirical-zero`` returns the inverse
    of the measured |0>-state trace at ``phi``, so the calibrated |0>-state mean
    is exactly 1.
    """
    if mode not in CALIBRATION_MODES:
        raise InvalidArgumentError(f"unknown calibration mode {mode!r}")
    phi = float(phi)
    if not np.isfinite(phi) or phi < 0.0 or phi > np.pi / 2 + 1e-12:
        raise InvalidArgumentError(f"phi must lie in (0, pi/2], got {phi!r}")
    if phi == 0.0:
        raise SingularCalibrationError("no information is extracted at phi = 0")
    if mode == "sin-phi":
        return 1.0 / math.sin(phi)
    if curve is None:
        raise InvalidArgumentError("empirical-zero calibration needs a calibration curve")
    zero = curve.zero_at(phi)
    if zero <= 0.0:
        raise DegenerateCalibrationError(f"|0>-state trace is {zero!r} at phi={phi!r}")
    return 1.0 / zero


def apply_blgi_calibration(E_aa: float, E_ab: float, E_ba: float, E_bb: float,
                           cal1: float, cal2: float) -> BlgiTerms:
    """Scale each term by the calibration of the ancillas it involves."""
    for c in (cal1, cal2):
        if not (np.isfinite(c) and c > 0):
            raise InvalidArgumentError(f"calibration factors must be positive and finite, got {c!r}")
    return BlgiTerms(E_aa * cal1 * cal2, E_ab * cal1, E_ba * cal2, E_bb)


def shots_to_pm(rows) -> np.ndarray:
    """Bits to eigenvalues: ``0 -> +1``, ``1 -> -1``."""
    return 1.0 - 2.0 * np.asarray(rows, dtype=float)


def per_shot_correlator(shot, cal1: float = 1.0, cal2: float = 1.0):
    """``C = -a1 a2 - a1 b2 + b1 a2 - b1 b2`` for one realization (or many).

    ``shot`` holds ``+-1`` values in role order ``(alpha1, beta1, beta2,
    alpha2)``; a 2-D array gives one value per row.  The ancilla values are
    scaled to ``+-cal``.
    """
    s = np.asarray(shot, dtype=float)
    a1 = s[..., 0] * cal1
    b1 = s[..., 1]
    b2 = s[..., 2]
    a2 = s[..., 3] * cal2
    c = -a1 * a2 - a1 * b2 + b1 * a2 - b1 * b2
    return float(c) if np.ndim(c) == 0 else c


def _reorder(shots: ShotTable) -> np.ndarray:
    try:
        cols = [shots.qubit_roles.index(r) for r in ROLES]
    except ValueError:
        raise InvalidArgumentError(f"shot table must carry roles {ROLES}, got {shots.qubit_roles}") from None
    return shots.rows[:, cols]


def blgi_terms_from_shots(shots: ShotTable) -> BlgiTerms:
    """Empirical raw correlators, each a compensated mean of eigenvalue products."""
    pm = shots_to_pm(_reorder(shots))
    idx = {r: i for i, r in enumerate(ROLES)}
    n = pm.shape[0]
    return BlgiTerms(*(math.fsum(pm[:, idx[x]] * pm[:, idx[y]]) / n for x, y in TERM_ROLES))


def per_shot_values(shots: ShotTable, cal1: float, cal2: float) -> np.ndarray:
    return per_shot_correlator(shots_to_pm(_reorder(shots)), cal1, cal2)


def estimate_from_shots(shots: ShotTable, cal1: float, cal2: float) -> CorrelatorEstimate:
    """Per-shot correlator stream reduced to mean, SEM and significance."""
    return CorrelatorEstimate.from_samples(per_shot_values(shots, cal1, cal2))


def term_sem(shots: ShotTable, term: str, cal1: float = 1.0, cal2: float = 1.0) -> float:
    """SEM of one calibrated term (``"aa"``, ``"ab"``, ``"ba"`` or ``"bb"``)."""
    pm = shots_to_pm(_reorder(shots))
    scale = {"aa": cal1 * cal2, "ab": cal1, "ba": cal2, "bb": 1.0}
    if term not in scale:
        raise InvalidArgumentError(f"unknown term {term!r}")
    x, y = TERM_ROLES[BlgiTerms._fields.index(term)]
    values = scale[term] * pm[:, ROLES.index(x)] * pm[:, ROLES.index(y)]
    return CorrelatorEstimate.from_samples(values).sem


def violation_significance(estimate: CorrelatorEstimate, bound: float = CLASSICAL_BOUND) -> float:
    """Distance of the mean above ``bound`` in standard errors."""
    if estimate.n < 2:
        raise InvalidArgumentError("significance needs n >= 2")
    excess = estimate.mean - bound
    if estimate.sem == 0.0:
        if excess > 0.0:
            warnings.warn("zero standard error with mean above the bound", SignificanceWarning, stacklevel=2)
            return math.inf
        return 0.0 if excess == 0.0 else -math.inf
    return excess / estimate.sem


def calibrated_trace(trace: Sequence[float], phi_grid: Sequence[float], mode: str,
                     curve: CalibrationCurve | None = None) -> np.ndarray:
    """Apply per-point calibration to a raw ancilla ``<Z>`` trace.

    The empirical mode divides by the |0>-state trace instead of multiplying by
    its inverse, so the |0>-state curve maps to exactly 1.0 with no rounding.
    """
    out = []
    for t, p in zip(trace, phi_grid):
        k = calibration_factor(p, mode, curve)
        out.append(t / curve.zero_at(p) if mode == "empirical-zero" else t * k)
    return np.array(out)
