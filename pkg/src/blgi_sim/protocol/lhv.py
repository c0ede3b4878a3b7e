"""Classical local-hidden-variable baseline.

A model samples hidden states ``lambda`` and answers every detector query
with a deterministic +-1 that depends only on ``lambda``, the party (which
Bell qubit) and the measurement axis.  The same axes as the quantum
simulation are queried, so the correlators are directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core_sim import make_rng
from ..errors import InvalidArgumentError
from ..estimator import CorrelatorEstimate, per_shot_correlator
from .blgi import BlgiConfig, blgi_axes
from .chsh import CHSH_LABELS, CHSH_SIGNS, chsh_axes

LHV_KINDS = ("constant", "sign", "random")


def _sgn(x) -> np.ndarray:
    # deterministic tie-break: sgn(0) = +1
    return np.where(np.asarray(x) >= 0.0, 1.0, -1.0)


@dataclass(frozen=True)
class LhvModel:
    """Hidden-variable model with deterministic +-1 detector responses.

    ``constant``
        Outputs ``constant_outputs[party]`` whatever ``lambda`` and the axis.
    ``sign``
        ``lambda`` uniform on ``[0, 2 pi)``; party 1 answers
        ``sgn(cos(x - lambda))`` and party 2 the same times
        ``party2_sign``.  Gives the linear ``E(theta)`` sawtooth.
    ``random``
        A finite set of hidden states with random weights; state ``k`` answers
        ``sgn(cos(x - psi_k) + c_k)`` per party with random ``psi``, ``c`` and a
        random output sign.  Built with :meth:`random`.
    """

    kind: str = "sign"
    party2_sign: float = 1.0
    constant_outputs: tuple = (1.0, 1.0)
    weights: tuple = ()
    psi: tuple = ()
    offset: tuple = ()
    flip: tuple = ()

    def __post_init__(self):
        if self.kind not in LHV_KINDS:
            raise InvalidArgumentError(f"unknown LHV model kind {self.kind!r}")
        if self.party2_sign not in (1.0, -1.0):
            raise InvalidArgumentError("party2_sign must be +1 or -1")
        if any(v not in (1.0, -1.0) for v in self.constant_outputs) or len(self.constant_outputs) != 2:
            raise InvalidArgumentError("constant_outputs must be two +-1 values")
        if self.kind == "random":
            k = len(self.weights)
            if k == 0 or any(np.shape(a) != (k, 2) for a in (self.psi, self.offset, self.flip)):
                raise InvalidArgumentError("random model needs weights and per-party (k, 2) tables")
            if abs(sum(self.weights) - 1.0) > 1e-9 or min(self.weights) < 0:
                raise InvalidArgumentError("hidden-state weights must form a distribution")

    @classmethod
    def random(cls, seed: int, n_hidden: int = 8) -> "LhvModel":
        rng = make_rng(seed)
        weights = rng.dirichlet(np.ones(n_hidden))
        return cls(
            "random",
            weights=tuple(float(w) for w in weights),
            psi=tuple(map(tuple, rng.uniform(0, 2 * np.pi, (n_hidden, 2)))),
            offset=tuple(map(tuple, rng.uniform(-1, 1, (n_hidden, 2)))),
            flip=tuple(map(tuple, rng.choice([-1.0, 1.0], (n_hidden, 2)))),
        )

    def sample_hidden(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "sign":
            return rng.uniform(0.0, 2 * np.pi, n)
        if self.kind == "random":
            return rng.choice(len(self.weights), size=n, p=np.asarray(self.weights))
        return np.zeros(n)

    def response(self, lam: np.ndarray, party: int, axis: float) -> np.ndarray:
        """Deterministic +-1 output of ``party`` (0 or 1) at ``axis`` for each ``lambda``."""
        if self.kind == "constant":
            return np.full(np.shape(lam), self.constant_outputs[party])
        if self.kind == "sign":
            out = _sgn(np.cos(axis - lam))
            return out * (self.party2_sign if party == 1 else 1.0)
        idx = np.asarray(lam, dtype=int)
        psi = np.asarray(self.psi)[idx, party]
        c = np.asarray(self.offset)[idx, party]
        return np.asarray(self.flip)[idx, party] * _sgn(np.cos(axis - psi) + c)


def linear_sawtooth(delta) -> np.ndarray:
    """``1 - 2|delta|/pi`` with ``delta`` wrapped to ``[-pi, pi]``."""
    d = np.abs((np.asarray(delta, dtype=float) + np.pi) % (2 * np.pi) - np.pi)
    return 1.0 - 2.0 * d / np.pi


def exact_correlation(model: LhvModel, x: float, y: float, grid: int = 200_000) -> float:
    """``E(x, y)`` by direct enumeration over ``lambda``."""
    if model.kind == "random":
        lam = np.arange(len(model.weights))
        w = np.asarray(model.weights)
    elif model.kind == "sign":
        lam = (np.arange(grid) + 0.5) * (2 * np.pi / grid)
        w = np.full(grid, 1.0 / grid)
    else:
        lam, w = np.zeros(1), np.ones(1)
    return float(np.sum(w * model.response(lam, 0, x) * model.response(lam, 1, y)))


@dataclass(frozen=True)
class LhvResult:
    theta_grid: tuple
    E: tuple
    chsh: tuple
    chsh_sem: tuple
    blgi: CorrelatorEstimate
    extra: dict = field(default_factory=dict, compare=False)


def _ancilla_signal(rng, value: np.ndarray, gain: float) -> np.ndarray:
    """Noisy detector reporting ``+-gain`` whose average is ``value``."""
    if gain == 1.0:
        return value
    p_plus = 0.5 * (1.0 + value / gain)
    return np.where(rng.random(value.shape) < p_plus, gain, -gain)


def lhv_baseline(theta_grid, model: LhvModel, n_samples: int, seed: int,
                 blgi_config: BlgiConfig | None = None, ancilla_gain: float = 1.0) -> LhvResult:
    """Hidden-variable estimates of ``E(theta)``, CHSH and the BLGI ``<C>``.

    ``ancilla_gain > 1`` replaces the two ancilla outputs with unbiased noisy
    signals of amplitude ``+-gain`` (the expanded range of a calibrated weak
    detector); their mean still equals the deterministic response.
    """
    if isinstance(n_samples, bool) or int(n_samples) != n_samples or n_samples < 2:
        raise InvalidArgumentError("n_samples must be an integer >= 2")
    if ancilla_gain < 1.0:
        raise InvalidArgumentError("ancilla_gain must be >= 1")
    n_samples = int(n_samples)
    rng = make_rng(seed)
    lam = model.sample_hidden(rng, n_samples)
    thetas = tuple(float(t) for t in theta_grid)

    E_list, chsh_list, sem_list = [], [], []
    for theta in thetas:
        ax = chsh_axes(theta)
        terms = []
        for label in CHSH_LABELS:
            x = ax["a'"] if label.startswith("a'") else ax["a"]
            y = ax["b'"] if label.endswith("b'") else ax["b"]
            terms.append(model.response(lam, 0, x) * model.response(lam, 1, y))
        per_sample = sum(s * t for s, t in zip(CHSH_SIGNS, terms))
        est = CorrelatorEstimate.from_samples(per_sample)
        E_list.append(float(np.mean(terms[0])))
        chsh_list.append(est.mean)
        sem_list.append(est.sem)

    axes = blgi_axes(blgi_config or BlgiConfig())
    a1 = _ancilla_signal(rng, model.response(lam, 0, axes["alpha1"]), ancilla_gain)
    b1 = model.response(lam, 0, axes["beta1"])
    b2 = model.response(lam, 1, axes["beta2"])
    a2 = _ancilla_signal(rng, model.response(lam, 1, axes["alpha2"]), ancilla_gain)
    c = per_shot_correlator(np.stack([a1, b1, b2, a2], axis=1))
    return LhvResult(thetas, tuple(E_list), tuple(chsh_list), tuple(sem_list), CorrelatorEstimate.from_samples(c))
