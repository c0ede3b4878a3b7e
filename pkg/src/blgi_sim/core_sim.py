"""Dense density-matrix simulation of a small qubit register.

Conventions used throughout the package:

* Single-qubit rotations are ``R_k(theta) = exp(-i * theta * sigma_k / 2)`` with
  ``sigma_y = [[0, -i], [i, 0]]``, so ``R_y(theta)|0> = cos(theta/2)|0> +
  sin(theta/2)|1>``.
* Qubit 0 is the most significant bit of a basis-state index.  For the four
  qubit chain the roles are ``(alpha1, beta1, beta2, alpha2)`` in that order.
* Measured bits map to eigenvalues as ``0 -> +1`` and ``1 -> -1``.

States are small (at most 6 qubits, i.e. 64 x 64), so everything is stored
densely and gates are applied by contracting the relevant tensor axis rather
than by building full-register operators.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError

MAX_QUBITS = 6
ROTATION_KINDS = ("rx", "ry", "rz")
GATE_KINDS = ROTATION_KINDS + ("cz",)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULI = {"rx": PAULI_X, "ry": PAULI_Y, "rz": PAULI_Z}


def rotation_matrix(kind: str, angle: float) -> np.ndarray:
    """Return ``exp(-i * angle * sigma / 2)`` for the axis named by ``kind``."""
    if kind not in _PAULI:
        raise InvalidArgumentError(f"unknown rotation kind {kind!r}")
    half = 0.5 * float(angle)
    return np.cos(half) * np.eye(2, dtype=complex) - 1j * np.sin(half) * _PAULI[kind]


@dataclass
class DensityMatrix:
    """Register state as a ``2**n x 2**n`` complex matrix."""

    n_qubits: int
    data: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise InvalidArgumentError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        self.data = np.asarray(self.data, dtype=complex)
        dim = 2**self.n_qubits
        if self.data.shape != (dim, dim):
            raise InvalidArgumentError(f"expected a {dim}x{dim} matrix, got shape {self.data.shape}")

    @classmethod
    def from_statevector(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        n = int(round(np.log2(psi.size)))
        if 2**n != psi.size:
            raise InvalidArgumentError("statevector length must be a power of two")
        psi = psi / np.linalg.norm(psi)
        return cls(n, np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, self.data.copy())

    def trace(self) -> float:
        return float(np.real(np.trace(self.data)))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.data, self.data)))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.data + self.data.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def is_valid(self, atol: float = 1e-12, psd_atol: float = 1e-10) -> bool:
        """Check Hermiticity, unit trace and positivity."""
        hermitian = np.allclose(self.data, self.data.conj().T, rtol=0.0, atol=atol)
        unit_trace = abs(np.trace(self.data) - 1.0) <= atol
        return bool(hermitian and unit_trace and self.min_eigenvalue() >= -psd_atol)

    def fidelity_to_pure(self, psi) -> float:
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return float(np.real(psi.conj() @ self.data @ psi))


@dataclass(frozen=True)
class GateOp:
    """One circuit element: a single-qubit rotation or a controlled-Z."""

    kind: str
    targets: tuple
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise InvalidArgumentError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        expected = 2 if self.kind == "cz" else 1
        if len(self.targets) != expected:
            raise InvalidArgumentError(f"{self.kind} takes exactly {expected} target(s)")
        if len(set(self.targets)) != len(self.targets):
            raise InvalidArgumentError("gate targets must be distinct")

    def apply(self, state: DensityMatrix) -> DensityMatrix:
        if self.kind == "cz":
            return apply_cz(state, *self.targets)
        return apply_unitary_1q(state, self.targets[0], self.kind, self.angle)


@dataclass
class ProbabilityTable:
    """Computational-basis distribution over an ordered list of qubit roles."""

    qubit_roles: tuple
    probs: np.ndarray

    def __post_init__(self):
        self.qubit_roles = tuple(self.qubit_roles)
        self.probs = np.asarray(self.probs, dtype=float).ravel()
        if self.probs.size != 2 ** len(self.qubit_roles):
            raise InvalidArgumentError(
                f"{len(self.qubit_roles)} roles need {2 ** len(self.qubit_roles)} probabilities, "
                f"got {self.probs.size}"
            )
        if np.any(self.probs < -1e-12) or np.any(self.probs > 1 + 1e-12):
            raise InvalidArgumentError("probabilities must lie in [0, 1]")
        if abs(self.probs.sum() - 1.0) > 1e-10:
            raise InvalidArgumentError(f"probabilities sum to {self.probs.sum()!r}, not 1")

    @property
    def n_bits(self) -> int:
        return len(self.qubit_roles)

    def as_dict(self) -> dict:
        return {format(i, f"0{self.n_bits}b"): float(p) for i, p in enumerate(self.probs)}

    def marginal(self, roles: Sequence[str]) -> "ProbabilityTable":
        """Distribution over a subset of roles, in the order given."""
        idx = []
        for r in roles:
            if r not in self.qubit_roles:
                raise InvalidArgumentError(f"unknown role {r!r}")
            idx.append(self.qubit_roles.index(r))
        return ProbabilityTable(tuple(roles), _marginalize(self.probs, self.n_bits, idx))


@dataclass
class ShotTable:
    """Sampled outcomes, one row per repetition and one column per role."""

    qubit_roles: tuple
    rows: np.ndarray
    seed: int = 0
    workers: int = field(default=1)

    @property
    def n_shots(self) -> int:
        return int(self.rows.shape[0])

    def column(self, role: str) -> np.ndarray:
        return self.rows[:, self.qubit_roles.index(role)]

    def frequencies(self) -> np.ndarray:
        """Empirical distribution over the ``2**k`` outcomes."""
        k = len(self.qubit_roles)
        weights = 1 << np.arange(k - 1, -1, -1)
        idx = self.rows.astype(np.int64) @ weights
        return np.bincount(idx, minlength=2**k) / self.n_shots


def _check_qubit(n: int, q) -> int:
    if isinstance(q, bool) or not isinstance(q, (int, np.integer)) or not 0 <= q < n:
        raise InvalidArgumentError(f"qubit index {q!r} out of range for {n} qubits")
    return int(q)


def _check_distinct(n: int, qubits) -> list:
    qubits = [_check_qubit(n, q) for q in qubits]
    if len(set(qubits)) != len(qubits):
        raise InvalidArgumentError(f"duplicate qubit indices in {qubits}")
    return qubits


def _marginalize(probs: np.ndarray, n: int, keep: Sequence[int]) -> np.ndarray:
    t = np.asarray(probs, dtype=float).reshape([2] * n)
    drop = tuple(ax for ax in range(n) if ax not in keep)
    t = t.sum(axis=drop) if drop else t
    # remaining axes are in ascending qubit order; permute to requested order
    remaining = sorted(keep)
    t = np.transpose(t, [remaining.index(q) for q in keep])
    return t.ravel()


def init_register(n: int, thermal_pops=None) -> DensityMatrix:
    """Product state with qubit ``q`` in ``(1 - p_q)|0><0| + p_q|1><1|``."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise InvalidArgumentError(f"n must be an integer in [1, {MAX_QUBITS}], got {n!r}")
    pops = np.zeros(n) if thermal_pops is None else np.asarray(thermal_pops, dtype=float)
    if pops.shape != (n,):
        raise InvalidArgumentError(f"need {n} thermal populations, got {pops.size}")
    if np.any(~np.isfinite(pops)) or np.any(pops < 0) or np.any(pops > 0.5):
        raise InvalidArgumentError("thermal populations must lie in [0, 0.5]")
    diag = np.ones(1)
    for p in pops:
        diag = np.kron(diag, [1.0 - p, p])
    return DensityMatrix(int(n), np.diag(diag).astype(complex))


def apply_matrix_1q(state: DensityMatrix, q: int, left: np.ndarray, right: np.ndarray | None = None) -> np.ndarray:
    """Return ``L rho R^dagger`` with ``L`` and ``R`` acting on qubit ``q``.

    Returns a bare array; callers wrap or accumulate it.  ``right`` defaults to
    ``left``.
    """
    n = state.n_qubits
    right = left if right is None else right
    t = state.data.reshape([2] * (2 * n))
    t = np.moveaxis(np.tensordot(left, t, axes=([1], [q])), 0, q)
    t = np.moveaxis(np.tensordot(right.conj(), t, axes=([1], [n + q])), 0, n + q)
    return t.reshape(state.dim, state.dim)


def apply_unitary_1q(state: DensityMatrix, q: int, kind: str, angle: float) -> DensityMatrix:
    """Conjugate the state by ``exp(-i * angle * sigma_kind / 2)`` on qubit ``q``."""
    q = _check_qubit(state.n_qubits, q)
    u = rotation_matrix(kind, angle)
    return DensityMatrix(state.n_qubits, apply_matrix_1q(state, q, u))


def apply_kraus_1q(state: DensityMatrix, q: int, kraus_ops: Sequence[np.ndarray]) -> DensityMatrix:
    """``sum_k K rho K^dag`` on qubit ``q``; the operators must be trace preserving."""
    q = _check_qubit(state.n_qubits, q)
    ops = [np.asarray(k, dtype=complex) for k in kraus_ops]
    if not ops or any(k.shape != (2, 2) for k in ops):
        raise InvalidArgumentError("need at least one 2x2 Kraus operator")
    if not np.allclose(sum(k.conj().T @ k for k in ops), np.eye(2), atol=1e-12):
        raise InvalidArgumentError("Kraus operators are not trace preserving")
    out = np.zeros_like(state.data)
    for k in ops:
        out += apply_matrix_1q(state, q, k)
    return DensityMatrix(state.n_qubits, out)


def _cz_phases(n: int, q1: int, q2: int) -> np.ndarray:
    idx = np.arange(2**n)
    both = ((idx >> (n - 1 - q1)) & 1) & ((idx >> (n - 1 - q2)) & 1)
    return 1.0 - 2.0 * both


def apply_cz(state: DensityMatrix, q1: int, q2: int) -> DensityMatrix:
    """Controlled-Z between ``q1`` and ``q2`` (symmetric, self-inverse)."""
    q1, q2 = _check_distinct(state.n_qubits, (q1, q2))
    d = _cz_phases(state.n_qubits, q1, q2)
    return DensityMatrix(state.n_qubits, state.data * np.outer(d, d))


def outcome_distribution(state: DensityMatrix, qubits: Sequence[int], roles: Sequence[str] | None = None) -> ProbabilityTable:
    """Marginal computational-basis distribution over ``qubits`` (in that order)."""
    qubits = _check_distinct(state.n_qubits, qubits)
    if not qubits:
        raise InvalidArgumentError("need at least one qubit")
    diag = np.clip(np.real(np.diag(state.data)), 0.0, None)
    probs = _marginalize(diag, state.n_qubits, qubits)
    probs = probs / probs.sum()
    if roles is None:
        roles = tuple(f"q{q}" for q in qubits)
    elif len(roles) != len(qubits):
        raise InvalidArgumentError("one role label per qubit")
    return ProbabilityTable(tuple(roles), probs)


def expectation_z(state: DensityMatrix, q: int) -> float:
    """``<Z> = 1 - 2 P(1)`` on qubit ``q``."""
    p = outcome_distribution(state, [q]).probs
    return float(p[0] - p[1])


def reduced_state(state: DensityMatrix, qubits: Sequence[int]) -> DensityMatrix:
    """Partial trace keeping ``qubits``, ordered as given."""
    qubits = _check_distinct(state.n_qubits, qubits)
    n, k = state.n_qubits, len(qubits)
    t = state.data.reshape([2] * (2 * n))
    rest = [q for q in range(n) if q not in qubits]
    # bring kept row axes, kept column axes, then traced pairs
    perm = qubits + [n + q for q in qubits] + rest + [n + q for q in rest]
    t = np.transpose(t, perm).reshape(2**k, 2**k, 2 ** len(rest), 2 ** len(rest))
    return DensityMatrix(k, np.einsum("ijkk->ij", t))


def measure_branches(state: DensityMatrix, q: int) -> list:
    """Projective Z measurement on ``q``: ``[(p0, rho|0), (p1, rho|1)]``.

    Post-measurement states are renormalized; a zero-probability branch keeps
    the projected (all-zero) matrix replaced by the other branch's state so it
    stays a valid density matrix.
    """
    q = _check_qubit(state.n_qubits, q)
    out = []
    for bit in (0, 1):
        proj = np.zeros((2, 2), dtype=complex)
        proj[bit, bit] = 1.0
        branch = apply_matrix_1q(state, q, proj)
        p = float(np.real(np.trace(branch)))
        out.append((p, branch))
    result = []
    for bit, (p, branch) in enumerate(out):
        if p > 1e-15:
            result.append((p, DensityMatrix(state.n_qubits, branch / p)))
        else:
            other = out[1 - bit][1]
            result.append((0.0, DensityMatrix(state.n_qubits, other / np.trace(other))))
    return result


def concurrence(state: DensityMatrix) -> float:
    """Wootters concurrence of a two-qubit state."""
    if state.n_qubits != 2:
        raise InvalidArgumentError("concurrence is defined here for two-qubit states only")
    yy = np.kron(PAULI_Y, PAULI_Y)
    rho = state.data
    rho_tilde = yy @ rho.conj() @ yy
    ev = np.linalg.eigvals(rho @ rho_tilde)
    lam = np.sort(np.sqrt(np.clip(np.real(ev), 0.0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def make_rng(seed: int, worker: int = 0) -> np.random.Generator:
    """Counter-based Philox stream for ``seed XOR worker``."""
    seed = _check_seed(seed)
    return np.random.Generator(np.random.Philox(seed ^ int(worker)))


def _check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < 2**64:
        raise InvalidArgumentError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def _draw(probs: np.ndarray, n: int, seed: int, worker: int) -> np.ndarray:
    rng = make_rng(seed, worker)
    return rng.choice(probs.size, size=n, p=probs)


def sample_shots(dist: ProbabilityTable, n_shots: int, seed: int, workers: int = 1) -> ShotTable:
    """Draw ``n_shots`` independent rows from ``dist``.

    Shots are split into ``workers`` contiguous shards; shard ``k`` draws from
    the stream seeded with ``seed ^ k``.  The merged table therefore depends on
    ``(dist, n_shots, seed, workers)`` only.
    """
    if isinstance(n_shots, bool) or not isinstance(n_shots, (int, np.integer)) or n_shots < 1:
        raise InvalidArgumentError(f"n_shots must be a positive integer, got {n_shots!r}")
    seed = _check_seed(seed)
    if workers < 1:
        raise InvalidArgumentError("workers must be >= 1")
    probs = np.clip(dist.probs, 0.0, None)
    probs = probs / probs.sum()
    sizes = [len(a) for a in np.array_split(np.empty(int(n_shots)), workers)]
    if workers == 1:
        idx = _draw(probs, sizes[0], seed, 0)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda k: _draw(probs, sizes[k], seed, k), range(workers)))
        idx = np.concatenate(parts)
    k = dist.n_bits
    shifts = np.arange(k - 1, -1, -1)
    rows = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
    return ShotTable(dist.qubit_roles, rows, seed, workers)
