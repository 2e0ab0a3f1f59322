"""Pauli transfer matrix (PTM) kernel for one- and two-qubit channels.

Conventions used throughout the package:

* Basis elements are normalized Pauli products ``{I, X, Y, Z}/sqrt(2)`` tensored
  per qubit, ordered lexicographically (II, IX, IY, IZ, XI, ...). Qubit 0 (the
  CNOT control) is the leftmost tensor factor.
* A state is stored as its real "Stokes" vector ``rho_k = Tr(P_k rho)`` and a
  channel as the real matrix ``R_ij = Tr(P_i Lambda(P_j))``. Channels compose by
  matrix multiplication and act on states by matrix-vector products.
* Choi matrices are normalized to unit trace, with the input copy as the first
  tensor factor: ``J = (1/d) sum_ab |a><b| (x) Lambda(|a><b|)``.

PTMs are plain ``numpy`` arrays; the number of qubits is inferred from the shape.
"""
from __future__ import annotations

import functools
import itertools
import json
from typing import Sequence

import numpy as np

TP_TOL = 1e-10
CP_TOL = 1e-10
UNITARY_TOL = 1e-10

PAULI_LABELS = ("I", "X", "Y", "Z")

SIGMA = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def _num_qubits_from_dim(dim: int) -> int:
    n = {2: 1, 4: 2}.get(dim)
    if n is None:
        raise ValueError(f"only 1 or 2 qubits are supported, got Hilbert dimension {dim}")
    return n


def num_qubits_of(ptm: np.ndarray) -> int:
    """Number of qubits of a PTM or state vector (4 -> 1, 16 -> 2)."""
    size = np.shape(ptm)[0]
    n = {4: 1, 16: 2}.get(size)
    if n is None:
        raise ValueError(f"PTM/vector size {size} is not 4 or 16")
    return n


class PauliBasis:
    """Orthonormal Pauli operator basis for ``num_qubits`` qubits.

    ``elements`` has shape ``(d**2, d, d)``; ``labels`` holds strings such as
    ``"XZ"`` in the same order.
    """

    def __init__(self, num_qubits: int):
        if num_qubits not in (1, 2):
            raise ValueError("num_qubits must be 1 or 2")
        self.num_qubits = num_qubits
        self.dim = 2**num_qubits
        mats, labels = [], []
        for idx in itertools.product(range(4), repeat=num_qubits):
            m = np.ones((1, 1), dtype=complex)
            for k in idx:
                m = np.kron(m, SIGMA[k] / np.sqrt(2))
            mats.append(m)
            labels.append("".join(PAULI_LABELS[k] for k in idx))
        self.elements = np.array(mats)
        self.elements.setflags(write=False)
        self.labels = tuple(labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        return f"PauliBasis(num_qubits={self.num_qubits})"

    def index(self, label: str) -> int:
        return self.labels.index(label)


@functools.lru_cache(maxsize=None)
def pauli_basis(num_qubits: int) -> PauliBasis:
    return PauliBasis(num_qubits)


def _basis_for(dim: int, basis: PauliBasis | None) -> PauliBasis:
    n = _num_qubits_from_dim(dim)
    if basis is None:
        return pauli_basis(n)
    if basis.dim != dim:
        raise ValueError(f"basis is for dimension {basis.dim}, operator has dimension {dim}")
    return basis


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------


def unitarity_error(U: np.ndarray) -> float:
    """Frobenius norm of ``U^dag U - I``."""
    U = np.asarray(U, dtype=complex)
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0])))


def ptm_from_unitary(U: np.ndarray, basis: PauliBasis | None = None) -> np.ndarray:
    """PTM of the unitary channel ``rho -> U rho U^dag``.

    Raises ``ValueError`` if ``U`` is not unitary to within 1e-10.
    """
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {U.shape}")
    err = unitarity_error(U)
    if err > UNITARY_TOL:
        raise ValueError(f"matrix is not unitary: ||U^dag U - I||_F = {err:.3e}")
    return _ptm_unitary_unchecked(U, _basis_for(U.shape[0], basis))


def _ptm_unitary_unchecked(U: np.ndarray, basis: PauliBasis) -> np.ndarray:
    P = basis.elements
    out = U @ P @ U.conj().T
    # Tr(P_i A_j) for Hermitian P_i is sum_ab conj(P_i)_ab (A_j)_ab
    return np.einsum("iab,jab->ij", P.conj(), out).real


def ptm_1q(U: np.ndarray) -> np.ndarray:
    """PTM of a 2x2 unitary via its rotation quaternion (no unitarity check).

    ``U / sqrt(det U) = w I - i (x X + y Y + z Z)`` rotates Bloch vectors by
    the rotation matrix of the unit quaternion ``(w, x, y, z)``.
    """
    U = np.asarray(U, dtype=complex)
    V = U / np.sqrt(U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0])
    w, z = V[0, 0].real, -V[0, 0].imag
    x, y = -V[0, 1].imag, -V[0, 1].real
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [0.0, 2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [0.0, 2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def ptm_from_kraus(kraus: Sequence[np.ndarray], basis: PauliBasis | None = None) -> np.ndarray:
    """PTM of ``rho -> sum_k K_k rho K_k^dag``."""
    kraus = [np.asarray(K, dtype=complex) for K in kraus]
    if not kraus:
        raise ValueError("empty Kraus list")
    dim = kraus[0].shape[0]
    if any(K.shape != (dim, dim) for K in kraus):
        raise ValueError("Kraus operators must share one square shape")
    basis = _basis_for(dim, basis)
    P = basis.elements
    total = np.zeros((len(P), len(P)), dtype=complex)
    for K in kraus:
        out = K @ P @ K.conj().T
        total += np.einsum("iab,jab->ij", P.conj(), out)
    return total.real


def kraus_completeness_error(kraus: Sequence[np.ndarray]) -> float:
    """Largest eigenvalue of ``sum K^dag K - I`` (positive means trace increasing)."""
    S = sum(np.asarray(K).conj().T @ np.asarray(K) for K in kraus)
    return float(np.max(np.linalg.eigvalsh(S - np.eye(S.shape[0]))))


def state_vector(rho: np.ndarray, basis: PauliBasis | None = None) -> np.ndarray:
    """Pauli vector of a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    basis = _basis_for(rho.shape[0], basis)
    return np.einsum("kab,ba->k", basis.elements, rho).real


def pure_state_vector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return state_vector(np.outer(psi, psi.conj()))


def density_matrix(vec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`state_vector`."""
    vec = np.asarray(vec, dtype=float)
    basis = pauli_basis(num_qubits_of(vec))
    return np.einsum("k,kab->ab", vec, basis.elements)


def computational_state(bits: str) -> np.ndarray:
    """Pauli vector of ``|bits><bits|``, e.g. ``computational_state("10")``."""
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int(bits, 2)] = 1.0
    return pure_state_vector(psi)


def effect_vector(E: np.ndarray) -> np.ndarray:
    """Dual vector of a POVM element; ``effect @ rho_vec == Tr(E rho)``."""
    return state_vector(E)


def choi_from_ptm(R: np.ndarray) -> np.ndarray:
    """Unit-trace Choi matrix; positive semidefinite iff the channel is CP."""
    R = np.asarray(R, dtype=float)
    P = pauli_basis(num_qubits_of(R)).elements
    d = P.shape[1]
    # J = (1/d) sum_ij R_ij P_j^T (x) P_i
    PT = np.transpose(P, (0, 2, 1))
    J = np.einsum("ij,jab,icd->acbd", R, PT, P).reshape(d * d, d * d) / d
    return J


def ptm_from_choi(J: np.ndarray) -> np.ndarray:
    """Inverse of :func:`choi_from_ptm`."""
    J = np.asarray(J, dtype=complex)
    d = int(round(np.sqrt(J.shape[0])))
    P = pauli_basis(_num_qubits_from_dim(d)).elements
    PT = np.transpose(P, (0, 2, 1))
    J4 = J.reshape(d, d, d, d)
    # R_ij = d Tr((P_j^T (x) P_i)^dag J)
    R = d * np.einsum("jab,icd,acbd->ij", PT.conj(), P.conj(), J4)
    return R.real


def choi_eigenvalues(R: np.ndarray) -> np.ndarray:
    J = choi_from_ptm(R)
    return np.linalg.eigvalsh((J + J.conj().T) / 2)


def is_trace_preserving(R: np.ndarray, tol: float = TP_TOL) -> bool:
    R = np.asarray(R)
    target = np.zeros(R.shape[1])
    target[0] = 1.0
    return bool(np.max(np.abs(R[0] - target)) <= tol)


def is_completely_positive(R: np.ndarray, tol: float = CP_TOL) -> bool:
    return bool(choi_eigenvalues(R).min() >= -tol)


def is_cptp(R: np.ndarray, tol: float = TP_TOL) -> bool:
    return is_trace_preserving(R, tol) and is_completely_positive(R, tol)


# ---------------------------------------------------------------------------
# algebra and metrics
# ---------------------------------------------------------------------------


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if np.shape(a) != np.shape(b):
        raise ValueError(f"dimension mismatch: {np.shape(a)} vs {np.shape(b)}")


def compose(second: np.ndarray, first: np.ndarray) -> np.ndarray:
    """PTM of ``second o first`` (``first`` acts first)."""
    _check_same_shape(second, first)
    return np.asarray(second) @ np.asarray(first)


def apply(R: np.ndarray, rho: np.ndarray) -> np.ndarray:
    R = np.asarray(R)
    rho = np.asarray(rho)
    if R.shape[1] != rho.shape[0]:
        raise ValueError(f"dimension mismatch: PTM {R.shape} vs state {rho.shape}")
    return R @ rho


def probability(E: np.ndarray, G: np.ndarray, rho: np.ndarray, clamp: bool = True) -> float:
    """``<<E|G|rho>>``; clamped to [0, 1] unless ``clamp=False``."""
    E = np.asarray(E)
    if E.shape[0] != np.shape(G)[0]:
        raise ValueError("dimension mismatch between effect and PTM")
    p = float(E @ apply(G, rho))
    return min(max(p, 0.0), 1.0) if clamp else p


def frobenius_distance(A: np.ndarray, B: np.ndarray) -> float:
    _check_same_shape(A, B)
    return float(np.linalg.norm(np.asarray(A) - np.asarray(B)))


def average_gate_infidelity(R: np.ndarray, target: np.ndarray) -> float:
    """``1 - (Tr(target^T R) + d) / (d^2 + d)`` for a unitary ``target``."""
    _check_same_shape(R, target)
    d = 2 ** num_qubits_of(R)
    return float(1.0 - (np.trace(np.asarray(target).T @ np.asarray(R)) + d) / (d * d + d))


def depolarizing_ptm(q: float, num_qubits: int = 1) -> np.ndarray:
    """``rho -> (1 - q) rho + q I/d``."""
    n = 4**num_qubits
    R = np.eye(n) * (1.0 - q)
    R[0, 0] = 1.0
    return R


def local_depolarizing_ptm(q: float, qubit: int) -> np.ndarray:
    """Single-qubit depolarizing channel acting on one qubit of a pair."""
    one = depolarizing_ptm(q, 1)
    return np.kron(one, np.eye(4)) if qubit == 0 else np.kron(np.eye(4), one)


def transpose_map_ptm(num_qubits: int = 1) -> np.ndarray:
    """PTM of ``rho -> rho^T`` (positive but not completely positive)."""
    basis = pauli_basis(num_qubits)
    signs = [(-1.0) ** label.count("Y") for label in basis.labels]
    return np.diag(signs)


def identity_ptm(num_qubits: int) -> np.ndarray:
    return np.eye(4**num_qubits)


CNOT_PTM = _ptm_unitary_unchecked(CNOT, pauli_basis(2))
CNOT_PTM.setflags(write=False)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def ptm_to_dict(R: np.ndarray) -> dict:
    R = np.asarray(R, dtype=float)
    return {"num_qubits": num_qubits_of(R), "entries": R.tolist()}


def ptm_from_dict(data: dict) -> np.ndarray:
    R = np.array(data["entries"], dtype=float)
    n = int(data["num_qubits"])
    if R.shape != (4**n, 4**n):
        raise ValueError(f"entries shape {R.shape} does not match num_qubits={n}")
    return R


def ptm_to_json(R: np.ndarray) -> str:
    return json.dumps(ptm_to_dict(R))


def ptm_from_json(text: str) -> np.ndarray:
    return ptm_from_dict(json.loads(text))
