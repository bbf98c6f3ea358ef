"""Dense complex linear algebra shared by every other module.

Operators and states are plain numpy arrays (complex128). Distances,
phase-equivalence testing and Haar-measure sampling live here, together with
the package-wide tolerance constants and the deterministic seed-splitting
scheme used by all Monte-Carlo code.
"""

from __future__ import annotations

import numpy as np

# Absolute tolerance for identities that are exact in infinite precision.
ATOL_EXACT = 1e-10
# Classification threshold for eigenvalue properties (unimodularity etc.),
# kept above eigensolver residual noise.
ATOL_CLASSIFY = 1e-8

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)


def kron(*ops: np.ndarray) -> np.ndarray:
    """Tensor product of one or more operators, leftmost factor most significant."""
    if not ops:
        raise ValueError("kron needs at least one operator")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def kron_power(op: np.ndarray, k: int) -> np.ndarray:
    """k-fold tensor power of an operator (k >= 1)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return kron(*([op] * k))


def dagger(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def _check_hermitian(a: np.ndarray, tol: float, name: str) -> None:
    dev = np.abs(a - a.conj().T).max()
    if dev > tol:
        raise ValueError(f"{name} is not Hermitian (max deviation {dev:.3e})")


def trace_distance(a: np.ndarray, b: np.ndarray, *, hermitian_tol: float = ATOL_CLASSIFY) -> float:
    """Trace distance (1/2)||A - B||_1 between two Hermitian matrices.

    Both inputs must be Hermitian within `hermitian_tol`; for density-matrix
    inputs the result lies in [0, 1].
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    _check_hermitian(a, hermitian_tol, "first argument")
    _check_hermitian(b, hermitian_tol, "second argument")
    diff = a - b
    eigs = np.linalg.eigvalsh((diff + diff.conj().T) / 2.0)
    return 0.5 * float(np.abs(eigs).sum())


def proportional_up_to_phase(
    a: np.ndarray, b: np.ndarray, tol: float = ATOL_EXACT
) -> tuple[bool, float]:
    """Test whether A = e^{i phi} B entrywise within `tol`; return (flag, phi).

    The phase is fitted from the largest-magnitude entry of B (ties broken by
    the lowest row-major index) to avoid dividing by near-zeros. When the test
    fails the fitted phase is still returned.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    idx = int(np.argmax(np.abs(b)))
    ref = b.flat[idx]
    if ref == 0.0:
        if np.abs(a).max() <= tol:
            return True, 0.0
        raise ValueError("reference matrix is identically zero")
    ratio = a.flat[idx] / ref
    if abs(ratio) == 0.0:
        return False, 0.0
    phase_factor = ratio / abs(ratio)
    ok = bool(np.abs(a - phase_factor * b).max() < tol)
    return ok, float(np.angle(phase_factor))


def rng_stream(root_seed: int, sample_index: int) -> np.random.Generator:
    """Deterministic per-sample random stream.

    One root seed is split counter-style: sample `i` always draws from
    SeedSequence(root_seed, spawn_key=(i,)), so serial and parallel runs see
    identical sample sets.
    """
    return np.random.default_rng(np.random.SeedSequence(root_seed, spawn_key=(sample_index,)))


def haar_unitary(d: int, seed: int) -> np.ndarray:
    """Haar-distributed d x d unitary, deterministic in `seed`.

    Ginibre matrix, QR orthonormalization, then the R-diagonal phase
    correction that removes the QR gauge bias.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    q = q * (diag / np.abs(diag))
    return q


def haar_state(d: int, seed: int) -> np.ndarray:
    """Haar-random pure state: haar_unitary(d, seed) applied to the first basis vector."""
    return haar_unitary(d, seed)[:, 0].copy()


def haar_unitaries(d: int, root_seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Stack of `count` Haar unitaries, sample i drawn from rng_stream(root_seed, offset+i).

    The Ginibre draws honor the per-sample seed split; QR and the phase fix
    run stacked. The offset lets chunked consumers keep the global sample
    numbering.
    """
    z = np.empty((count, d, d), dtype=complex)
    for i in range(count):
        rng = rng_stream(root_seed, offset + i)
        z[i] = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.einsum("mii->mi", r)
    return q * (diag / np.abs(diag))[:, None, :]


def haar_states(d: int, root_seed: int, count: int) -> np.ndarray:
    """Stack of `count` Haar-random pure states (rows), per-sample seed split.

    Drawn by normalizing a complex Gaussian vector from each sample's stream;
    the distribution is identical to haar_state's column construction and
    skips the QR when only a state is needed.
    """
    out = np.empty((count, d), dtype=complex)
    for i in range(count):
        rng = rng_stream(root_seed, i)
        v = rng.standard_normal(2 * d)
        out[i] = v[:d] + 1j * v[d:]
    out /= np.linalg.norm(out, axis=1)[:, None]
    return out
