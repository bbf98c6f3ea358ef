"""k-copy transfer map of the outcome-averaged dual circuit.

Averaging the two dual gates over one measured bit defines the channel

    T[X] = (1/2) (U(0)^{(x)k} X U(0)†^{(x)k} + U(1)^{(x)k} X U(1)†^{(x)k}),

whose n_b-th power is the k-fold twirl over the outcome-indexed circuit
ensemble. Because U(1) = U(0) sigma^z_t, the same map factors as a dephasing
in the site-t computational basis followed by conjugation with U(0)^{(x)k};
both forms are implemented and tested against each other. Permutation
operators on the k copies span the fixed space away from exceptional g, and
the distance of the subleading eigenvalue from the unit circle is the gap
that controls convergence to the Haar twirl.

Superoperator matrices use row-major vec ordering throughout: the matrix of
X -> A X B† is kron(A, conj(B)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

from .dual_chain import dual_unitary
from .kicked_ising import is_exceptional
from .linalg import dagger, kron_power

# |lambda| > 1 - UNIMODULAR_TOL counts as unimodular; kept above the
# eigensolver residual tolerance so classification noise cannot flip it.
UNIMODULAR_TOL = 1e-8
EIG_RESIDUAL_TOL = 1e-8
# Threshold for trusting the sign-block structure of the superoperator.
_COLUMN_ZERO_TOL = 1e-12
SUPEROP_DIM_LIMIT = 2**14


@dataclass(frozen=True)
class PermutationOperator:
    """Tensor-factor permutation P(pi) on k copies of a d-dimensional space."""

    k: int
    pi: tuple
    d: int
    matrix: np.ndarray


@dataclass
class TransferSpectrum:
    """Sorted eigenvalues of T^(k) with the design-convergence gap.

    eigenvalues are sorted by magnitude descending, then argument ascending,
    then real part, so lambda_{k!+1} is deterministic even under degeneracy.
    gap = 1 - |lambda_{k!+1}|; gap_below_unimodular = 1 - max |lambda| over
    the strictly sub-unimodular part (the two coincide away from g in Z*pi/4).
    """

    t: int
    k: int
    g: float
    eigenvalues: np.ndarray
    gap: float
    gap_below_unimodular: float
    unimodular_count: int
    residual_max: float


@dataclass
class FixedSpaceReport:
    """Outcome of the permutation-fixed-space verification at one (t, k, g)."""

    t: int
    k: int
    g: float
    residual_max: float
    span_dim: int
    unimodular_count: int
    # None when g is exceptional: the unimodular eigenspace is then larger
    # than the permutation span by design and the comparison is meaningless.
    projector_distance: float | None


def _check_permutation(pi, k: int) -> tuple:
    pi = tuple(int(p) for p in pi)
    if sorted(pi) != list(range(k)):
        raise ValueError(f"{pi!r} is not a permutation of range({k})")
    return pi


def compose_permutations(pi, pi_prime) -> tuple:
    """Composition matching operator products: P(pi) P(pi') = P(compose(pi, pi'))."""
    k = len(pi)
    pi = _check_permutation(pi, k)
    pi_prime = _check_permutation(pi_prime, k)
    return tuple(pi_prime[p] for p in pi)


def invert_permutation(pi) -> tuple:
    pi = _check_permutation(pi, len(pi))
    out = [0] * len(pi)
    for slot, src in enumerate(pi):
        out[src] = slot
    return tuple(out)


def cycle_count(pi) -> int:
    """Number of cycles of pi, fixed points included."""
    pi = _check_permutation(pi, len(pi))
    seen = [False] * len(pi)
    cycles = 0
    for start in range(len(pi)):
        if seen[start]:
            continue
        cycles += 1
        j = start
        while not seen[j]:
            seen[j] = True
            j = pi[j]
    return cycles


def permutation_operator(pi, d: int, k: int) -> PermutationOperator:
    """P(pi) acting as |i_1 ... i_k> -> |i_{pi(1)} ... i_{pi(k)}> (0-indexed).

    Copy 1 is the most significant digit of the basis index, consistent with
    the kron ordering used everywhere else.
    """
    pi = _check_permutation(pi, k)
    dim = d**k
    idx = np.arange(dim)
    powers = d ** np.arange(k - 1, -1, -1)
    digits = (idx[:, None] // powers[None, :]) % d
    rows = digits[:, pi] @ powers
    mat = np.zeros((dim, dim), dtype=complex)
    mat[rows, idx] = 1.0
    return PermutationOperator(k=k, pi=pi, d=d, matrix=mat)


def _all_permutations(k: int) -> list:
    return [tuple(p) for p in permutations(range(k))]


def gram_matrix(d: int, k: int) -> np.ndarray:
    """Overlaps Tr(P(pi)† P(pi')) = d^{cycles(pi^{-1} pi')} over S_k, k! x k!.

    Singular exactly when d < k (the permutation operators become linearly
    dependent); returned as-is in that case, callers decide.
    """
    if k > 4:
        raise ValueError("permutation machinery is sized for k <= 4")
    perms = _all_permutations(k)
    gram = np.empty((len(perms), len(perms)))
    for i, pi in enumerate(perms):
        inv = invert_permutation(pi)
        for j, pj in enumerate(perms):
            gram[i, j] = float(d) ** cycle_count(compose_permutations(inv, pj))
    return gram


def haar_twirl(x: np.ndarray, d: int, k: int) -> np.ndarray:
    """Project x onto span{P(pi)} in the Hilbert-Schmidt inner product.

    Equals the k-fold twirl of x over Haar-random unitaries. Requires d >= k
    so the Gram matrix is invertible.
    """
    perms = _all_permutations(k)
    mats = [permutation_operator(p, d, k).matrix for p in perms]
    if x.shape != mats[0].shape:
        raise ValueError(f"operand shape {x.shape} does not match d^k = {mats[0].shape[0]}")
    overlaps = np.array([np.vdot(p, x) for p in mats])
    gram = gram_matrix(d, k)
    try:
        coeff = np.linalg.solve(gram, overlaps)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular Gram matrix at d={d}, k={k} (need d >= k)") from exc
    out = np.zeros_like(mats[0])
    for c, p in zip(coeff, mats):
        out += c * p
    return out


@lru_cache(maxsize=64)
def _gate_copies(t: int, k: int, g: float, z_bit: int) -> np.ndarray:
    a = kron_power(dual_unitary(t, g, z_bit), k)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=32)
def z_sign_vector(t: int, k: int) -> np.ndarray:
    """Diagonal of sigma^z_t^{(x)k} over the 2^{tk} basis, entries +-1."""
    idx = np.arange(1 << (t * k))
    parity = np.zeros(len(idx), dtype=np.int64)
    # Site t is the least significant bit of each t-bit copy block.
    for copy in range(k):
        parity ^= (idx >> (copy * t)) & 1
    signs = 1.0 - 2.0 * parity
    signs.setflags(write=False)
    return signs


def transfer_apply(x: np.ndarray, t: int, k: int, g: float) -> np.ndarray:
    """One application of T^(k), as the explicit two-term outcome average."""
    a0 = _gate_copies(t, k, g, 0)
    a1 = _gate_copies(t, k, g, 1)
    if x.shape != a0.shape:
        raise ValueError(f"operand shape {x.shape} does not match 2^(t*k) = {a0.shape[0]}")
    return 0.5 * (a0 @ x @ dagger(a0) + a1 @ x @ dagger(a1))


def transfer_apply_composed(x: np.ndarray, t: int, k: int, g: float) -> np.ndarray:
    """T^(k) as site-t dephasing followed by U(0)^{(x)k} conjugation.

    Independent route kept alongside transfer_apply on purpose; the two are
    compared in tests, never collapsed.
    """
    a0 = _gate_copies(t, k, g, 0)
    if x.shape != a0.shape:
        raise ValueError(f"operand shape {x.shape} does not match 2^(t*k) = {a0.shape[0]}")
    s = z_sign_vector(t, k)
    dephased = 0.5 * (x + (s[:, None] * s[None, :]) * x)
    return a0 @ dephased @ dagger(a0)


def transfer_matrix(t: int, k: int, g: float) -> np.ndarray:
    """Dense superoperator of T^(k) in row-major vec ordering, dim 4^{tk}."""
    dim = 1 << (t * k)
    if dim * dim > SUPEROP_DIM_LIMIT:
        raise ValueError(
            f"superoperator dimension 4^(t*k) = {dim * dim} exceeds {SUPEROP_DIM_LIMIT}"
        )
    a0 = _gate_copies(t, k, g, 0)
    a1 = _gate_copies(t, k, g, 1)
    return 0.5 * (np.kron(a0, a0.conj()) + np.kron(a1, a1.conj()))


def _sort_eigenvalues(vals: np.ndarray) -> np.ndarray:
    order = np.lexsort((vals.real, np.angle(vals), -np.abs(vals)))
    return order


def _eig_with_structure(tmat: np.ndarray, k: int):
    """Eigendecomposition exploiting the dephasing sign blocks when present.

    The site-t dephasing zeroes every superoperator column whose vec index
    pairs opposite sigma^z_t^{(x)k} signs, so the characteristic polynomial
    factors as lambda^{dim_minus} times that of the like-sign block. When the
    column structure is confirmed numerically, eig runs on the half-size
    block and the spectrum is padded with the exact zeros; eigenvectors stay
    in block coordinates. Falls back to a dense eig otherwise.

    Returns (vals, vecs, plus_mask, residual_max): vals over the full space,
    vecs as columns matching vals[:vecs.shape[1]], plus_mask is None for the
    dense route.
    """
    dim2 = tmat.shape[0]
    dim = math.isqrt(dim2)
    if dim * dim != dim2:
        raise ValueError("superoperator is not square over a square dimension")
    tk = dim.bit_length() - 1
    if (1 << tk) != dim or tk % k != 0:
        raise ValueError(f"dimension {dim2} is not 4^(t*k) for k={k}")
    t = tk // k

    signs = z_sign_vector(t, k)
    pair_signs = (signs[:, None] * signs[None, :]).ravel()
    plus = pair_signs > 0
    minus = ~plus
    col_leak = np.abs(tmat[:, minus]).max() if minus.any() else 0.0

    if col_leak < _COLUMN_ZERO_TOL:
        block = tmat[np.ix_(plus, plus)]
        vals_b, vecs_b = np.linalg.eig(block)
        resid = block @ vecs_b - vecs_b * vals_b[None, :]
        residual_max = float(np.linalg.norm(resid, axis=0).max()) + float(col_leak)
        vals = np.concatenate([vals_b, np.zeros(dim2 - block.shape[0], dtype=complex)])
        return vals, vecs_b, plus, residual_max

    vals, vecs = np.linalg.eig(tmat)
    resid = tmat @ vecs - vecs * vals[None, :]
    residual_max = float(np.linalg.norm(resid, axis=0).max())
    return vals, vecs, None, residual_max


def spectrum(tmat: np.ndarray, k: int, *, g: float = math.nan) -> TransferSpectrum:
    """Full spectrum of a transfer superoperator with gap and unimodular count."""
    vals, _, plus, residual_max = _eig_with_structure(tmat, k)
    if residual_max > EIG_RESIDUAL_TOL:
        raise RuntimeError(f"eigensolver residual {residual_max:.3e} above {EIG_RESIDUAL_TOL}")
    mags = np.abs(vals)
    if mags.max() > 1.0 + UNIMODULAR_TOL:
        raise ValueError(f"spectral radius {mags.max():.12f} exceeds 1; not a transfer map?")

    dim = math.isqrt(tmat.shape[0])
    t = (dim.bit_length() - 1) // k
    vals = vals[_sort_eigenvalues(vals)]
    mags = np.abs(vals)
    nfix = math.factorial(k)
    gap = 1.0 - mags[nfix] if len(vals) > nfix else math.nan
    below = mags[mags <= 1.0 - UNIMODULAR_TOL]
    gap_below = 1.0 - below.max() if below.size else 1.0
    return TransferSpectrum(
        t=t,
        k=k,
        g=g,
        eigenvalues=vals,
        gap=float(gap),
        gap_below_unimodular=float(gap_below),
        unimodular_count=int((mags > 1.0 - UNIMODULAR_TOL).sum()),
        residual_max=residual_max,
    )


def _orthonormal_columns(cols: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(cols)
    keep = np.abs(np.diag(r)) > 1e-10 * np.abs(np.diag(r)).max()
    return q[:, keep]


def verify_fixed_space(t: int, k: int, g: float) -> FixedSpaceReport:
    """Check that every P(pi) is a fixed point of T^(k), and span equality.

    Away from exceptional g the unimodular eigenspace of the transfer matrix
    must coincide with span{vec P(pi)}; the report carries the distance of
    the two orthogonal projectors in the spectral norm. At exceptional g the
    eigenspace is genuinely larger and only the fixed-point residual is
    meaningful, so projector_distance is None there.
    """
    d = 1 << t
    if d < k:
        raise ValueError(f"need 2^t >= k for independent permutation operators, got {d} < {k}")
    perms = _all_permutations(k)
    pmats = [permutation_operator(p, d, k).matrix for p in perms]
    residual_max = max(
        float(np.abs(transfer_apply(p, t, k, g) - p).max()) for p in pmats
    )

    tmat = transfer_matrix(t, k, g)
    vals, vecs, plus, eig_residual = _eig_with_structure(tmat, k)
    mags = np.abs(vals[: vecs.shape[1]])
    uni_cols = np.flatnonzero(mags > 1.0 - UNIMODULAR_TOL)
    unimodular_count = int((np.abs(vals) > 1.0 - UNIMODULAR_TOL).sum())

    if is_exceptional(g):
        return FixedSpaceReport(
            t=t, k=k, g=g,
            residual_max=residual_max,
            span_dim=len(perms),
            unimodular_count=unimodular_count,
            projector_distance=None,
        )

    span = np.stack([p.ravel() for p in pmats], axis=1)
    eig_basis = vecs[:, uni_cols]
    if plus is not None:
        # Block route: permutation operators live entirely in the like-sign
        # half (permuting copies preserves the sign mask), so compare there.
        leak = np.abs(span[~plus, :]).max() if (~plus).any() else 0.0
        if leak > 1e-12:
            raise RuntimeError("permutation span leaks outside the like-sign block")
        span = span[plus, :]
        iterate = tmat[np.ix_(plus, plus)]
    else:
        iterate = tmat
    q_span = _orthonormal_columns(span)
    q_eig = _orthonormal_columns(eig_basis)
    # Nonsymmetric eig resolves a degenerate unimodular cluster only to about
    # 1e-8; polish the basis by subspace iteration, which contracts the
    # sub-unimodular contamination by (1 - gap) per step while acting as the
    # identity on the true fixed space.
    for _ in range(200):
        q_eig = _orthonormal_columns(iterate @ q_eig)
    if q_span.shape[1] != q_eig.shape[1]:
        distance = 1.0
    else:
        # sin of the largest principal angle, via the cross-projection
        # residuals; sqrt(1 - sigma_min^2) would amplify rounding near
        # sigma = 1 into a spurious 1e-8.
        cross = dagger(q_span) @ q_eig
        r_eig = q_eig - q_span @ cross
        r_span = q_span - q_eig @ dagger(cross)
        distance = max(
            float(np.linalg.svd(r_eig, compute_uv=False).max()),
            float(np.linalg.svd(r_span, compute_uv=False).max()),
        )
    if distance >= 1e-8:
        raise RuntimeError(
            f"unimodular eigenspace off the permutation span by {distance:.3e} "
            f"at non-exceptional g={g!r}"
        )
    return FixedSpaceReport(
        t=t, k=k, g=g,
        residual_max=residual_max,
        span_dim=q_span.shape[1],
        unimodular_count=unimodular_count,
        projector_distance=distance,
    )


def tdl_twirl_convergence(t: int, k: int, g: float, n_b: int, x: np.ndarray) -> float:
    """Max-norm distance of (T^(k))^{n_b}[x] from the analytic Haar twirl of x."""
    y = np.array(x, dtype=complex)
    for _ in range(n_b):
        y = transfer_apply(y, t, k, g)
    return float(np.abs(y - haar_twirl(x, 1 << t, k)).max())
