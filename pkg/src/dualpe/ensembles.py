"""Projected ensembles and their moment matrices.

Three constructions of the same object: direct statevector simulation of the
physical chain, exact enumeration through the dual picture, and exact
ancestral sampling of measurement outcomes. Moments are compared against the
analytic Haar moment (the normalized symmetric-subspace projector) through
the trace distance Delta^(k), and a transfer-map fast path evaluates exact
moments at arbitrarily large n_b in the uniform-probability regime.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dual_chain import (
    DEFAULT_OUTCOME_ORDER,
    BoundaryMapW,
    dual_unitary,
    extract_W,
    outcome_state_matrix,
)
from .kicked_ising import KickedIsingParams, floquet_plus_state
from .linalg import dagger, haar_states, kron_power, rng_stream, trace_distance
from .transfer import _all_permutations, permutation_operator, transfer_apply

# Outcomes with Born probability below this are vanishing projected states
# and are excluded; double-precision noise lives far below it.
PROB_FLOOR = 1e-14
MOMENT_DIM_LIMIT = 2**12
DIRECT_SITE_LIMIT = 24
_PROB_SUM_TOL = 1e-10
_CONDITIONAL_TOL = 1e-8


@dataclass
class ProjectedEnsemble:
    """Measurement-conditioned pure states on subsystem A with Born weights.

    entries holds (probability, state) pairs; for source "sampled" every
    entry carries weight 1/M and repeats are kept (unbiasedness).
    """

    n_a: int
    entries: list
    source: str

    def __post_init__(self):
        if self.source not in ("direct", "dual_exact", "sampled"):
            raise ValueError(f"unknown ensemble source {self.source!r}")
        probs = np.array([p for p, _ in self.entries])
        if len(probs) and probs.min() < 0:
            raise ValueError("negative probability in ensemble")
        if abs(probs.sum() - 1.0) > _PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")

    @property
    def size(self) -> int:
        return len(self.entries)


@dataclass
class MomentMatrix:
    """k-th moment of an ensemble as a density operator on (C^{2^{n_a}})^{(x)k}.

    Exact constructions are Hermitian, PSD, trace-1 and supported on the
    symmetric subspace; Monte-Carlo estimates satisfy those only up to the
    sampling error (their trace equals the empirical mean weight).
    """

    n_a: int
    k: int
    matrix: np.ndarray


def _ensemble_from_columns(columns: np.ndarray, n_a: int, source: str) -> ProjectedEnsemble:
    """Assemble (probability, state) entries from unnormalized column states."""
    probs = np.einsum("ij,ij->j", columns.conj(), columns).real
    keep = np.flatnonzero(probs > PROB_FLOOR)
    kept = probs[keep]
    kept = kept / kept.sum()
    entries = [
        (float(p), columns[:, j] / np.linalg.norm(columns[:, j]))
        for p, j in zip(kept, keep)
    ]
    return ProjectedEnsemble(n_a=n_a, entries=entries, source=source)


def projected_ensemble_direct(params: KickedIsingParams, t: int, n_a: int) -> ProjectedEnsemble:
    """Ensemble from the physical chain: evolve |+>^N for t periods, project B.

    Subsystem A is the first n_a sites (most significant bits); every
    computational outcome on the remaining N - n_a sites contributes one
    state weighted by its Born probability.
    """
    n = params.n_sites
    if n > DIRECT_SITE_LIMIT:
        raise ValueError(f"direct enumeration limited to {DIRECT_SITE_LIMIT} sites, got {n}")
    if not 1 <= n_a < n:
        raise ValueError(f"n_a must lie in [1, {n - 1}]")
    psi = floquet_plus_state(params, t)
    columns = psi.reshape(1 << n_a, 1 << (n - n_a))
    return _ensemble_from_columns(columns, n_a, "direct")


def _dual_state_columns(n_a, t, g, n_b, w, threads):
    if threads <= 1 or n_b < 4:
        return (2.0 ** (-n_b / 2)) * (w.matrix @ outcome_state_matrix(t, g, n_b))
    # Split the leading outcome bits across workers over one shared suffix
    # matrix, assembled in prefix order. Reproducible bit for bit at a fixed
    # thread count; different thread counts reassociate the floating-point
    # products and may differ from the serial result at the 1e-13 level.
    p_bits = max(1, min(int(threads).bit_length() - 1, n_b - 1))
    suffix = outcome_state_matrix(t, g, n_b - p_bits)

    def branch(prefix: int) -> np.ndarray:
        block = suffix
        for level in range(p_bits - 1, -1, -1):
            block = dual_unitary(t, g, (prefix >> (p_bits - 1 - level)) & 1) @ block
        return w.matrix @ block

    with ThreadPoolExecutor(max_workers=threads) as pool:
        blocks = list(pool.map(branch, range(1 << p_bits)))
    return (2.0 ** (-n_b / 2)) * np.hstack(blocks)


def projected_ensemble_dual(
    n_a: int,
    t: int,
    g: float,
    n_b: int,
    *,
    w: BoundaryMapW | None = None,
    threads: int = 1,
) -> ProjectedEnsemble:
    """Ensemble via the dual picture: states 2^{-n_b/2} W U(z_1)...U(z_{n_b})|+>^t.

    Enumerates all 2^{n_b} outcomes with full reuse of partial gate products
    (cost O(2^{n_b} 4^t)); the boundary map is extracted and residual-gated
    unless one is passed in.
    """
    if w is None:
        w = extract_W(n_a, t, g)
    columns = _dual_state_columns(n_a, t, g, n_b, w, threads)
    return _ensemble_from_columns(columns, n_a, "dual_exact")


def sample_outcomes(n_a, t, g, n_b, m_samples, seed, *, w=None):
    """Draw exact samples z_B ~ p(z_B) with their projected states.

    Bitwise ancestral sampling from the far end of the measured block: the
    conditional for each bit comes from the effect operators
    G_j = (adjoint transfer)^j [W†W] and the running partial state, so every
    draw is exact at cost O(n_b 4^t) per sample, never a Markov-chain
    approximation. All randomness comes from one stream derived from seed;
    rerunning with the same seed reproduces the outcome list bit for bit.

    Returns a list of (z_string, normalized state) pairs.
    """
    if w is None:
        w = extract_W(n_a, t, g)
    dim = 1 << t
    u_gates = np.stack([dual_unitary(t, g, 0), dual_unitary(t, g, 1)])

    effects = [dagger(w.matrix) @ w.matrix]
    for _ in range(n_b):
        prev = effects[-1]
        effects.append(
            0.5 * (dagger(u_gates[0]) @ prev @ u_gates[0] + dagger(u_gates[1]) @ prev @ u_gates[1])
        )

    uniforms = rng_stream(seed, 0).random((m_samples, n_b))
    states = np.full((m_samples, dim), dim ** -0.5, dtype=complex)
    bits = np.empty((m_samples, n_b), dtype=np.int8)
    # Chain-rule prediction for the next step's branch-weight sum; starts at
    # <+|G_{n_b}|+> = 1 (completeness) and equals twice the chosen branch
    # weight afterwards. Conditionals must reproduce it to _CONDITIONAL_TOL.
    expected = np.einsum("ci,ij,cj->c", states.conj(), effects[n_b], states).real

    for pos in range(n_b, 0, -1):
        g_rem = effects[pos - 1]
        cand = np.einsum("zab,cb->zca", u_gates, states)
        weights = 0.5 * np.einsum("zci,ij,zcj->zc", cand.conj(), g_rem, cand).real
        total = weights[0] + weights[1]
        bad = np.abs(total / expected - 1.0).max()
        if bad > _CONDITIONAL_TOL:
            raise RuntimeError(f"conditional probabilities sum off by {bad:.3e}")
        chosen = (uniforms[:, n_b - pos] * total > weights[0]).astype(np.int8)
        bits[:, pos - 1] = chosen
        states = cand[chosen, np.arange(m_samples)]
        expected = 2.0 * weights[chosen, np.arange(m_samples)]

    final = (2.0 ** (-n_b / 2)) * (states @ w.matrix.T)
    final = final / np.linalg.norm(final, axis=1, keepdims=True)
    strings = ["".join("01"[b] for b in row) for row in bits]
    return [(s, final[i]) for i, s in enumerate(strings)]


def sampled_ensemble(n_a, t, g, n_b, m_samples, seed) -> ProjectedEnsemble:
    """ProjectedEnsemble view of sample_outcomes, each draw at weight 1/M."""
    draws = sample_outcomes(n_a, t, g, n_b, m_samples, seed)
    entries = [(1.0 / m_samples, state) for _, state in draws]
    return ProjectedEnsemble(n_a=n_a, entries=entries, source="sampled")


def _khatri_rao_power(rows: np.ndarray, k: int) -> np.ndarray:
    """Row-wise k-fold tensor power: row m becomes row_m^{(x)k}."""
    out = rows
    for _ in range(k - 1):
        out = (out[:, :, None] * rows[:, None, :]).reshape(rows.shape[0], -1)
    return out


def moment(ensemble: ProjectedEnsemble, k: int) -> MomentMatrix:
    """k-th moment sum_z p(z) (|psi_z><psi_z|)^{(x)k} as a dense matrix."""
    if k < 1:
        raise ValueError("k must be >= 1")
    dim = 1 << (ensemble.n_a * k)
    if dim > MOMENT_DIM_LIMIT:
        raise ValueError(f"moment dimension 2^(n_a k) = {dim} exceeds {MOMENT_DIM_LIMIT}")
    probs = np.array([p for p, _ in ensemble.entries])
    rows = np.stack([s for _, s in ensemble.entries])
    powers = _khatri_rao_power(rows, k)
    rho = (powers.T * probs[None, :]) @ powers.conj()
    return MomentMatrix(n_a=ensemble.n_a, k=k, matrix=rho)


def haar_moment(d: int, k: int) -> MomentMatrix:
    """Haar state moment: symmetric-subspace projector over d(d+1)...(d+k-1)."""
    n_a = d.bit_length() - 1
    if (1 << n_a) != d:
        raise ValueError(f"qubit systems only: d = {d} is not a power of 2")
    if d**k > MOMENT_DIM_LIMIT:
        raise ValueError(f"moment dimension d^k = {d**k} exceeds {MOMENT_DIM_LIMIT}")
    acc = np.zeros((d**k, d**k), dtype=complex)
    for pi in _all_permutations(k):
        acc += permutation_operator(pi, d, k).matrix
    denom = math.prod(d + j for j in range(k))
    return MomentMatrix(n_a=n_a, k=k, matrix=acc / denom)


def delta_from_moment(m: MomentMatrix) -> float:
    """Trace distance of a k-th moment from the Haar moment of matching size."""
    return trace_distance(m.matrix, haar_moment(1 << m.n_a, m.k).matrix)


def delta_k(ensemble: ProjectedEnsemble, k: int) -> float:
    """Delta^(k): how far the ensemble's k-th moment sits from Haar."""
    return delta_from_moment(moment(ensemble, k))


def uniform_norm_constant(w: BoundaryMapW, tol: float = 1e-9) -> float:
    """Constant c with W†W = c I, or raise when outcome norms are not uniform.

    W†W proportional to the identity is exactly the condition making every
    outcome probability equal (2^{-n_b}); it holds whenever t <= n_a.
    """
    product = dagger(w.matrix) @ w.matrix
    const = product.trace().real / product.shape[0]
    deviation = np.abs(product - const * np.eye(product.shape[0])).max()
    if deviation > tol * max(1.0, abs(const)):
        raise ValueError(
            f"outcome norms are not uniform (|W†W - cI| = {deviation:.3e}); "
            "the linear moment path is only exact for t <= n_a"
        )
    return float(const)


def exact_moment_transfer(n_a, t, g, n_b, k, *, w=None) -> MomentMatrix:
    """k-th moment at any n_b, linear in n_b, through transfer-map powers.

    Pushes the k-copy plus-state density through n_b applications of the
    outcome-averaged channel and closes with W^{(x)k}. For k = 1 this is
    unconditionally exact (the Born denominator is trivial); for k >= 2 it
    requires the uniform-probability regime and refuses otherwise rather
    than approximating.
    """
    if (1 << (2 * t * k)) > 2**14:
        raise ValueError(f"k-copy transfer dimension 4^(t k) exceeds 2^14 at t={t}, k={k}")
    out_dim = 1 << (n_a * k)
    if out_dim > MOMENT_DIM_LIMIT:
        raise ValueError(f"moment dimension {out_dim} exceeds {MOMENT_DIM_LIMIT}")
    if w is None:
        w = extract_W(n_a, t, g)
    if k >= 2:
        uniform_norm_constant(w)
    plus = np.full(1 << (t * k), 2.0 ** (-t * k / 2), dtype=complex)
    rho = np.outer(plus, plus.conj())
    for _ in range(n_b):
        rho = transfer_apply(rho, t, k, g)
    w_k = kron_power(w.matrix, k)
    rho = w_k @ rho @ dagger(w_k)
    return MomentMatrix(n_a=n_a, k=k, matrix=rho / rho.trace())


def haar_projected_mc(t, n_a, k, m_samples, seed):
    """Monte-Carlo check of the Haar side: project Haar states onto <+| wires.

    Draws |Psi> Haar on 2^t, forms Psi_+ by closing the first t - n_a qubits
    with <+|, and averages the weighted k-copy moment
    2^{t-n_a} (Psi_+ Psi_+†)^{(x)k} / <Psi_+|Psi_+>^{k-1}. The estimate
    converges to the Haar moment on n_a qubits and the weight mean to 1.

    Returns (MomentMatrix, weight_mean).
    """
    if t < n_a:
        raise ValueError("projection needs t >= n_a")
    if (1 << (n_a * k)) > MOMENT_DIM_LIMIT:
        raise ValueError("moment dimension exceeds bound")
    psi = haar_states(1 << t, seed, m_samples)
    excess = t - n_a
    projected = psi.reshape(m_samples, 1 << excess, 1 << n_a).sum(axis=1)
    projected = projected * 2.0 ** (-excess / 2)
    norms_sq = np.einsum("ci,ci->c", projected.conj(), projected).real
    weights = (1 << excess) * norms_sq
    unit = projected / np.sqrt(norms_sq)[:, None]
    powers = _khatri_rao_power(unit, k)
    rho = (powers.T * (weights / m_samples)[None, :]) @ powers.conj()
    return MomentMatrix(n_a=n_a, k=k, matrix=rho), float(weights.mean())
