"""Periodic chains: the traced dual relation and its Haar Monte-Carlo probe.

Closing the chain into a ring removes the dual boundary vectors; the
projected state for outcome z_B becomes a fixed linear map applied to the
stacked columns of the gate product, psi(z_B) = c W vec(U(z_1)...U(z_nb))
with vec(U) = sum_m (U|m>) (x) |m>. W now eats two copies of the dual space
at once, a 2^{n_a} x 4^t block, and is fitted the same way as in the open
case: overdetermined least squares over every outcome at a reference size,
with the constant c absorbed (the physical table is Born-normalized, so the
fit pins it). Replacing the enumerated gate products by Haar-random unitaries
turns the same map into a weighted sampler for the ring's moment estimates.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dual_chain import (
    DEFAULT_OUTCOME_ORDER,
    W_RESIDUAL_TOL,
    _RANK_CUTOFF,
    dual_unitary,
)
from .ensembles import MOMENT_DIM_LIMIT, _khatri_rao_power, haar_moment
from .kicked_ising import KickedIsingParams, floquet_plus_state
from .linalg import dagger, haar_unitaries, trace_distance

PBC_T_LIMIT = 3
_MC_CHUNK = 4096
_WEIGHT_FLOOR = 1e-28


@dataclass
class PbcBoundaryMapW:
    """Least-squares boundary map of the ring, with its fit diagnostics."""

    n_a: int
    t: int
    g: float
    matrix: np.ndarray
    residual: float
    n_b_ref: int
    outcome_order: str = DEFAULT_OUTCOME_ORDER


@dataclass
class PbcScanRow:
    """One cumulative point of a Monte-Carlo distance scan."""

    m: int
    k: int
    t: int
    n_a: int
    g: float
    delta: float
    seed: int


def vec_operator(u: np.ndarray) -> np.ndarray:
    """Column stacking sum_m (U|m>) (x) |m>; component (i, m) is U[i, m]."""
    return np.asarray(u, dtype=complex).reshape(-1)


def outcome_vec_matrix(
    t: int, g: float, n_b: int, outcome_order: str = DEFAULT_OUTCOME_ORDER
) -> np.ndarray:
    """vec of every gate product U(z_1)...U(z_{n_b}), as a 4^t x 2^{n_b} array.

    Same column indexing and level-batched reuse as the open-chain state
    table; prepending a gate acts on vec as U (x) I.
    """
    dim = 1 << t
    left = {
        b: np.kron(dual_unitary(t, g, b), np.eye(dim, dtype=complex)) for b in (0, 1)
    }
    cols = vec_operator(np.eye(dim, dtype=complex))[:, None]
    if outcome_order == "adjacent_last":
        for _ in range(n_b):
            cols = np.hstack([left[0] @ cols, left[1] @ cols])
    elif outcome_order == "adjacent_first":
        for _ in range(n_b):
            nxt = np.empty((cols.shape[0], 2 * cols.shape[1]), dtype=complex)
            nxt[:, 0::2] = left[0] @ cols
            nxt[:, 1::2] = left[1] @ cols
            cols = nxt
    else:
        raise ValueError(f"unknown outcome order {outcome_order!r}")
    return cols


def pbc_projected_state_table(
    n_a: int, t: int, g: float, n_b: int, first_site: int = 1
) -> np.ndarray:
    """Unnormalized projected states of the ring, one outcome per column.

    Subsystem A spans n_a contiguous ring sites starting at first_site; the
    remaining sites follow in ring order as the outcome bits (nearest site =
    most significant). first_site=1 reduces to a plain reshape.
    """
    n = n_a + n_b
    params = KickedIsingParams(n_sites=n, g=g, boundary="periodic")
    psi = floquet_plus_state(params, t)
    if first_site == 1:
        return psi.reshape(1 << n_a, 1 << n_b)
    ring = [(first_site - 1 + j) % n for j in range(n)]
    rolled = np.moveaxis(psi.reshape((2,) * n), ring, range(n))
    return rolled.reshape(1 << n_a, 1 << n_b)


def extract_W_pbc(
    n_a: int,
    t: int,
    g: float,
    *,
    n_b_ref: int | None = None,
    outcome_order: str = DEFAULT_OUTCOME_ORDER,
) -> PbcBoundaryMapW:
    """Fit the ring boundary map over all outcomes at a reference size.

    The default reference n_b = 2t + 2 gives 4 times more equations than the
    4^t unknown columns; anything smaller cannot have full row rank. The
    multiplicative constant is absorbed into W because the physical table
    carries total Born weight 1.
    """
    if t > PBC_T_LIMIT:
        raise ValueError(f"ring extraction limited to t <= {PBC_T_LIMIT}")
    if n_b_ref is None:
        n_b_ref = 2 * t + 2
    if 1 << n_b_ref < 4 ** (t + 1):
        raise ValueError("reference size too small for a full-rank fit")
    vecs = outcome_vec_matrix(t, g, n_b_ref, outcome_order)
    table = pbc_projected_state_table(n_a, t, g, n_b_ref)
    scaled = 2.0 ** (-n_b_ref / 2.0) * vecs
    svals = np.linalg.svd(scaled, compute_uv=False)
    rank = int((svals > _RANK_CUTOFF * svals[0]).sum())
    if rank < 4**t:
        raise ValueError(f"gate-product vecs span only {rank} of {4 ** t} dimensions")
    solution, *_ = np.linalg.lstsq(scaled.T, table.T, rcond=None)
    matrix = solution.T
    residual = float(np.linalg.norm(table - matrix @ scaled, axis=0).max())
    if residual > W_RESIDUAL_TOL:
        raise ValueError(f"ring duality fit residual {residual:.3e} above tolerance")
    return PbcBoundaryMapW(
        n_a=n_a,
        t=t,
        g=g,
        matrix=matrix,
        residual=residual,
        n_b_ref=n_b_ref,
        outcome_order=outcome_order,
    )


def verify_pbc_duality(w: PbcBoundaryMapW, n_b: int) -> float:
    """Max outcome mismatch of the traced relation at a size of choice.

    Predicts 2^{-n_b/2} W vec(U(z_B)) for every outcome and compares with the
    ring simulation. Sizes away from n_b_ref probe that no per-gate constant
    was silently absorbed into the fit.
    """
    predicted = 2.0 ** (-n_b / 2.0) * (
        w.matrix @ outcome_vec_matrix(w.t, w.g, n_b, w.outcome_order)
    )
    direct = pbc_projected_state_table(w.n_a, w.t, w.g, n_b)
    return float(np.linalg.norm(predicted - direct, axis=0).max())


def pbc_k1_limit(w: PbcBoundaryMapW) -> np.ndarray:
    """Infinite-sample limit of the k=1 Haar estimator: W W^dag, trace-normalized.

    Haar's first moment gives E[vec(U) vec(U)^dag] = I / 2^t, so the weighted
    average of w w^dag is proportional to W W^dag.
    """
    prod = w.matrix @ dagger(w.matrix)
    return prod / prod.trace().real


def _haar_vec_batch(t: int, seed: int, start: int, count: int) -> np.ndarray:
    return haar_unitaries(1 << t, seed, count, offset=start).reshape(count, 4**t)


def pbc_mc_scan(
    n_a: int,
    t: int,
    k: int,
    g: float,
    m_list: list[int],
    seed: int,
    *,
    w: PbcBoundaryMapW | None = None,
    threads: int = 1,
) -> list[PbcScanRow]:
    """Cumulative trace distances of the weighted Haar estimator on the ring.

    Each sample i draws its unitary from an independent counter-derived
    stream, so the sample sequence is deterministic under any chunking; the
    estimate at M uses exactly samples 0..M-1 in that order. Rows come back
    sorted by M.
    """
    if (1 << (n_a * k)) > MOMENT_DIM_LIMIT:
        raise ValueError("moment dimension 2^{n_a k} out of budget")
    if not m_list:
        raise ValueError("m_list needs at least one checkpoint")
    if any(m <= 0 for m in m_list):
        raise ValueError("sample counts must be positive")
    if w is None:
        w = extract_W_pbc(n_a, t, g)
    checkpoints = sorted(set(int(m) for m in m_list))
    reference = haar_moment(1 << n_a, k)
    numerator = np.zeros((1 << (n_a * k), 1 << (n_a * k)), dtype=complex)
    total_weight = 0.0
    rows = []
    done = 0

    def segment_moment(start: int, count: int) -> tuple:
        vecs = _haar_vec_batch(t, seed, start, count)
        states = vecs @ w.matrix.T
        weights = np.einsum("ij,ij->i", states.conj(), states).real
        alive = weights > _WEIGHT_FLOOR
        if not alive.any():
            return np.zeros_like(numerator), 0.0
        normalized = states[alive] / np.sqrt(weights[alive])[:, None]
        powered = _khatri_rao_power(normalized, k)
        return (powered.T * weights[alive]) @ powered.conj(), float(weights[alive].sum())

    for m in checkpoints:
        while done < m:
            count = min(_MC_CHUNK, m - done)
            if threads > 1 and count >= 2 * threads:
                split = np.array_split(np.arange(done, done + count), threads)
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    parts = list(
                        pool.map(lambda ix: segment_moment(int(ix[0]), len(ix)), split)
                    )
                for part_num, part_den in parts:
                    numerator += part_num
                    total_weight += part_den
            else:
                part_num, part_den = segment_moment(done, count)
                numerator += part_num
                total_weight += part_den
            done += count
        if total_weight <= _WEIGHT_FLOOR:
            raise ValueError("all sample weights vanished; boundary map is degenerate")
        rho = numerator / total_weight
        rows.append(
            PbcScanRow(
                m=m,
                k=k,
                t=t,
                n_a=n_a,
                g=g,
                delta=trace_distance(rho, reference.matrix),
                seed=seed,
            )
        )
    return rows


def write_pbc_scan_csv(path, rows: list[PbcScanRow]) -> None:
    """Scan rows as CSV with shortest-round-trip floats."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["M", "k", "t", "n_a", "g", "delta", "seed"])
        for r in rows:
            writer.writerow([r.m, r.k, r.t, r.n_a, repr(r.g), repr(r.delta), r.seed])
