"""Structural identities of the dual gates: conjugated operators, rotations, grids.

The operators V_p = U(0)^p sigma^z_t U(0)^{-p} generate, for small p, strings
that stay local to the last one or two dual sites; particular products W_1 and
W_2 act on site t alone and are plain single-qubit rotations whose angles and
axes have closed forms in g. Checking those forms, probing the rationality of
theta_1/pi, scanning the coprimality condition behind the angle-incommensuracy
argument, and verifying the cluster-grid form of the Floquet unitary are all
pure numerics on a handful of qubits; everything here is dense and small.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dual_chain import dual_unitary
from .kicked_ising import KickedIsingParams, build_floquet, plus_state
from .linalg import HADAMARD, PAULI_X, PAULI_Y, PAULI_Z, dagger, kron, kron_power

_UNITARY_TOL = 1e-10
_AXIS_TOL = 1e-10
V_POWER_LIMIT = 8


@dataclass
class RotationDecomposition:
    """u = exp(i global_phase) exp(-i theta axis.S) with S = sigma/2.

    theta lies in [0, 2pi); the axis is a real unit 3-vector with its first
    nonzero component positive. degenerate marks inputs proportional to the
    identity, where the axis is a pure convention (+z) and theta is 0.
    """

    theta: float
    axis: np.ndarray
    global_phase: float
    degenerate: bool = False

    def reconstruct(self) -> np.ndarray:
        nx, ny, nz = self.axis
        generator = (nx * PAULI_X + ny * PAULI_Y + nz * PAULI_Z) / 2.0
        half = self.theta / 2.0
        rot = math.cos(half) * np.eye(2) - 1j * math.sin(half) * 2.0 * generator
        return np.exp(1j * self.global_phase) * rot


@dataclass
class RationalAngleProbe:
    """Best small-denominator rational for theta_1/pi; heuristic, not a proof."""

    g_num: int
    g_den: int
    ratio: float
    best_numerator: int
    best_denominator: int
    error: float
    classification: str
    note: str = "double-precision continued-fraction probe; not a proof of (ir)rationality"


def _matrix_power(u: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return np.eye(u.shape[0], dtype=complex)
    base = u if p > 0 else dagger(u)
    out = base.copy()
    for _ in range(abs(p) - 1):
        out = out @ base
    return out


def _sigma_z_site_t(t: int) -> np.ndarray:
    return kron(np.eye(1 << (t - 1), dtype=complex), PAULI_Z)


def v_p(p: int, t: int, g: float) -> np.ndarray:
    """Conjugated operator U(0)^p sigma^z_t U(0)^{-p} on the t-site dual chain."""
    if abs(p) > V_POWER_LIMIT:
        raise ValueError(f"|p| limited to {V_POWER_LIMIT}")
    if t < 2:
        raise ValueError("V_p needs t >= 2 (site t-1 must exist)")
    u = dual_unitary(t, g, 0)
    up = _matrix_power(u, p)
    return up @ _sigma_z_site_t(t) @ dagger(up)


def w1_w2(t: int, g: float) -> tuple:
    """The two rotation products (W_1, W_2) built from V_{-1}, V_0, V_1, V_2.

    Both act on site t alone, up to a global phase: W_2 is exactly the
    z-rotation exp(i 4 g sigma^z) and W_1 restricted to site t equals
    exp(i 2g Z) exp(-i 2g X) exp(i 2g Z) exp(-i 2g X) up to a global sign.
    The sign is forced: V_{-1} and V_2 carry sigma^z and sigma^x spectators
    on site t-1, and (sigma^z sigma^x)^2 = -1.
    """
    ops = {p: v_p(p, t, g) for p in (-1, 0, 1, 2)}
    w1_half = ops[-1] @ ops[1] @ ops[2] @ ops[0]
    w1 = w1_half @ w1_half
    w2 = ops[-1] @ ops[1] @ ops[-1] @ ops[1]
    return w1, w2


def last_site_factor(op: np.ndarray) -> tuple:
    """Fit op as identity (x) w on the last qubit; returns (w, max deviation)."""
    dim = op.shape[0]
    rest = dim // 2
    blocks = op.reshape(rest, 2, rest, 2)
    w = np.einsum("rarb->ab", blocks) / rest
    deviation = float(np.abs(op - kron(np.eye(rest, dtype=complex), w)).max())
    return w, deviation


def rotation_decompose(u: np.ndarray) -> RotationDecomposition:
    """Angle, axis, and global phase of a single-qubit unitary."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    if np.abs(dagger(u) @ u - np.eye(2)).max() > _UNITARY_TOL:
        raise ValueError("matrix is not unitary")
    phase = 0.5 * np.angle(np.linalg.det(u))
    su = np.exp(-1j * phase) * u
    a = su.trace().real / 2.0
    b = np.array([
        (1j * (su @ PAULI_X).trace() / 2.0).real,
        (1j * (su @ PAULI_Y).trace() / 2.0).real,
        (1j * (su @ PAULI_Z).trace() / 2.0).real,
    ])
    norm_b = float(np.linalg.norm(b))
    if norm_b <= _AXIS_TOL:
        # Proportional to the identity; su = +-I, fold the sign into the phase.
        if a < 0:
            phase += math.pi
        return RotationDecomposition(
            theta=0.0,
            axis=np.array([0.0, 0.0, 1.0]),
            global_phase=float(phase % (2 * math.pi)),
            degenerate=True,
        )
    theta = 2.0 * math.atan2(norm_b, a)
    axis = b / norm_b
    first = axis[np.flatnonzero(np.abs(axis) > _AXIS_TOL)[0]]
    if first < 0:
        # Flipping the axis sends theta to 2pi - theta and shifts the phase
        # by pi (a full 2pi rotation equals -I).
        axis = -axis
        theta = 2 * math.pi - theta
        phase += math.pi
    return RotationDecomposition(
        theta=float(theta % (2 * math.pi)),
        axis=axis,
        global_phase=float(phase % (2 * math.pi)),
    )


def theta1(g: float) -> float:
    """Closed-form rotation angle of W_1: 2 arccos(2 cos^4(2g) - 1), in [0, 2pi]."""
    arg = 2.0 * math.cos(2.0 * g) ** 4 - 1.0
    return 2.0 * math.acos(min(1.0, max(-1.0, arg)))


def axis1_reference(g: float) -> np.ndarray:
    """Closed-form rotation axis of W_1, canonicalized like rotation_decompose.

    Undefined where W_1 is proportional to the identity (g a multiple of pi/4,
    where the denominator vanishes); raises there.
    """
    den_sq = 1.0 - (-1.0 + 4.0 * math.cos(4.0 * g) + math.cos(8.0 * g)) ** 2 / 16.0
    if den_sq <= _AXIS_TOL**2:
        raise ValueError("axis undefined: W_1 is proportional to the identity here")
    axis = np.array([
        2.0 * math.cos(2.0 * g) ** 3 * math.sin(2.0 * g),
        -math.sin(4.0 * g) ** 2 / 2.0,
        -2.0 * math.cos(2.0 * g) ** 3 * math.sin(2.0 * g),
    ]) / math.sqrt(den_sq)
    first = axis[np.flatnonzero(np.abs(axis) > _AXIS_TOL)[0]]
    return -axis if first < 0 else axis


def theta2(g: float) -> float:
    """Closed-form rotation angle of W_2: -8g modulo 2pi."""
    return (-8.0 * g) % (2 * math.pi)


def rational_angle_probe(g_num: int, g_den: int, max_den: int = 10**6) -> RationalAngleProbe:
    """Search for a small-denominator rational equal to theta_1/pi at g = (g_num/g_den) pi.

    A continued-fraction scan at double precision; classifies "rational"
    only when the best approximant sits within 1e-12, and says so in the
    record rather than pretending to decide irrationality.
    """
    if g_den == 0:
        raise ValueError("g_den must be nonzero")
    if abs(g_den) > 100:
        raise ValueError("g denominators above 100 exceed the probe's precision budget")
    ratio = theta1(math.pi * g_num / g_den) / math.pi
    best = Fraction(ratio).limit_denominator(max_den)
    error = abs(ratio - float(best))
    if error < 1e-12:
        classification = "rational"
    else:
        classification = f"no rational with denominator <= {max_den} within 1e-12"
    return RationalAngleProbe(
        g_num=g_num,
        g_den=g_den,
        ratio=ratio,
        best_numerator=best.numerator,
        best_denominator=best.denominator,
        error=error,
        classification=classification,
    )


def _interval_all_share_factors(n: int) -> bool:
    lo = n // 4 + 1
    hi = (3 * n - 1) // 4 if (3 * n) % 4 == 0 else (3 * n) // 4
    for m in range(lo, hi + 1):
        if math.gcd(m, n) == 1:
            return False
    return True


def lemma3_scan(n_max: int, threads: int = 1) -> list:
    """All n <= n_max where every integer in (n/4, 3n/4) shares a factor with n."""
    if n_max < 6:
        raise ValueError("scan below n_max = 6 cannot see the full answer set")
    candidates = range(1, n_max + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            flags = list(pool.map(_interval_all_share_factors, candidates, chunksize=1024))
        return [n for n, flag in zip(candidates, flags) if flag]
    return [n for n in candidates if _interval_all_share_factors(n)]


def cluster_edges(n: int, t: int) -> list:
    """Edges of the n x t grid under the site indexing (i, alpha) -> (alpha-1) n + (i-1)."""
    edges = []
    for alpha in range(1, t + 1):
        for i in range(1, n):
            base = (alpha - 1) * n + (i - 1)
            edges.append((base, base + 1))
    for alpha in range(1, t):
        for i in range(1, n + 1):
            base = (alpha - 1) * n + (i - 1)
            edges.append((base, base + n))
    return edges


def _apply_cz(state: np.ndarray, total: int, p: int, q: int) -> None:
    idx = np.arange(state.size)
    # Grid position p corresponds to bit (total - 1 - p) counting from the LSB.
    both = ((idx >> (total - 1 - p)) & (idx >> (total - 1 - q))) & 1
    state[both == 1] *= -1.0


def cluster_relation_check(n: int, t: int, g: float) -> tuple:
    """Compare the projected, phased cluster grid with the vectorized U_F^t.

    Builds the n x t cluster state, applies the per-site z phases, closes the
    bulk rows with <+|, rotates the last row by Hadamards, and overlaps the
    result with sum_{m,out} <out|U_F^t|m> |m>|out> (global phase and overall
    normalization dropped). Returns (match, fidelity).

    For t = 1 the grid has a single row, so there is no input/output split;
    the comparison degenerates to U_F acting on |+>^n and is flagged with a
    warning.
    """
    total = n * t
    if total > 12:
        raise ValueError("cluster check limited to n*t <= 12 qubits")
    state = plus_state(total)
    for p, q in cluster_edges(n, t):
        _apply_cz(state, total, p, q)
    idx = np.arange(state.size)
    ones = np.zeros(state.size)
    for p in range(total):
        ones += (idx >> (total - 1 - p)) & 1
    state = state * np.exp(-1j * g * (total - 2.0 * ones))

    if t == 1:
        warnings.warn("t=1 grid has no bulk; comparing against U_F |+>^n", stacklevel=2)
        reference = build_floquet(KickedIsingParams(n_sites=n, g=g)) @ plus_state(n)
        processed = kron_power(HADAMARD, n) @ state
    else:
        # Sum out rows 2..t-1 (the <+| closure, up to normalization), keeping
        # row 1 (input, most significant block) and row t (output block).
        grid = state.reshape(1 << n, 1 << (n * (t - 2)), 1 << n)
        kept = grid.sum(axis=1)
        processed = (kept @ kron_power(HADAMARD, n)).ravel()
        reference = np.linalg.matrix_power(
            build_floquet(KickedIsingParams(n_sites=n, g=g)), t
        ).T.ravel()

    overlap = np.vdot(reference, processed)
    fidelity = float(
        abs(overlap) ** 2
        / (np.vdot(reference, reference).real * np.vdot(processed, processed).real)
    )
    return fidelity > 1.0 - 1e-10, fidelity
