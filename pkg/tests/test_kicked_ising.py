"""Floquet builder checked against a dense matrix-exponential reference.

The reference Hamiltonians below are assembled operator by operator with
explicit Kronecker products and exponentiated with scipy, sharing no code
with the phase-vector construction under test.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from dualpe.kicked_ising import (
    KickedIsingParams,
    apply_floquet,
    build_floquet,
    floquet_plus_state,
    is_exceptional,
    ising_phase_angles,
    plus_state,
    self_dual_params,
)
from dualpe.linalg import PAULI_Y, PAULI_Z, kron

I2 = np.eye(2, dtype=complex)


def op_at(site, op, n):
    """Single-site operator embedded in the n-site space, site 1 = MSB."""
    factors = [I2] * n
    factors[site - 1] = op
    return kron(*factors)


def reference_floquet(params):
    n = params.n_sites
    h_ising = np.zeros((1 << n, 1 << n), dtype=complex)
    for i in range(1, n):
        h_ising += params.J * op_at(i, PAULI_Z, n) @ op_at(i + 1, PAULI_Z, n)
    if params.boundary == "periodic":
        h_ising += params.J * op_at(n, PAULI_Z, n) @ op_at(1, PAULI_Z, n)
    for i in range(1, n + 1):
        h_ising += params.g * op_at(i, PAULI_Z, n)
    if params.boundary == "open":
        h_ising += params.b_left * op_at(1, PAULI_Z, n)
        h_ising += params.b_right * op_at(n, PAULI_Z, n)
    h_kick = sum(params.h * op_at(i, PAULI_Y, n) for i in range(1, n + 1))
    return expm(-1j * h_kick) @ expm(-1j * params.tau * h_ising)


@pytest.mark.parametrize("boundary", ["open", "periodic"])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_build_floquet_matches_expm_reference(n, boundary):
    params = KickedIsingParams(n_sites=n, g=math.pi / 9, boundary=boundary)
    assert np.abs(build_floquet(params) - reference_floquet(params)).max() < 1e-12


def test_build_floquet_generic_couplings():
    # Off the self-dual point, with asymmetric boundary fields and tau != 1.
    params = KickedIsingParams(
        n_sites=3, J=0.31, h=0.77, g=0.52, b_left=0.11, b_right=0.93, tau=1.7
    )
    assert np.abs(build_floquet(params) - reference_floquet(params)).max() < 1e-12


def test_build_floquet_is_unitary():
    params = self_dual_params(5, math.pi / 9)
    u = build_floquet(params)
    assert np.abs(u.conj().T @ u - np.eye(1 << 5)).max() < 1e-12


def test_dense_site_limit():
    with pytest.raises(ValueError, match="dense"):
        build_floquet(KickedIsingParams(n_sites=14))


def test_ising_angles_site_one_is_msb():
    # Flipping only site 1 must change the b_left contribution by -2*b_left.
    params = KickedIsingParams(n_sites=3, J=0.0, g=0.0, b_left=0.25, b_right=0.0)
    angles = ising_phase_angles(params)
    assert abs((angles[0b100] - angles[0b000]) - (-2 * 0.25)) < 1e-15
    # ... and leave b_right alone (flip site 3 instead).
    assert abs(angles[0b001] - angles[0b000]) < 1e-15 or params.b_right == 0.0


class TestApplyFloquet:
    def test_matches_dense_power(self):
        params = self_dual_params(4, math.pi / 5)
        u = build_floquet(params)
        psi0 = plus_state(4)
        for steps in (1, 2, 5):
            dense = np.linalg.matrix_power(u, steps) @ psi0
            assert np.abs(apply_floquet(psi0, params, steps) - dense).max() < 1e-12

    def test_periodic_matches_dense(self):
        params = KickedIsingParams(n_sites=4, g=0.3, boundary="periodic")
        dense = build_floquet(params) @ plus_state(4)
        assert np.abs(apply_floquet(plus_state(4), params) - dense).max() < 1e-12

    def test_zero_steps_is_identity(self):
        params = self_dual_params(3, 0.1)
        psi = plus_state(3)
        out = apply_floquet(psi, params, 0)
        assert np.array_equal(out, psi)
        assert out is not psi

    def test_norm_preserved_many_steps(self):
        params = self_dual_params(8, math.pi / 9)
        psi = apply_floquet(plus_state(8), params, 50)
        assert abs(np.linalg.norm(psi) - 1.0) < 1e-12

    def test_rejects_wrong_state_size(self):
        with pytest.raises(ValueError, match="amplitudes"):
            apply_floquet(np.ones(7, dtype=complex), self_dual_params(3, 0.1))

    def test_rejects_negative_steps(self):
        with pytest.raises(ValueError):
            apply_floquet(plus_state(2), self_dual_params(2, 0.1), -1)


def test_floquet_plus_state_composes():
    params = self_dual_params(5, math.pi / 7)
    two = floquet_plus_state(params, 2)
    one_then_one = apply_floquet(floquet_plus_state(params, 1), params, 1)
    assert np.abs(two - one_then_one).max() < 1e-12


class TestExceptionalGrid:
    def test_multiples_of_pi_over_8(self):
        for k in range(-8, 9):
            assert is_exceptional(k * math.pi / 8)

    def test_generic_angles(self):
        assert not is_exceptional(math.pi / 9)
        assert not is_exceptional(math.pi / 5)
        assert not is_exceptional(0.4)

    def test_tolerance_boundary(self):
        assert is_exceptional(math.pi / 4 + 1e-13)
        assert not is_exceptional(math.pi / 4 + 1e-9)

    def test_property_mirrors_function(self):
        assert KickedIsingParams(n_sites=2, g=math.pi / 8).exceptional
        assert not KickedIsingParams(n_sites=2, g=math.pi / 9).exceptional


class TestParams:
    def test_self_dual_flag(self):
        assert self_dual_params(3, 0.2).self_dual
        assert not KickedIsingParams(n_sites=3, J=0.3).self_dual
        # Periodic chains have no boundary fields, so b_* must not matter.
        assert KickedIsingParams(n_sites=3, b_left=0.0, boundary="periodic").self_dual

    def test_validation(self):
        with pytest.raises(ValueError):
            KickedIsingParams(n_sites=1)
        with pytest.raises(ValueError):
            KickedIsingParams(n_sites=2, boundary="twisted")

    def test_json_round_trip(self):
        params = KickedIsingParams(n_sites=4, g=math.pi / 9, boundary="periodic")
        assert KickedIsingParams.from_json(params.to_json()) == params

    def test_with_g(self):
        params = self_dual_params(3, 0.1)
        assert params.with_g(0.5).g == 0.5
        assert params.with_g(0.5).n_sites == 3


def test_plus_state_amplitudes():
    psi = plus_state(3)
    assert np.abs(psi - 2.0 ** -1.5).max() < 1e-15
    with pytest.raises(ValueError):
        plus_state(0)


@settings(max_examples=20, deadline=None)
@given(
    st.integers(min_value=2, max_value=5),
    st.floats(min_value=-2.0, max_value=2.0, allow_nan=False),
)
def test_floquet_unitary_for_any_field(n, g):
    u = build_floquet(KickedIsingParams(n_sites=n, g=g))
    assert np.abs(u.conj().T @ u - np.eye(1 << n)).max() < 1e-11
