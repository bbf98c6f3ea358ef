import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualpe.linalg import (
    dagger,
    haar_state,
    haar_states,
    haar_unitaries,
    haar_unitary,
    kron,
    kron_power,
    proportional_up_to_phase,
    rng_stream,
    trace_distance,
)

RNG = np.random.default_rng(1234)


def random_unitary(d, seed):
    return haar_unitary(d, seed)


def test_kron_variadic_matches_pairwise():
    a, b, c = (RNG.standard_normal((2, 2)) for _ in range(3))
    assert np.allclose(kron(a, b, c), np.kron(np.kron(a, b), c))


def test_kron_mixed_product_property():
    a, b, c, d = (RNG.standard_normal((3, 3)) + 1j * RNG.standard_normal((3, 3)) for _ in range(4))
    left = kron(a, b) @ kron(c, d)
    right = kron(a @ c, b @ d)
    assert np.abs(left - right).max() < 1e-12


def test_kron_power():
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
    assert np.allclose(kron_power(h, 3), kron(h, h, h))
    assert kron_power(h, 1) is not h  # defensive copy
    with pytest.raises(ValueError):
        kron_power(h, 0)


def test_dagger():
    m = RNG.standard_normal((2, 3)) + 1j * RNG.standard_normal((2, 3))
    assert np.allclose(dagger(m), m.conj().T)


class TestTraceDistance:
    def test_known_value(self):
        rho = np.diag([1.0, 0.0]).astype(complex)
        sigma = np.eye(2, dtype=complex) / 2
        assert abs(trace_distance(rho, sigma) - 0.5) < 1e-14

    def test_orthogonal_pure_states_are_distance_one(self):
        rho = np.diag([1.0, 0.0]).astype(complex)
        sigma = np.diag([0.0, 1.0]).astype(complex)
        assert abs(trace_distance(rho, sigma) - 1.0) < 1e-14

    def test_self_distance_zero(self):
        u = random_unitary(4, 7)
        rho = u @ np.diag([0.5, 0.3, 0.2, 0.0]).astype(complex) @ dagger(u)
        assert trace_distance(rho, rho) == 0.0

    def test_unitary_invariance(self):
        rho = np.diag([0.6, 0.4, 0.0, 0.0]).astype(complex)
        sigma = np.eye(4, dtype=complex) / 4
        u = random_unitary(4, 11)
        before = trace_distance(rho, sigma)
        after = trace_distance(u @ rho @ dagger(u), u @ sigma @ dagger(u))
        assert abs(before - after) < 1e-12

    def test_rejects_non_hermitian(self):
        bad = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        with pytest.raises(ValueError):
            trace_distance(bad, np.eye(2, dtype=complex) / 2)


def test_proportional_up_to_phase_positive():
    m = RNG.standard_normal((3, 3)) + 1j * RNG.standard_normal((3, 3))
    ok, phase = proportional_up_to_phase(np.exp(1j * 0.7) * m, m)
    assert ok
    assert abs(phase - 0.7) < 1e-12


def test_proportional_up_to_phase_negative():
    m = np.eye(2, dtype=complex)
    ok, _ = proportional_up_to_phase(np.diag([1.0, -1.0]).astype(complex), m)
    assert not ok


class TestHaarSampling:
    def test_unitarity_and_determinism(self):
        u = haar_unitary(8, 42)
        assert np.abs(dagger(u) @ u - np.eye(8)).max() < 1e-12
        assert np.array_equal(u, haar_unitary(8, 42))
        assert not np.array_equal(u, haar_unitary(8, 43))

    def test_batch_matches_per_sample_streams(self):
        batch = haar_unitaries(4, 9, 6)
        assert batch.shape == (6, 4, 4)
        for i in range(6):
            assert np.abs(dagger(batch[i]) @ batch[i] - np.eye(4)).max() < 1e-12

    def test_batch_offset_continues_the_counter(self):
        whole = haar_unitaries(4, 9, 6)
        tail = haar_unitaries(4, 9, 2, offset=4)
        assert np.allclose(whole[4:], tail)

    def test_trace_second_moment(self):
        # E|Tr U|^2 = 1 for the unitary group; the unphased-QR shortcut fails
        # this statistic, so it guards the R-diagonal correction.
        vals = [abs(np.trace(u)) ** 2 for u in haar_unitaries(4, 5, 4000)]
        mean = np.mean(vals)
        assert abs(mean - 1.0) < 0.08, mean

    def test_state_first_moment_is_maximally_mixed(self):
        states = haar_states(4, 3, 3000)
        rho = (states[:, :, None] * states.conj()[:, None, :]).mean(axis=0)
        assert np.abs(rho - np.eye(4) / 4).max() < 0.02

    def test_state_normalization(self):
        states = haar_states(8, 21, 50)
        assert np.abs(np.linalg.norm(states, axis=1) - 1.0).max() < 1e-12
        single = haar_state(8, 21)
        assert abs(np.linalg.norm(single) - 1.0) < 1e-12

    def test_dimension_validation(self):
        with pytest.raises(ValueError):
            haar_unitary(0, 1)


def test_rng_stream_split_is_stable_and_disjoint():
    a = rng_stream(100, 0).random(5)
    b = rng_stream(100, 1).random(5)
    assert np.array_equal(a, rng_stream(100, 0).random(5))
    assert not np.array_equal(a, b)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=1, max_value=6))
def test_haar_unitary_is_unitary_for_any_seed(seed, d):
    u = haar_unitary(d, seed)
    assert np.abs(dagger(u) @ u - np.eye(d)).max() < 1e-12
