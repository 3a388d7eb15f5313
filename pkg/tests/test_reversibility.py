import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coninv.certify import InstanceSpec, random_c_reversible
from coninv.errors import (
    CReversibilityRequired,
    InconsistentSystemError,
    InvalidWitnessError,
    SingularMatrixError,
)
from coninv.factorization import two_factor
from coninv.linalg_core import (
    AffineMap,
    Tolerance,
    affine_compose,
    affine_distance,
    affine_norm,
    group_conjugate,
    identity,
    is_coninvolution,
)
from coninv.reversibility import (
    affine_reverser,
    coninvolutory_reverser,
    is_c_reversible_affine,
    is_c_reversible_matrix,
    pair_from_reverser,
    reverse_residual,
    reverser_space,
    transport_reverser,
)
from coninv.spectral import jordan_block
from conftest import random_affine

TOL = Tolerance()
SWAP = np.array([[0, 1], [1, 0]], dtype=complex)
seeds = st.integers(0, 2**32 - 1)


def crev(seed, n):
    return random_c_reversible(InstanceSpec("random_c_reversible", n, seed))


@pytest.mark.parametrize("A, expected", [
    (np.diag([np.e, 1 / np.e]), True),
    (jordan_block(1, 4), True),
    (np.diag([2, 3]), False),
    (np.diag([2, 0.5, 1j]), True),
    (np.diag([2, 0.5, 0.5]), False),
])
def test_matrix_predicate_examples(A, expected):
    assert is_c_reversible_matrix(A) is expected


def test_matrix_predicate_needs_invertible():
    with pytest.raises(SingularMatrixError):
        is_c_reversible_matrix(np.diag([1, 0]))


def test_block_multisets_must_match():
    # spectra pair up but the Jordan blocks do not
    A = np.zeros((3, 3), dtype=complex)
    A[:2, :2] = jordan_block(2, 2)
    A[2, 2] = 0.5
    assert not is_c_reversible_matrix(A)


@pytest.mark.parametrize("g, expected", [
    (AffineMap(jordan_block(1, 2), [0, 1]), True),
    (AffineMap(jordan_block(1, 2), [3 - 1j, 2j]), True),
    (AffineMap(np.diag([2, 3])), False),
    (AffineMap(np.eye(3), [1, 2, 3j]), True),
])
def test_affine_predicate_examples(g, expected):
    assert is_c_reversible_affine(g) is expected


def test_reverser_space_examples():
    basis = reverser_space(np.diag([2, 0.5]))
    coords = np.array([[np.vdot(b, SWAP) for b in basis]])
    # the swap lies in the span of the returned orthonormal basis
    assert np.linalg.norm(coords) == pytest.approx(np.linalg.norm(SWAP))
    assert reverser_space(np.diag([2, 3])) == []
    assert len(reverser_space(np.eye(3))) == 9


def test_reverser_examples():
    w = coninvolutory_reverser(np.diag([2, 0.5]), np.random.default_rng(0))
    B = w.linear
    assert np.allclose(B @ B.conj(), np.eye(2)) and np.allclose(np.diag(B), 0)
    w = coninvolutory_reverser(np.eye(2), np.random.default_rng(0))
    assert np.array_equal(w.linear, np.eye(2))
    w = coninvolutory_reverser(jordan_block(1, 2), np.random.default_rng(0))
    assert w.residual_reverse <= 1e-9 and w.residual_coninv <= 1e-9


def test_reverser_requires_c_reversible():
    with pytest.raises(CReversibilityRequired):
        coninvolutory_reverser(np.diag([2, 3]), np.random.default_rng(0))


def test_affine_reverser_examples():
    T = np.diag([2, 0.5])
    w = affine_reverser(AffineMap(T), SWAP)
    assert np.allclose(w.reverser.translation, 0)
    g = AffineMap(jordan_block(1, 2), [0, 1])
    w = affine_reverser(g, np.diag([1, -1]))
    assert np.allclose(w.reverser.translation, [0, 1])
    assert w.residual_reverse < 1e-14 and w.residual_coninv < 1e-14


def test_affine_reverser_inconsistent():
    with pytest.raises(InconsistentSystemError):
        affine_reverser(AffineMap(np.eye(2), [1, 0]), np.eye(2))


def test_transport_examples(rng):
    g = AffineMap(jordan_block(1, 2), [0, 1])
    h = affine_reverser(g, np.diag([1, -1]))
    same = transport_reverser(identity(2), h)
    assert affine_distance(same.reverser, h.reverser) == 0
    k = random_affine(rng, 2)
    moved = transport_reverser(k, h)
    assert is_coninvolution(moved.reverser)
    assert reverse_residual(moved.reverser, group_conjugate(k, g)) < 1e-9
    scalar = transport_reverser(AffineMap([[2]]), affine_reverser(AffineMap([[3]]), [[-1]]))
    assert np.allclose(scalar.reverser.linear, [[-1]])


def test_pair_examples():
    e = identity(2)
    g1, g2 = pair_from_reverser(e, e)
    assert affine_distance(g1, e) == 0 and affine_distance(g2, e) == 0
    g = AffineMap(jordan_block(1, 2), [0, 1])
    g1, g2 = pair_from_reverser(g, AffineMap(np.diag([1, -1]), [0, 1]))
    assert affine_distance(g1, AffineMap(np.diag([1, -1]), [0, 1])) < 1e-15
    assert affine_distance(g2, AffineMap([[1, 1], [0, -1]])) < 1e-15
    phi = 0.7
    g1, g2 = pair_from_reverser(AffineMap([[np.exp(1j * phi)]]), identity(1))
    assert is_coninvolution(g1) and is_coninvolution(g2)
    assert g2.linear[0, 0] == pytest.approx(np.exp(1j * phi))


def test_pair_rejects_bad_witness():
    g = AffineMap(jordan_block(1, 2), [0, 1])
    with pytest.raises(InvalidWitnessError):
        pair_from_reverser(g, AffineMap(2 * np.eye(2)))
    with pytest.raises(InvalidWitnessError):
        pair_from_reverser(g, identity(2))


@given(seeds, st.integers(1, 6))
def test_pairing_is_symmetric(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    if seed % 2:
        A = crev(seed, n)
    assert is_c_reversible_matrix(A) == is_c_reversible_matrix(np.linalg.inv(A.conj()))


@given(seeds, st.integers(1, 5))
def test_reverser_space_members_reverse(seed, n):
    A = crev(seed, n)
    Ab_inv = np.linalg.inv(A.conj())
    for B in reverser_space(A):
        assert np.linalg.norm(B @ A - Ab_inv @ B) <= 1e-9 * max(1.0, np.linalg.norm(A) * np.linalg.norm(Ab_inv))


def test_reverser_on_200_instances():
    for seed in range(200):
        n = seed % 6 + 1
        A = crev(seed, n)
        w = coninvolutory_reverser(A, np.random.default_rng(seed))
        assert w.residual_reverse <= TOL.residual_rel and w.residual_coninv <= TOL.residual_rel
        B = w.linear
        Binv = np.linalg.inv(B)
        scale = max(1.0, np.linalg.norm(B) * np.linalg.norm(Binv) * np.linalg.norm(A))
        assert np.linalg.norm(B @ A @ Binv - np.linalg.inv(A.conj())) <= 1e-8 * scale


@given(seeds, st.integers(1, 6))
def test_pair_and_transport(seed, n):
    rng = np.random.default_rng(seed)
    g = AffineMap(crev(seed, n), rng.standard_normal(n) + 1j * rng.standard_normal(n))
    cert = two_factor(g, rng=seed)
    g1, g2 = cert.factors
    assert is_coninvolution(g1) and is_coninvolution(g2)
    assert affine_distance(affine_compose(g1, g2), g) <= 1e-8 * max(1.0, affine_norm(g))
    # g1 = h^{-1} and h is a coninvolution, so h = conj(g1)
    h = AffineMap(g1.linear.conj(), g1.translation.conj())
    k = random_affine(rng, n)
    w = transport_reverser(k, affine_reverser(g, h.linear))
    assert reverse_residual(w.reverser, group_conjugate(k, g)) <= 1e-8
