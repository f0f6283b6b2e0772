import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gpvm.GPVMConfig import use_config
from gpvm.errors import DimensionMismatch, NoConvergence, NotAProjector, NotHermitian
from gpvm.fixtures import SIGMA_X, SIGMA_Z, random_hermitian, random_unitary
from gpvm.linalg import (Projector, complement, eigh, join, join_all, leq, matrix_exp_hermitian, meet,
                         meet_all, projector_from_basis, span_projector)


def _random_projector(n, rng, rank=None, u=None):
    u = random_unitary(n, rng) if u is None else u
    rank = int(rng.integers(0, n + 1)) if rank is None else rank
    return Projector.from_orthonormal(u[:, rng.permutation(n)[:rank]], n)


@pytest.mark.parametrize('n', [1, 2, 3, 5, 8])
def test_eigh_matches_numpy(n, rng):
    h = random_hermitian(n, rng)
    dec = eigh(h)
    np.testing.assert_allclose(dec.eigenvalues, np.linalg.eigvalsh(h), atol=1e-10)
    v = dec.eigenvectors
    np.testing.assert_allclose((v * dec.eigenvalues) @ v.conj().T, h, atol=1e-10)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-10)
    assert np.all(np.diff(dec.eigenvalues) >= 0)


def test_eigh_degenerate_spectrum():
    dec = eigh(np.diag([2.0, -1.0, 2.0, -1.0]))
    np.testing.assert_allclose(dec.eigenvalues, [-1.0, -1.0, 2.0, 2.0], atol=1e-12)


def test_eigh_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigh_outputs_are_read_only(rng):
    dec = eigh(random_hermitian(3, rng))
    with pytest.raises(ValueError):
        dec.eigenvalues[0] = 0.0


def test_eigh_sweep_limit(rng):
    h = random_hermitian(6, rng)
    with use_config(jacobi_max_sweeps=1):
        with pytest.raises(NoConvergence) as err:
            eigh(h)
    assert '1 sweeps' in str(err.value)
    np.testing.assert_allclose(eigh(h).eigenvalues, np.linalg.eigvalsh(h), atol=1e-10)
    assert eigh(np.diag([3.0, 1.0])).eigenvalues.tolist() == [1.0, 3.0]


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (4, 4), elements=st.floats(-5, 5)),
       arrays(np.float64, (4, 4), elements=st.floats(-5, 5)))
def test_eigh_reconstructs_hypothesis(re, im):
    h = (re + re.T) / 2 + 1j * (im - im.T) / 2
    dec = eigh(h)
    v = dec.eigenvectors
    scale = 1.0 + np.max(np.abs(h))
    assert np.max(np.abs((v * dec.eigenvalues) @ v.conj().T - h)) <= 1e-9 * scale


def test_projector_from_matrix_validates():
    p = Projector.from_matrix((np.eye(2) + SIGMA_X) / 2)
    assert p.rank == 1
    with pytest.raises(NotAProjector):
        Projector.from_matrix(np.array([[1.0, 1.0], [0.0, 0.0]]) * 0.7)
    with pytest.raises(DimensionMismatch):
        Projector.from_matrix(np.ones((2, 3)))


def test_meet_and_join_of_non_commuting_rank_one():
    px = Projector.from_matrix((np.eye(2) + SIGMA_X) / 2)
    pz = Projector.from_matrix((np.eye(2) + SIGMA_Z) / 2)
    assert meet(px, pz).rank == 0
    j = join(px, pz)
    assert j.rank == 2
    np.testing.assert_allclose(j.matrix, np.eye(2), atol=1e-12)


def test_commuting_meet_is_product(rng):
    u = random_unitary(5, rng)
    p = Projector.from_orthonormal(u[:, [0, 1, 2]], 5)
    q = Projector.from_orthonormal(u[:, [1, 2, 4]], 5)
    np.testing.assert_allclose(meet(p, q).matrix, p.matrix @ q.matrix, atol=1e-10)
    np.testing.assert_allclose(join(p, q).matrix, p.matrix + q.matrix - p.matrix @ q.matrix, atol=1e-10)
    assert meet(p, q).rank == 2
    assert join(p, q).rank == 4


@pytest.mark.parametrize('seed', range(10))
def test_lattice_laws(seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    n = int(rng.integers(2, 7))
    p, q = _random_projector(n, rng), _random_projector(n, rng)
    m, j = meet(p, q), join(p, q)
    assert leq(m, p) and leq(m, q)
    assert leq(p, j) and leq(q, j)
    np.testing.assert_allclose(join(p, meet(p, q)).matrix, p.matrix, atol=1e-9)
    np.testing.assert_allclose(meet(p, join(p, q)).matrix, p.matrix, atol=1e-9)
    np.testing.assert_allclose(complement(join(p, q)).matrix,
                               meet(complement(p), complement(q)).matrix, atol=1e-9)


def test_meet_join_with_bounds(rng):
    p = _random_projector(4, rng, rank=2)
    zero, one = Projector.zero(4), Projector.identity(4)
    assert meet(p, zero).rank == 0
    assert meet(p, one) is p
    assert join(p, zero) is p
    assert join(p, one).rank == 4
    assert join_all([], 4).rank == 0
    assert meet_all([], 4).rank == 4


def test_span_and_basis_projectors():
    v = np.array([1.0, 1.0, 0.0])
    w = np.array([2.0, 2.0, 0.0])
    p = projector_from_basis([v, w])
    assert p.rank == 1
    np.testing.assert_allclose(p.matrix, np.outer(v, v) / 2, atol=1e-12)
    assert projector_from_basis([], dim=3).rank == 0
    with pytest.raises(DimensionMismatch):
        projector_from_basis([])
    assert span_projector(np.eye(3)[:, :2]).rank == 2


def test_matrix_exp_hermitian():
    out = matrix_exp_hermitian(SIGMA_X)
    np.testing.assert_allclose(out, np.cosh(1.0) * np.eye(2) + np.sinh(1.0) * SIGMA_X, atol=1e-12)
