"""
Pauli matrices, the two-dimensional αI + a·σ family, and seeded random generators.
"""
import numpy as np

from gpvm.linalg import Projector, dagger
from gpvm.observable import Observable

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)


def pauli_dot(a):
    """a·σ for a real 3-vector."""
    return sum(float(c) * s for c, s in zip(a, PAULI))


def pauli_observable(alpha, a):
    """
    A = αI + a·σ with eigenvalues α ± |a| and projectors P_± = ½(I ± â·σ).
    Args:
        alpha: real offset
        a: real 3-vector
    Returns:
        Observable; a scalar observable when a = 0
    """
    a = np.asarray(a, dtype=float)
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return Observable(np.array([float(alpha)]), (Projector.identity(2),))
    n_sigma = pauli_dot(a / norm)
    eye = np.eye(2, dtype=np.complex128)
    minus = Projector.from_matrix((eye - n_sigma) / 2)
    plus = Projector.from_matrix((eye + n_sigma) / 2)
    return Observable(np.array([alpha - norm, alpha + norm]), (minus, plus))


def sigma_x():
    return pauli_observable(0.0, [1, 0, 0])


def sigma_y():
    return pauli_observable(0.0, [0, 1, 0])


def sigma_z():
    return pauli_observable(0.0, [0, 0, 1])


def random_unitary(n, rng):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(n, rng, scale=1.0):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (z + dagger(z)) / 2


def random_state(n, rng):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_density(n, rng):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = z @ dagger(z)
    return rho / np.trace(rho).real


def random_eigenvalues(k, rng, low=-2.0, min_gap=0.25):
    """k ascending values starting near `low`, consecutive gaps ≥ min_gap."""
    gaps = min_gap + rng.uniform(0.0, 1.0, k)
    return low + np.cumsum(gaps) - gaps[0]


def random_multiplicities(dim, k, rng):
    """Random composition of dim into k positive parts."""
    assert 1 <= k <= dim
    cuts = np.sort(rng.choice(np.arange(1, dim), size=k - 1, replace=False)) if k > 1 else np.array([], dtype=int)
    bounds = np.concatenate([[0], cuts, [dim]])
    return np.diff(bounds).astype(int)


def random_observable(dim, k, rng, unitary=None, eigenvalues=None):
    """
    Observable with k distinct eigenvalues whose eigenvectors are the columns of a
    (random unless given) unitary.
    """
    u = random_unitary(dim, rng) if unitary is None else unitary
    vals = random_eigenvalues(k, rng) if eigenvalues is None else np.asarray(eigenvalues, dtype=float)
    mult = random_multiplicities(dim, k, rng)
    projectors, start = [], 0
    for m in mult:
        projectors.append(Projector.from_orthonormal(u[:, start:start + m], dim))
        start += m
    return Observable(np.asarray(vals, dtype=float), tuple(projectors))


def random_commuting_pair(dim, ka, kb, rng):
    u = random_unitary(dim, rng)
    perm = rng.permutation(dim)
    return random_observable(dim, ka, rng, unitary=u), random_observable(dim, kb, rng, unitary=u[:, perm])


def random_axis(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)
