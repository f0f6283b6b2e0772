"""
Dense complex linear algebra and the projection lattice: a cyclic Jacobi
eigensolver for Hermitian matrices, projectors, meet, join and complement.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from gpvm.GPVMConfig import get_config, within
from gpvm.errors import DimensionMismatch, NoConvergence, NotAProjector, NotHermitian


def as_matrix(m):
    """
    Coerce to a finite, read-only complex128 2-D array.
    Args:
        m: array-like
    Returns:
        np.ndarray of dtype complex128
    """
    arr = np.array(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionMismatch(f'expected a matrix, got shape {arr.shape}')
    if not np.all(np.isfinite(arr)):
        raise ValueError('matrix has non-finite entries')
    arr.setflags(write=False)
    return arr


def as_vector(v, dim=None):
    arr = np.array(v, dtype=np.complex128).reshape(-1)
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f'vector of length {arr.shape[0]}, expected {dim}')
    if not np.all(np.isfinite(arr)):
        raise ValueError('vector has non-finite entries')
    return arr


def max_abs(m):
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def dagger(m):
    return np.conj(np.transpose(m))


def hermitian_residual(m):
    return max_abs(m - dagger(m))


def check_hermitian(m, tol=None):
    tol = get_config().hermitian_tol if tol is None else tol
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f'matrix is not square: {m.shape}')
    res = hermitian_residual(m)
    if not within(res, tol):
        raise NotHermitian(f'‖M − M†‖_max = {res:.3e} exceeds {tol:.1e}')


def is_unitary(u, tol=None):
    tol = get_config().unitary_tol if tol is None else tol
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return within(max_abs(dagger(u) @ u - np.eye(u.shape[0])), tol)


def commutes(x, y, tol=1e-10):
    return within(max_abs(x @ y - y @ x), tol)


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # ascending reals
    eigenvectors: np.ndarray  # unitary, eigenvectors as columns


def _off_norm(a):
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(np.abs(off) ** 2)))


def eigh(m):
    """
    Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
    Args:
        m: square Hermitian matrix
    Returns:
        EigenDecomposition with ascending eigenvalues
    """
    cfg = get_config()
    m = as_matrix(m)
    check_hermitian(m, cfg.hermitian_tol)
    n = m.shape[0]
    a = (m + dagger(m)) / 2
    a = np.array(a, dtype=np.complex128)
    v = np.eye(n, dtype=np.complex128)
    threshold = cfg.jacobi_offdiag_tol * float(np.linalg.norm(m))

    sweeps = 0
    while _off_norm(a) > threshold:
        if sweeps >= cfg.jacobi_max_sweeps:
            raise NoConvergence(f'Jacobi did not converge in {cfg.jacobi_max_sweeps} sweeps '
                                f'(off-diagonal norm {_off_norm(a):.3e})')
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                if theta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # phase-align column q, then a real rotation in the (p, q) plane
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=np.complex128)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = dagger(rot) @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ rot

    w = np.real(np.diag(a)).copy()
    order = np.argsort(w, kind='stable')
    w = w[order]
    v = v[:, order]
    w.setflags(write=False)
    v.setflags(write=False)
    return EigenDecomposition(w, v)


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector: Hermitian, idempotent, with its rank."""
    matrix: np.ndarray
    rank: int

    @property
    def dim(self):
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, m, tol=None):
        """
        Validate a matrix as an orthogonal projector.
        Args:
            m: square matrix
            tol: Hermitian / idempotent tolerance, defaults to projector_tol
        Returns:
            Projector
        """
        tol = get_config().projector_tol if tol is None else tol
        m = np.array(m, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f'projector must be square, got {m.shape}')
        herm = hermitian_residual(m)
        idem = max_abs(m @ m - m)
        if not (within(herm, tol) and within(idem, tol)):
            raise NotAProjector(f'not a projector: hermitian residual {herm:.3e}, '
                                f'idempotency residual {idem:.3e}')
        m = (m + dagger(m)) / 2
        m.setflags(write=False)
        return cls(m, int(round(float(np.trace(m).real))))

    @classmethod
    def from_orthonormal(cls, basis, dim):
        basis = np.asarray(basis, dtype=np.complex128).reshape(dim, -1)
        m = basis @ dagger(basis)
        m = (m + dagger(m)) / 2
        m.setflags(write=False)
        return cls(m, basis.shape[1])

    @classmethod
    def zero(cls, dim):
        m = np.zeros((dim, dim), dtype=np.complex128)
        m.setflags(write=False)
        return cls(m, 0)

    @classmethod
    def identity(cls, dim):
        m = np.eye(dim, dtype=np.complex128)
        m.setflags(write=False)
        return cls(m, dim)

    def range_basis(self):
        """Orthonormal basis of the range, columns."""
        if self.rank == 0:
            return np.zeros((self.dim, 0), dtype=np.complex128)
        u, _, _ = np.linalg.svd(self.matrix)
        return u[:, :self.rank]

    def __repr__(self):
        return f'Projector(dim={self.dim}, rank={self.rank})'


def _same_dim(p, q):
    if p.dim != q.dim:
        raise DimensionMismatch(f'projector dimensions differ: {p.dim} vs {q.dim}')


def leq(p, q, tol=None):
    """p ≤ q in the projection lattice: ‖qp − p‖_max ≤ tol."""
    _same_dim(p, q)
    tol = get_config().compare_tol if tol is None else tol
    return within(max_abs(q.matrix @ p.matrix - p.matrix), tol)


def matrix_leq(x, y, tol=None):
    """Same order test on raw matrices (x need not be a validated projector)."""
    tol = get_config().compare_tol if tol is None else tol
    return within(max_abs(np.asarray(y) @ np.asarray(x) - np.asarray(x)), tol)


def projector_from_basis(vectors, dim=None):
    """
    Orthogonal projector onto the span of some vectors.
    Args:
        vectors: list of length-n complex vectors
        dim: n, required when the list is empty
    Returns:
        Projector with rank equal to the dimension of the span
    """
    vectors = list(vectors)
    if not vectors:
        if dim is None:
            raise DimensionMismatch('dimension is required for an empty basis')
        return Projector.zero(dim)
    n = len(vectors[0]) if dim is None else dim
    cols = np.stack([as_vector(v, n) for v in vectors], axis=1)
    return span_projector(cols, get_config().basis_cutoff)


def span_projector(cols, cutoff=None):
    """Projector onto the column span of a matrix."""
    cutoff = get_config().basis_cutoff if cutoff is None else cutoff
    n = cols.shape[0]
    if cols.shape[1] == 0:
        return Projector.zero(n)
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    keep = s > cutoff * max(1.0, float(s[0]))
    return Projector.from_orthonormal(u[:, keep], n)


def meet(p, q):
    """
    p ∧ q: projector onto range(p) ∩ range(q), from the null space of [(I−p); (I−q)].
    """
    _same_dim(p, q)
    n = p.dim
    if p.rank == 0 or q.rank == 0:
        return Projector.zero(n)
    if p.rank == n:
        return q
    if q.rank == n:
        return p
    eye = np.eye(n)
    stacked = np.vstack([eye - p.matrix, eye - q.matrix])
    _, s, vh = np.linalg.svd(stacked)
    null = s <= get_config().meet_cutoff
    return Projector.from_orthonormal(dagger(vh[null, :]), n)


def join(p, q):
    """p ∨ q: projector onto range(p) + range(q)."""
    _same_dim(p, q)
    n = p.dim
    if p.rank == 0:
        return q
    if q.rank == 0:
        return p
    if p.rank == n or q.rank == n:
        return Projector.identity(n)
    u, s, _ = np.linalg.svd(np.hstack([p.matrix, q.matrix]), full_matrices=False)
    keep = s > get_config().join_cutoff
    return Projector.from_orthonormal(u[:, keep], n)


def join_all(projectors, dim):
    acc = Projector.zero(dim)
    for p in projectors:
        acc = join(acc, p)
    return acc


def meet_all(projectors, dim):
    acc = Projector.identity(dim)
    for p in projectors:
        acc = meet(acc, p)
    return acc


def complement(p):
    m = np.eye(p.dim, dtype=np.complex128) - p.matrix
    m.setflags(write=False)
    return Projector(m, p.dim - p.rank)


def matrix_exp_hermitian(m):
    """
    exp of a Hermitian matrix, V·diag(exp λ)·V†.
    """
    dec = eigh(m)
    v = dec.eigenvectors
    out = (v * np.exp(dec.eigenvalues)) @ dagger(v)
    return (out + dagger(out)) / 2
