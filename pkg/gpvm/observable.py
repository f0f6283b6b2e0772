"""
Observables as finite PVMs: eigenvalues with pairwise-orthogonal eigenprojectors.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from gpvm.GPVMConfig import get_config, within
from gpvm.errors import (DimensionMismatch, FunctionUndefined, IndexOutOfRange, InvalidPartition,
                         InvariantViolation, NotNormalized, NotUnitary, UnknownValue)
from gpvm.linalg import (Projector, as_matrix, as_vector, check_hermitian, dagger, eigh, is_unitary,
                         leq, max_abs)


def cluster_tolerance(values):
    cfg = get_config()
    values = np.asarray(values, dtype=float)
    spread = float(values.max() - values.min()) if values.size else 0.0
    return max(cfg.cluster_abs, cfg.cluster_rel * spread)


def cluster_sorted(values, tol):
    """
    Single-linkage grouping of an ascending list: a gap ≤ tol keeps two neighbours together.
    Returns:
        list of index lists
    """
    groups = []
    for i, v in enumerate(values):
        if groups and v - values[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


@dataclass(frozen=True, eq=False)
class Observable:
    """
    Diagonalizable PVM A = Σ λ_i P_i with strictly ascending λ_i.
    """
    eigenvalues: np.ndarray
    projectors: Tuple[Projector, ...]

    def __post_init__(self):
        cfg = get_config()
        vals = np.array(self.eigenvalues, dtype=float).reshape(-1)
        projectors = tuple(self.projectors)
        if len(vals) != len(projectors) or not projectors:
            raise InvariantViolation('an observable needs one projector per eigenvalue')
        n = projectors[0].dim
        if any(p.dim != n for p in projectors):
            raise DimensionMismatch('eigenprojectors have different dimensions')
        if len(vals) > 1 and np.any(np.diff(vals) <= cluster_tolerance(vals)):
            raise InvariantViolation(f'eigenvalues not separated: {vals.tolist()}')
        if any(p.rank < 1 for p in projectors):
            raise InvariantViolation('zero eigenprojector')
        total = sum(p.matrix for p in projectors)
        if not within(max_abs(total - np.eye(n)), cfg.compare_tol):
            raise InvariantViolation('eigenprojectors do not sum to the identity')
        for i in range(len(projectors)):
            for j in range(i + 1, len(projectors)):
                if not within(max_abs(projectors[i].matrix @ projectors[j].matrix), cfg.compare_tol):
                    raise InvariantViolation(f'eigenprojectors {i} and {j} are not orthogonal')
        vals.setflags(write=False)
        object.__setattr__(self, 'eigenvalues', vals)
        object.__setattr__(self, 'projectors', projectors)

    @property
    def dim(self):
        return self.projectors[0].dim

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def matrix(self):
        return sum(lam * p.matrix for lam, p in zip(self.eigenvalues, self.projectors))

    def expectation(self, psi):
        psi = as_vector(psi, self.dim)
        return float(np.real(np.vdot(psi, self.matrix @ psi)))

    def variance(self, psi):
        psi = as_vector(psi, self.dim)
        m = self.matrix
        mean = np.real(np.vdot(psi, m @ psi))
        second = np.real(np.vdot(psi, m @ (m @ psi)))
        return max(0.0, float(second - mean * mean))

    def spectral_projector(self, lam):
        """E_λ = A((−∞, λ])."""
        sel = [i for i, v in enumerate(self.eigenvalues) if v <= lam]
        return evaluate(self, sel)

    def __repr__(self):
        ranks = [p.rank for p in self.projectors]
        return f'Observable(eigenvalues={self.eigenvalues.tolist()}, ranks={ranks})'


@dataclass(frozen=True)
class ValueSet:
    """Subset of an observable's eigenvalues, by index."""
    indices: frozenset

    @classmethod
    def of(cls, indices):
        if isinstance(indices, ValueSet):
            return indices
        idx = list(indices)
        if len(set(idx)) != len(idx):
            raise IndexOutOfRange(f'repeated indices in {idx}')
        return cls(frozenset(int(i) for i in idx))

    @classmethod
    def full(cls, a):
        return cls(frozenset(range(len(a))))

    @classmethod
    def from_values(cls, a, values):
        """
        Map real values to eigenvalue indices within the clustering tolerance.
        """
        tol = cluster_tolerance(a.eigenvalues)
        out = set()
        for v in values:
            hits = np.flatnonzero(np.abs(a.eigenvalues - v) <= tol)
            if hits.size == 0:
                raise UnknownValue(f'{v} is not an eigenvalue of {a!r}')
            out.add(int(hits[0]))
        return cls(frozenset(out))

    def __iter__(self):
        return iter(sorted(self.indices))

    def __len__(self):
        return len(self.indices)


def observable_from_spectrum(values, projectors):
    """
    Observable from (value, projector) pairs in any order. Values closer than the
    cluster tolerance are merged and their projectors summed.
    """
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise FunctionUndefined(f'non-finite eigenvalue in {values.tolist()}')
    order = np.argsort(values, kind='stable')
    sorted_vals = values[order]
    tol = cluster_tolerance(sorted_vals)
    merged_vals, merged_projs = [], []
    for group in cluster_sorted(sorted_vals, tol):
        members = [projectors[order[g]] for g in group]
        merged_vals.append(float(np.mean(sorted_vals[group])))
        if len(members) == 1:
            merged_projs.append(members[0])
        else:
            merged_projs.append(Projector.from_matrix(sum(p.matrix for p in members)))
    return Observable(np.array(merged_vals), tuple(merged_projs))


def observable_from_matrix(m):
    """
    Spectral decomposition of a Hermitian matrix into an Observable.
    Args:
        m: Hermitian matrix
    Returns:
        Observable with clustered eigenvalues
    """
    m = as_matrix(m)
    check_hermitian(m)
    dec = eigh(m)
    vals, vecs = dec.eigenvalues, dec.eigenvectors
    groups = cluster_sorted(vals, cluster_tolerance(vals))
    eigenvalues = np.array([float(np.mean(vals[g])) for g in groups])
    projectors = tuple(Projector.from_orthonormal(vecs[:, g], m.shape[0]) for g in groups)
    return Observable(eigenvalues, projectors)


def evaluate(a, r):
    """
    α_A(R) = Σ_{λ_i ∈ R} P_i.
    Args:
        a: Observable
        r: ValueSet or iterable of eigenvalue indices
    Returns:
        Projector
    """
    r = ValueSet.of(r)
    for i in r.indices:
        if not 0 <= i < len(a):
            raise IndexOutOfRange(f'eigenvalue index {i} outside 0..{len(a) - 1}')
    if not r.indices:
        return Projector.zero(a.dim)
    if len(r.indices) == len(a):
        return Projector.identity(a.dim)
    if len(r.indices) == 1:
        return a.projectors[next(iter(r.indices))]
    m = sum(a.projectors[i].matrix for i in r.indices)
    m.setflags(write=False)
    return Projector(m, sum(a.projectors[i].rank for i in r.indices))


def check_normalized(psi, dim):
    psi = as_vector(psi, dim)
    norm = float(np.linalg.norm(psi))
    if not within(abs(norm - 1.0), get_config().norm_tol):
        raise NotNormalized(f'‖ψ‖ = {norm:.12g}')
    return psi


def possible_outcomes(a, psi):
    """M_A^ψ: eigenvalue indices with non-negligible amplitude in ψ."""
    psi = check_normalized(psi, a.dim)
    tol = get_config().outcome_tol
    hits = [i for i, p in enumerate(a.projectors) if np.linalg.norm(p.matrix @ psi) > tol]
    return ValueSet(frozenset(hits))


@dataclass(frozen=True)
class OutcomePartition:
    blocks: Tuple[frozenset, ...]
    labels: Tuple[str, ...]

    @classmethod
    def from_blocks(cls, blocks, n, labels=None):
        """
        Args:
            blocks: iterables of eigenvalue indices
            n: number of eigenvalues being partitioned
            labels: one label per block, defaults to "0", "1", ...
        """
        blocks = tuple(frozenset(int(i) for i in b) for b in blocks)
        labels = tuple(str(x) for x in labels) if labels is not None else tuple(str(i) for i in range(len(blocks)))
        if len(labels) != len(blocks):
            raise InvalidPartition(f'{len(labels)} labels for {len(blocks)} blocks')
        if len(set(labels)) != len(labels):
            raise InvalidPartition('labels must be distinct')
        seen = set()
        for b in blocks:
            if not b:
                raise InvalidPartition('empty block')
            if b & seen:
                raise InvalidPartition(f'blocks overlap on {sorted(b & seen)}')
            if any(i < 0 or i >= n for i in b):
                raise InvalidPartition(f'block {sorted(b)} has indices outside 0..{n - 1}')
            seen |= b
        if len(seen) != n:
            raise InvalidPartition(f'blocks miss indices {sorted(set(range(n)) - seen)}')
        return cls(blocks, labels)

    @classmethod
    def discrete(cls, n):
        return cls.from_blocks([[i] for i in range(n)], n)

    @classmethod
    def trivial(cls, n):
        return cls.from_blocks([range(n)], n, labels=['all'])


@dataclass(frozen=True, eq=False)
class CoarseObservable:
    """
    Ã: a PVM on block labels. The wrapped observable takes the value k on block k,
    so it can feed a joint observable directly.
    """
    labels: Tuple[str, ...]
    observable: Observable
    partition: OutcomePartition

    def evaluate(self, labels):
        idx = [self.labels.index(x) for x in labels]
        return evaluate(self.observable, idx)


def coarse_grain(a, p):
    """
    Ã(Q) = A(⋃Q) for a partition of σ_p(A).
    """
    if sum(len(b) for b in p.blocks) != len(a) or max(max(b) for b in p.blocks) >= len(a):
        raise InvalidPartition(f'partition does not cover the {len(a)} eigenvalues')
    projectors = tuple(evaluate(a, b) for b in p.blocks)
    coarse = Observable(np.arange(len(p.blocks), dtype=float), projectors)
    return CoarseObservable(p.labels, coarse, p)


def apply_scalar_function(a, g):
    """
    g(A) = Σ g(λ_i) P_i, merging projectors whose values collide.
    """
    values = np.array([g(float(lam)) for lam in a.eigenvalues], dtype=float)
    if not np.all(np.isfinite(values)):
        bad = [float(lam) for lam, v in zip(a.eigenvalues, values) if not np.isfinite(v)]
        raise FunctionUndefined(f'function undefined at eigenvalues {bad}')
    return observable_from_spectrum(values, a.projectors)


def spectral_leq(a, b):
    """
    A ⊑ B: for every λ, E^B_λ ≤ E^A_λ.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f'dimensions differ: {a.dim} vs {b.dim}')
    for lam in np.union1d(a.eigenvalues, b.eigenvalues):
        if not leq(b.spectral_projector(lam), a.spectral_projector(lam)):
            return False
    return True


def conjugate(a, u):
    """U A U†: same eigenvalues, projectors U P_i U†."""
    u = as_matrix(u)
    if u.shape != (a.dim, a.dim):
        raise DimensionMismatch(f'unitary of shape {u.shape} for dimension {a.dim}')
    if not is_unitary(u):
        raise NotUnitary(f'‖U†U − I‖_max = {max_abs(dagger(u) @ u - np.eye(a.dim)):.3e}')
    projectors = tuple(Projector.from_matrix(u @ p.matrix @ dagger(u)) for p in a.projectors)
    return Observable(a.eigenvalues.copy(), projectors)


def observables_close(x, y, tol=None):
    """Same spectrum and same eigenprojectors, to tol."""
    tol = get_config().observable_tol if tol is None else tol
    if x.dim != y.dim or len(x) != len(y):
        return False
    if not within(max_abs(x.eigenvalues - y.eigenvalues), tol):
        return False
    return all(within(max_abs(p.matrix - q.matrix), tol) for p, q in zip(x.projectors, y.projectors))
