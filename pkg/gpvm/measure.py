"""
Unselected joint measurements: ρ → Σ_i J(Q_i) ρ J(Q_i), with the defect J⁰ = I − Σ_i J(Q_i)
carrying the probability of no outcome, and its realization by a unitary on H⊗A.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas as pd

from gpvm.GPVMConfig import get_config, within
from gpvm.errors import ChannelInvalid, DimensionMismatch, InvariantViolation, NotHermitian, NotNormalized
from gpvm.joint import defect as joint_defect
from gpvm.joint import eval_joint
from gpvm.linalg import Projector, as_matrix, as_vector, dagger, eigh, hermitian_residual, max_abs
from gpvm.utils import RNG_ALGORITHM, make_rng

NO_OUTCOME = 'none'


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive semidefinite, trace ≤ 1 (sub-normalized states allowed)."""
    matrix: np.ndarray

    def __post_init__(self):
        tol = get_config().density_tol
        m = np.array(as_matrix(self.matrix))
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f'density matrix must be square, got {m.shape}')
        res = hermitian_residual(m)
        if not within(res, tol):
            raise NotHermitian(f'density matrix is not Hermitian: residual {res:.3e}')
        m = (m + dagger(m)) / 2
        low = float(eigh(m).eigenvalues[0])
        if not within(-low, tol):
            raise InvariantViolation(f'density matrix has negative eigenvalue {low:.3e}')
        tr = float(np.trace(m).real)
        if not within(tr - 1.0, tol):
            raise NotNormalized(f'density matrix trace {tr:.12g} exceeds 1')
        m.setflags(write=False)
        object.__setattr__(self, 'matrix', m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def trace(self):
        return float(np.trace(self.matrix).real)

    @classmethod
    def from_state(cls, psi):
        psi = as_vector(psi)
        return cls(np.outer(psi, np.conj(psi)))

    @classmethod
    def maximally_mixed(cls, dim):
        return cls(np.eye(dim, dtype=np.complex128) / dim)


@dataclass(frozen=True, eq=False)
class MeasurementChannel:
    kraus: Tuple[Projector, ...]
    defect: Projector
    labels: Tuple[str, ...]

    def __post_init__(self):
        tol = get_config().compare_tol
        if len(self.kraus) != len(self.labels):
            raise ChannelInvalid(f'{len(self.kraus)} Kraus projectors for {len(self.labels)} labels')
        n = self.defect.dim
        if any(k.dim != n for k in self.kraus):
            raise ChannelInvalid('Kraus projectors of different dimensions')
        for x in range(len(self.kraus)):
            for y in range(x + 1, len(self.kraus)):
                if not within(max_abs(self.kraus[x].matrix @ self.kraus[y].matrix), tol):
                    raise ChannelInvalid(f'Kraus projectors {self.labels[x]} and {self.labels[y]} are not orthogonal')
        total = sum((k.matrix for k in self.kraus), np.zeros((n, n), dtype=np.complex128))
        if not within(max_abs(np.eye(n) - total - self.defect.matrix), tol):
            raise ChannelInvalid('defect is not I − Σ Kraus')

    @property
    def dim(self):
        return self.defect.dim

    @property
    def trace_preserving(self):
        return self.defect.rank == 0


def build_channel(j, p):
    """
    Kraus projectors J(Q_i) of a grid partition plus the defect projector.
    """
    kraus = tuple(eval_joint(j, q) for q in p.regions)
    return MeasurementChannel(kraus, joint_defect(j, p), tuple(p.labels))


def _check_dims(c, rho):
    if rho.dim != c.dim:
        raise DimensionMismatch(f'state of dimension {rho.dim} for a channel on dimension {c.dim}')


def apply_unselected(c, rho):
    """ρ → Σ_i K_i ρ K_i."""
    _check_dims(c, rho)
    out = np.zeros((c.dim, c.dim), dtype=np.complex128)
    for k in c.kraus:
        out += k.matrix @ rho.matrix @ k.matrix
    return DensityMatrix(out)


@dataclass
class OutcomeProbabilities:
    labels: Tuple[str, ...]
    probabilities: np.ndarray
    none: float

    def to_frame(self):
        return pd.DataFrame({'label': list(self.labels) + [NO_OUTCOME],
                             'probability': list(self.probabilities) + [self.none]})

    def vector(self):
        return np.append(self.probabilities, self.none)


def outcome_probabilities(c, rho):
    """
    p_i = Tr(K_i ρ) and the no-outcome probability Tr(J⁰ ρ).
    """
    _check_dims(c, rho)
    if not within(abs(rho.trace - 1.0), get_config().norm_tol):
        raise NotNormalized(f'Tr ρ = {rho.trace:.12g}')
    probs = np.array([float(np.trace(k.matrix @ rho.matrix).real) for k in c.kraus])
    none = float(np.trace(c.defect.matrix @ rho.matrix).real)
    return OutcomeProbabilities(tuple(c.labels), probs, none)


def realize_ancilla(c):
    """
    Unitary U on H⊗A (dim·(n+1), ancilla index fastest) with
    U(ψ⊗|0⟩) = J⁰ψ⊗|0⟩ + Σ_i K_iψ⊗|i⟩. The remaining columns complete the isometry
    by Gram-Schmidt over the standard basis, in index order.
    """
    n = c.dim
    anc = len(c.kraus) + 1
    total = n * anc
    ops = (c.defect,) + tuple(c.kraus)
    iso = np.zeros((total, n), dtype=np.complex128)
    for i, op in enumerate(ops):
        e_i = np.zeros(anc)
        e_i[i] = 1.0
        iso += np.kron(op.matrix, e_i.reshape(-1, 1))
    if not within(max_abs(dagger(iso) @ iso - np.eye(n)), get_config().unitary_tol):
        raise ChannelInvalid('Kraus projectors and defect do not form an isometry')

    basis = [iso[:, h] for h in range(n)]
    extra = []
    for e in np.eye(total, dtype=np.complex128):
        if len(basis) + len(extra) == total:
            break
        v = e.copy()
        for _ in range(2):
            for b in basis + extra:
                v = v - np.vdot(b, v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-10:
            extra.append(v / norm)

    u = np.zeros((total, total), dtype=np.complex128)
    block0 = [h * anc for h in range(n)]
    rest = [idx for idx in range(total) if idx % anc != 0]
    u[:, block0] = iso
    u[:, rest] = np.stack(extra, axis=1) if extra else np.zeros((total, 0))
    return u


def ancilla_composite(c, rho, u=None):
    """
    Embed ρ⊗|0⟩⟨0|, conjugate by U, project onto the ancilla states |i⟩ (i ≥ 1),
    trace out the ancilla.
    """
    _check_dims(c, rho)
    u = realize_ancilla(c) if u is None else u
    n = c.dim
    anc = len(c.kraus) + 1
    zero = np.zeros((anc, anc))
    zero[0, 0] = 1.0
    evolved = u @ np.kron(rho.matrix, zero) @ dagger(u)
    outcomes = np.eye(anc)
    outcomes[0, 0] = 0.0
    proj = np.kron(np.eye(n), outcomes)
    kept = proj @ evolved @ proj
    return np.einsum('aibi->ab', kept.reshape(n, anc, n, anc))


@dataclass
class Histogram:
    labels: Tuple[str, ...]  # outcome labels then "none"
    counts: np.ndarray
    shots: int
    seed: int
    algorithm: str = RNG_ALGORITHM

    @property
    def frequencies(self):
        return self.counts / self.shots

    def to_frame(self):
        return pd.DataFrame({'label': list(self.labels), 'count': self.counts.astype(int),
                             'frequency': self.frequencies})

    def to_csv(self):
        return self.to_frame().to_csv(index=False, float_format='%.6f', lineterminator='\n')


def sample_outcomes(c, rho, shots, seed):
    """
    Inverse-CDF sampling of outcome labels (no-outcome last) from a seeded PCG64 generator.
    Args:
        c: MeasurementChannel
        rho: normalized DensityMatrix
        shots: number of samples, ≥ 1
        seed: integer seed
    Returns:
        Histogram
    """
    if shots < 1:
        raise ValueError(f'shots must be positive, got {shots}')
    probs = np.clip(outcome_probabilities(c, rho).vector(), 0.0, None)
    cdf = np.cumsum(probs)
    cdf = cdf / cdf[-1]
    rng = make_rng(seed)
    draws = np.searchsorted(cdf, rng.random(shots), side='right')
    draws = np.minimum(draws, len(probs) - 1)
    counts = np.bincount(draws, minlength=len(probs))
    return Histogram(tuple(c.labels) + (NO_OUTCOME,), counts, int(shots), int(seed))
