"""
Functional calculus of two observables: f(A,B) = J_AB ∘ f⁻¹ on the finite value
set f(σ(A), σ(B)), and ordinary observables extracted along a generating chain.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from gpvm.GPVMConfig import get_config, within
from gpvm.errors import (DimensionMismatch, FunctionUndefined, InvalidChain, InvariantViolation,
                         PreconditionFailed, UnknownValue)
from gpvm.fixtures import pauli_observable, random_unitary, sigma_x, sigma_y
from gpvm.joint import JointObservable, eval_joint
from gpvm.linalg import Projector, join, max_abs, meet
from gpvm.observable import (apply_scalar_function, cluster_sorted, conjugate, observable_from_spectrum,
                             observables_close, spectral_leq)


@dataclass(frozen=True, eq=False)
class ValueTable:
    """
    grid[i, k] = f(λ_i, μ_k); values = the merged ascending value list S;
    index[i, k] = position of grid[i, k] in S.
    """
    grid: np.ndarray
    values: np.ndarray
    index: np.ndarray

    def __len__(self):
        return len(self.values)

    def value_indices(self, reals):
        """Indices in S of the given reals, matched within the merge tolerance."""
        tol = merge_tolerance(self.values)
        out = []
        for v in reals:
            hits = np.flatnonzero(np.abs(self.values - v) <= tol)
            if hits.size == 0:
                raise UnknownValue(f'{v} is not a value of the table {self.values.tolist()}')
            out.append(int(hits[0]))
        return out


def merge_tolerance(values):
    values = np.asarray(values, dtype=float)
    spread = float(values.max() - values.min()) if values.size else 0.0
    return get_config().value_merge_rel * (1.0 + spread)


def build_value_table(a, b, f):
    """
    Tabulate f on σ(A)×σ(B) and merge values that collide within the merge tolerance.
    Args:
        a, b: Observables
        f: callable (x, y) -> float, e.g. a FuncExpr
    Returns:
        ValueTable
    """
    n, m = len(a), len(b)
    grid = np.empty((n, m), dtype=float)
    for i, lam in enumerate(a.eigenvalues):
        for k, mu in enumerate(b.eigenvalues):
            grid[i, k] = float(f(float(lam), float(mu)))
    if not np.all(np.isfinite(grid)):
        bad = [(float(a.eigenvalues[i]), float(b.eigenvalues[k])) for i, k in np.argwhere(~np.isfinite(grid))]
        raise FunctionUndefined(f'function is not finite at grid points {bad}')
    flat = grid.reshape(-1)
    order = np.argsort(flat, kind='stable')
    groups = cluster_sorted(flat[order], merge_tolerance(flat))
    values = np.empty(len(groups))
    index = np.empty(n * m, dtype=int)
    for vi, group in enumerate(groups):
        members = order[group]
        values[vi] = float(np.mean(flat[members]))
        index[members] = vi
    grid.setflags(write=False)
    values.setflags(write=False)
    index = index.reshape(n, m)
    index.setflags(write=False)
    return ValueTable(grid, values, index)


@dataclass(frozen=True, eq=False)
class GeneralizedObservable:
    """f(A,B): the gPVM J_AB ∘ f⁻¹ on subsets of the value list."""
    joint: JointObservable
    table: ValueTable
    f: object = None

    @property
    def a(self):
        return self.joint.a

    @property
    def b(self):
        return self.joint.b

    @property
    def values(self):
        return self.table.values

    def preimage(self, subset):
        subset = sorted(set(int(v) for v in subset))
        for v in subset:
            if not 0 <= v < len(self.table):
                raise UnknownValue(f'value index {v} outside 0..{len(self.table) - 1}')
        return self.joint.region(np.isin(self.table.index, subset))

    def __call__(self, subset):
        return eval_generalized(self, subset)


def generalized(a, b, f):
    """Build f(A,B) for observables a, b and a binary function f."""
    if a.dim != b.dim:
        raise DimensionMismatch(f'observables act on different dimensions: {a.dim} vs {b.dim}')
    return GeneralizedObservable(JointObservable(a, b), build_value_table(a, b, f), f)


def eval_generalized(g, subset):
    """
    f(A,B)(R) = J_AB(f⁻¹(R)).
    Args:
        g: GeneralizedObservable
        subset: value indices into g.values
    Returns:
        Projector
    """
    return eval_joint(g.joint, g.preimage(subset))


def eval_interval(g, interval):
    """f(A,B) on the values lying in a real interval."""
    tol = merge_tolerance(g.values)
    return eval_generalized(g, [i for i, v in enumerate(g.values) if interval.contains(v, tol)])


def is_pvm(g):
    """Whether the singleton values of f(A,B) sum to I."""
    total = sum((eval_generalized(g, [v]).matrix for v in range(len(g.values))),
                np.zeros((g.joint.dim, g.joint.dim), dtype=np.complex128))
    return within(max_abs(total - np.eye(g.joint.dim)), get_config().compare_tol)


@dataclass(frozen=True)
class GeneratingChainOrder:
    """A total order v_1 ≺ … ≺ v_N on the value list, as a permutation of its indices."""
    permutation: Tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(p) for p in self.permutation)
        if sorted(perm) != list(range(len(perm))):
            raise InvalidChain(f'not a permutation of 0..{len(perm) - 1}: {list(perm)}')
        object.__setattr__(self, 'permutation', perm)

    @classmethod
    def ascending(cls, n):
        return cls(tuple(range(n)))

    @classmethod
    def descending(cls, n):
        return cls(tuple(reversed(range(n))))

    def is_ascending(self):
        return self.permutation == tuple(range(len(self.permutation)))

    def prefixes(self):
        for k in range(len(self.permutation) + 1):
            yield self.permutation[:k]

    def __len__(self):
        return len(self.permutation)


def _resolve_order(g, order):
    if order is None:
        return GeneratingChainOrder.ascending(len(g.values))
    if not isinstance(order, GeneratingChainOrder):
        order = GeneratingChainOrder(tuple(order))
    if len(order) != len(g.values):
        raise InvalidChain(f'chain orders {len(order)} values, the table has {len(g.values)}')
    return order


def extract_pvm(g, order=None):
    """
    The unique observable agreeing with f(A,B) on every prefix of the chain.
    Args:
        g: GeneralizedObservable
        order: GeneratingChainOrder, ascending by default
    Returns:
        Observable whose eigenvalues are the values with non-zero increments
    """
    order = _resolve_order(g, order)
    dim = g.joint.dim
    previous = np.zeros((dim, dim), dtype=np.complex128)
    values, projectors = [], []
    for k, v in enumerate(order.permutation):
        current = eval_generalized(g, order.permutation[:k + 1]).matrix
        increment = current - previous
        previous = current
        try:
            proj = Projector.from_matrix(increment, tol=get_config().compare_tol)
        except Exception as e:
            raise InvariantViolation(f'chain increment at value {g.values[v]} is not a projector: {e}') from e
        if proj.rank:
            values.append(float(g.values[v]))
            projectors.append(proj)
    return observable_from_spectrum(values, projectors)


def prefix_agreement(g, order, obs):
    """extract_pvm's output reproduces f(A,B) on every chain prefix."""
    order = _resolve_order(g, order)
    tol = get_config().compare_tol
    for prefix in order.prefixes():
        wanted = eval_generalized(g, prefix).matrix
        chosen = [g.values[v] for v in prefix]
        got = np.zeros_like(wanted)
        for lam, p in zip(obs.eigenvalues, obs.projectors):
            if any(abs(lam - c) <= merge_tolerance(g.values) for c in chosen):
                got = got + p.matrix
        if not within(max_abs(got - wanted), tol):
            return False
    return True


def _add(x, y):
    return x + y


def _mul(x, y):
    return x * y


def dot_plus(a, b, order=None):
    """A∔B: the addition table extracted along the chain (ascending by default)."""
    return extract_pvm(generalized(a, b, _add), order)


def dot_times(a, b, order=None):
    """A⋆×B: the multiplication table extracted along the chain."""
    return extract_pvm(generalized(a, b, _mul), order)


def dot_plus_spectral_family(a, b, lam):
    """
    E_λ of A∔B as ⋁_{α+β=λ} E^A_α ∧ E^B_β over α ∈ σ(A), with E^B taken at λ − α.
    """
    acc = Projector.zero(a.dim)
    for alpha in a.eigenvalues:
        term = meet(a.spectral_projector(alpha), b.spectral_projector(lam - alpha))
        acc = join(acc, term)
    return acc


def _strictly_increasing_on(g, values):
    images = np.array([g(float(v)) for v in values])
    diffs = np.diff(images)
    return bool(np.all(diffs > 0)), bool(np.all(diffs >= 0))


def check_composition(g_outer, f, a, b, order=None):
    """
    (g∘f)_E(A,B) = g(f_E(A,B)) for monotone increasing g.
    A strictly increasing g carries any chain on the f-values to the g∘f-values;
    a g that is only non-decreasing is accepted with the ascending chain.
    """
    gf = generalized(a, b, f)
    order = _resolve_order(gf, order)
    strict, monotone = _strictly_increasing_on(g_outer, gf.values)
    if not monotone:
        raise PreconditionFailed('composition check needs g increasing on the value list')
    if not strict and not order.is_ascending():
        raise PreconditionFailed('g collides values; only the ascending chain is preserved')
    rhs = apply_scalar_function(extract_pvm(gf, order), g_outer)

    hf = generalized(a, b, lambda x, y: g_outer(f(x, y)))
    if strict:
        # the same permutation, read on the transported values
        transported = [hf.table.value_indices([g_outer(float(gf.values[v]))])[0] for v in order.permutation]
        h_order = GeneratingChainOrder(tuple(transported))
    else:
        h_order = GeneratingChainOrder.ascending(len(hf.values))
    lhs = extract_pvm(hf, h_order)
    return observables_close(lhs, rhs, get_config().observable_tol)


def check_right_composition(f, g1, g2, a, b, order=None):
    """
    h_E(A,B) = f_E(g1(A), g2(B)) with h(x, y) = f(g1(x), g2(y)).
    Both sides tabulate the same value list, so the same permutation applies to both.
    """
    lhs_g = generalized(a, b, lambda x, y: f(g1(x), g2(y)))
    rhs_g = generalized(apply_scalar_function(a, g1), apply_scalar_function(b, g2), f)
    if len(lhs_g.values) != len(rhs_g.values) or not within(max_abs(lhs_g.values - rhs_g.values),
                                                             get_config().observable_tol):
        return False
    lhs = extract_pvm(lhs_g, order)
    rhs = extract_pvm(rhs_g, order)
    return observables_close(lhs, rhs, get_config().observable_tol)


def check_spectral_monotonicity(a, b, c):
    """A ⊑ B implies A∔C ⊑ B∔C (ascending chain)."""
    if not spectral_leq(a, b):
        raise PreconditionFailed('first observable is not below the second in the spectral order')
    return spectral_leq(dot_plus(a, c), dot_plus(b, c))


@dataclass
class FEReport:
    spectrum_contained: bool
    unitary_covariant: bool
    eigenstate_law: bool
    details: List[str] = field(default_factory=list)

    @property
    def passed(self):
        return self.spectrum_contained and self.unitary_covariant and self.eigenstate_law


def property_suite_fE(a, b, f, order=None, seed=0):
    """
    Check, on one instance, that f_E(A,B) has its spectrum inside f(σ(A), σ(B)),
    commutes with unitary conjugation, and acts as f(a, b) on common eigenvectors.
    """
    cfg = get_config()
    g = generalized(a, b, f)
    order = _resolve_order(g, order)
    out = extract_pvm(g, order)
    details = []

    tol = max(cfg.observable_tol, merge_tolerance(g.values))
    contained = all(np.min(np.abs(g.table.grid - lam)) <= tol for lam in out.eigenvalues)
    if not contained:
        details.append(f'spectrum {out.eigenvalues.tolist()} not inside {sorted(set(g.table.grid.reshape(-1)))}')

    rng = np.random.Generator(np.random.PCG64(seed))
    u = random_unitary(a.dim, rng)
    rotated = generalized(conjugate(a, u), conjugate(b, u), f)
    if len(rotated.values) == len(g.values):
        covariant = observables_close(extract_pvm(rotated, order), conjugate(out, u), cfg.observable_tol)
    else:
        covariant = False
    if not covariant:
        details.append('f_E(UAU†, UBU†) ≠ U f_E(A,B) U†')

    law = True
    m = out.matrix
    for i in range(len(a)):
        for k in range(len(b)):
            common = meet(a.projectors[i], b.projectors[k])
            if not common.rank:
                continue
            basis = common.range_basis()
            value = g.table.grid[i, k]
            if not within(max_abs(m @ basis - value * basis), cfg.observable_tol):
                law = False
                details.append(f'eigenstate law fails at ({a.eigenvalues[i]}, {b.eigenvalues[k]})')
    return FEReport(bool(contained), bool(covariant), law, details)


def pauli_dot_plus(alpha, a, beta, b):
    """
    Closed form of A∔B for A = αI + a·σ, B = βI + b·σ with non-colinear a, b:
    (α+β)I + (|a|−|b|)â·σ when |a| ≥ |b|, symmetrically otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na >= nb:
        return pauli_observable(alpha + beta, (na - nb) * a / na)
    return pauli_observable(alpha + beta, (nb - na) * b / nb)


@dataclass
class NonassociativityRecord:
    norms: Tuple[float, float, float]
    left_first: np.ndarray  # spectrum of (A∔B)∔C
    right_first: np.ndarray  # spectrum of A∔(B∔C)
    left_predicted: np.ndarray
    right_predicted: np.ndarray

    @property
    def matches(self):
        tol = get_config().observable_tol
        return (len(self.left_first) == len(self.left_predicted)
                and len(self.right_first) == len(self.right_predicted)
                and within(max_abs(self.left_first - self.left_predicted), tol)
                and within(max_abs(self.right_first - self.right_predicted), tol))


def _pm(x):
    x = abs(x)
    if x <= get_config().cluster_abs:
        return np.array([0.0])
    return np.array([-x, x])


def nonassociativity_demo(a_norm=3.0, b_norm=1.0, c_norm=1.0, axes=None):
    """
    Spectra of (A∔B)∔C and A∔(B∔C) for traceless qubit observables along mutually
    orthogonal axes (x, y, z unless given) with the requested lengths.
    """
    if axes is None:
        axes = np.eye(3)
    a = pauli_observable(0.0, a_norm * np.asarray(axes[0], dtype=float))
    b = pauli_observable(0.0, b_norm * np.asarray(axes[1], dtype=float))
    c = pauli_observable(0.0, c_norm * np.asarray(axes[2], dtype=float))
    left = dot_plus(dot_plus(a, b), c)
    right = dot_plus(a, dot_plus(b, c))
    return NonassociativityRecord(
        norms=(float(a_norm), float(b_norm), float(c_norm)),
        left_first=np.array(left.eigenvalues),
        right_first=np.array(right.eigenvalues),
        left_predicted=_pm(abs(a_norm - b_norm) - c_norm),
        right_predicted=_pm(a_norm - abs(b_norm - c_norm)),
    )


@dataclass
class NonChainObstruction:
    values: Tuple[float, float]
    projectors: Dict[float, Projector]

    @property
    def obstructed(self):
        return all(p.rank == 0 for p in self.projectors.values())


def non_chain_obstruction(alpha=1.0, beta=2.0):
    """
    σ_x, σ_y with f = α on (1,1), (−1,−1) and β on the other two cells: both value
    sets map to 0 while together they map to I, so no PVM extends f(A,B) on the
    generating family {{α}, {β}}.
    """
    table = {(-1.0, -1.0): alpha, (1.0, 1.0): alpha, (-1.0, 1.0): beta, (1.0, -1.0): beta}
    g = generalized(sigma_x(), sigma_y(), lambda x, y: table[(round(x), round(y))])
    projectors = {float(v): eval_generalized(g, [i]) for i, v in enumerate(g.values)}
    return NonChainObstruction((alpha, beta), projectors)


def spectral_family_matches(a, b, out=None):
    """dot_plus agrees with ⋁_{α+β=λ} E^A_α ∧ E^B_β at every breakpoint λ."""
    out = dot_plus(a, b) if out is None else out
    breakpoints = sorted({float(x + y) for x in a.eigenvalues for y in b.eigenvalues})
    for lam in breakpoints:
        tol = merge_tolerance(breakpoints)
        lhs = out.spectral_projector(lam + tol)
        rhs = dot_plus_spectral_family(a, b, lam + tol)
        if not within(max_abs(lhs.matrix - rhs.matrix), get_config().compare_tol):
            return False
    return True
