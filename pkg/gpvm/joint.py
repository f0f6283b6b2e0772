"""
The generalized joint observable

    J_AB(Q) = ⋁_{R1×R2 ⊆ Q} A(R1) ∧ B(R2)

evaluated on grid regions Q ⊆ σ(A)×σ(B), plus its verification surface.
"""
import math
import threading
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from gpvm.GPVMConfig import get_config, within
from gpvm.biclique import all_rectangles, maximal_rectangles
from gpvm.errors import (DimensionMismatch, GridMismatch, InvalidPartition, InvariantViolation,
                         MalformedRegion)
from gpvm.linalg import (Projector, commutes, dagger, join, leq, matrix_leq, max_abs, meet, span_projector)
from gpvm.observable import (ValueSet, check_normalized, cluster_tolerance, coarse_grain, conjugate, evaluate,
                             possible_outcomes)


@dataclass(frozen=True)
class Interval:
    """Real interval; None endpoints are infinite."""
    lo: Optional[float] = None
    hi: Optional[float] = None
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        for v in (self.lo, self.hi):
            if v is not None and math.isnan(v):
                raise MalformedRegion('interval endpoint is NaN')
        if self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise MalformedRegion(f'interval has lo {self.lo} > hi {self.hi}')

    @classmethod
    def real_line(cls):
        return cls(None, None, False, False)

    def contains(self, x, tol=0.0):
        if self.lo is not None:
            if x < self.lo - tol:
                return False
            if abs(x - self.lo) <= tol and not self.lo_closed:
                return False
        if self.hi is not None:
            if x > self.hi + tol:
                return False
            if abs(x - self.hi) <= tol and not self.hi_closed:
                return False
        return True


@dataclass(frozen=True)
class Rect:
    x: Interval
    y: Interval


@dataclass(frozen=True)
class BorelRegion:
    """Union of interval rectangles and explicit value points in the plane."""
    rects: Tuple[Rect, ...] = ()
    points: Tuple[Tuple[float, float], ...] = ()

    @classmethod
    def plane(cls):
        return cls(rects=(Rect(Interval.real_line(), Interval.real_line()),))


@dataclass(frozen=True, eq=False)
class GridRegion:
    """Subset of σ(A)×σ(B) as an n×m boolean mask."""
    a_values: np.ndarray
    b_values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool)
        if mask.shape != (len(self.a_values), len(self.b_values)):
            raise GridMismatch(f'mask shape {mask.shape} does not match the '
                               f'{len(self.a_values)}×{len(self.b_values)} grid')
        mask.setflags(write=False)
        object.__setattr__(self, 'mask', mask)

    @property
    def shape(self):
        return self.mask.shape

    @property
    def key(self):
        return self.mask.shape, self.mask.tobytes()

    def _with(self, mask):
        return GridRegion(self.a_values, self.b_values, mask)

    def union(self, other):
        return self._with(self.mask | other.mask)

    def intersection(self, other):
        return self._with(self.mask & other.mask)

    def complement(self):
        return self._with(~self.mask)

    def issubset(self, other):
        return not np.any(self.mask & ~other.mask)

    def isdisjoint(self, other):
        return not np.any(self.mask & other.mask)

    def is_empty(self):
        return not self.mask.any()

    def cells(self):
        return [tuple(int(x) for x in c) for c in np.argwhere(self.mask)]

    def __eq__(self, other):
        return isinstance(other, GridRegion) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f'GridRegion(cells={self.cells()})'


class JointObservable:
    """
    The pair (A, B) with a memoized evaluator of J_AB over grid masks, keyed by the mask
    and the meet / join cutoffs in force.
    Concurrent callers share the cache; the first projector stored for a mask is the
    one every caller gets back.
    """

    def __init__(self, a, b):
        if a.dim != b.dim:
            raise DimensionMismatch(f'observables act on different dimensions: {a.dim} vs {b.dim}')
        self.a = a
        self.b = b
        self._cache = {}
        self._lock = threading.Lock()

    @property
    def dim(self):
        return self.a.dim

    @property
    def shape(self):
        return len(self.a), len(self.b)

    @property
    def a_values(self):
        return self.a.eigenvalues

    @property
    def b_values(self):
        return self.b.eigenvalues

    @property
    def commuting(self):
        return commutes(self.a.matrix, self.b.matrix)

    def region(self, mask):
        return GridRegion(self.a_values, self.b_values, mask)

    def from_cells(self, cells):
        mask = np.zeros(self.shape, dtype=bool)
        for i, k in cells:
            if not (0 <= i < mask.shape[0] and 0 <= k < mask.shape[1]):
                raise MalformedRegion(f'grid cell ({i}, {k}) outside the {mask.shape[0]}×{mask.shape[1]} grid')
            mask[i, k] = True
        return self.region(mask)

    def full(self):
        return self.region(np.ones(self.shape, dtype=bool))

    def empty(self):
        return self.region(np.zeros(self.shape, dtype=bool))

    def rectangle(self, rows, cols):
        mask = np.zeros(self.shape, dtype=bool)
        mask[np.ix_(list(rows), list(cols))] = True
        return self.region(mask)

    def __call__(self, q):
        return eval_joint(self, q)

    def cache_size(self):
        with self._lock:
            return len(self._cache)

    def __repr__(self):
        return f'JointObservable(dim={self.dim}, grid={self.shape[0]}×{self.shape[1]})'


def check_grid(j, q):
    if q.shape != j.shape:
        raise GridMismatch(f'region grid {q.shape} does not match joint grid {j.shape}')
    ta = cluster_tolerance(j.a_values)
    tb = cluster_tolerance(j.b_values)
    if max_abs(np.asarray(q.a_values) - j.a_values) > ta or max_abs(np.asarray(q.b_values) - j.b_values) > tb:
        raise GridMismatch('region was built on a different spectrum')


def _rectangle_term(j, rows, cols):
    return meet(evaluate(j.a, rows), evaluate(j.b, cols))


def eval_joint(j, q):
    """
    J_AB(Q) as the join, over maximal rectangles of the mask in sorted order, of A(S1) ∧ B(S2).
    Args:
        j: JointObservable
        q: GridRegion on j's grid
    Returns:
        Projector
    """
    check_grid(j, q)
    cfg = get_config()
    # entries are only valid for the cutoffs they were computed under
    key = (q.key, cfg.meet_cutoff, cfg.join_cutoff)
    with j._lock:
        hit = j._cache.get(key)
    if hit is not None:
        return hit

    acc = Projector.zero(j.dim)
    for rows, cols in maximal_rectangles(q.mask):
        term = _rectangle_term(j, rows, cols)
        if term.rank:
            acc = join(acc, term)

    with j._lock:
        return j._cache.setdefault(key, acc)


def margins(j, r, axis='A'):
    """
    J on the strip R×σ(B) (axis 'A') or σ(A)×R (axis 'B').
    """
    r = ValueSet.of(r)
    mask = np.zeros(j.shape, dtype=bool)
    if axis.upper() == 'A':
        mask[sorted(r.indices), :] = True
    elif axis.upper() == 'B':
        mask[:, sorted(r.indices)] = True
    else:
        raise ValueError(f'axis must be A or B, got {axis!r}')
    return eval_joint(j, j.region(mask))


def region_from_borel(j, spec):
    """
    Compile a union of interval rectangles and value points to a grid mask.
    Args:
        j: JointObservable
        spec: BorelRegion
    Returns:
        GridRegion with mask[i][k] true iff (λ_i, μ_k) lies in the described set
    """
    ta = cluster_tolerance(j.a_values)
    tb = cluster_tolerance(j.b_values)
    mask = np.zeros(j.shape, dtype=bool)
    for rect in spec.rects:
        rows = [i for i, lam in enumerate(j.a_values) if rect.x.contains(lam, ta)]
        cols = [k for k, mu in enumerate(j.b_values) if rect.y.contains(mu, tb)]
        if rows and cols:
            mask[np.ix_(rows, cols)] = True
    for x, y in spec.points:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise MalformedRegion(f'point ({x}, {y}) is not finite')
        rows = np.flatnonzero(np.abs(j.a_values - x) <= ta)
        cols = np.flatnonzero(np.abs(j.b_values - y) <= tb)
        for i in rows:
            for k in cols:
                mask[i, k] = True
    return j.region(mask)


def region_from_preimage(j, f, interval):
    """Cells whose value f(λ_i, μ_k) lies in the interval."""
    mask = np.zeros(j.shape, dtype=bool)
    for i, lam in enumerate(j.a_values):
        for k, mu in enumerate(j.b_values):
            mask[i, k] = interval.contains(float(f(float(lam), float(mu))))
    return j.region(mask)


@dataclass(frozen=True)
class GridPartition:
    regions: Tuple[GridRegion, ...]
    labels: Tuple[str, ...]

    @classmethod
    def from_regions(cls, regions, labels=None):
        regions = tuple(regions)
        if not regions:
            raise InvalidPartition('a partition needs at least one region')
        labels = tuple(str(x) for x in labels) if labels is not None else tuple(f'Q{i + 1}' for i in range(len(regions)))
        if len(labels) != len(regions):
            raise InvalidPartition(f'{len(labels)} labels for {len(regions)} regions')
        if len(set(labels)) != len(labels) or 'none' in labels:
            raise InvalidPartition('labels must be distinct and may not be "none"')
        shape = regions[0].shape
        covered = np.zeros(shape, dtype=bool)
        for q in regions:
            if q.shape != shape:
                raise InvalidPartition('regions live on different grids')
            if q.is_empty():
                raise InvalidPartition('empty region in partition')
            if np.any(covered & q.mask):
                raise InvalidPartition(f'regions overlap on cells {[tuple(c) for c in np.argwhere(covered & q.mask)]}')
            covered |= q.mask
        if not covered.all():
            raise InvalidPartition(f'partition leaves cells uncovered: {[tuple(c) for c in np.argwhere(~covered)]}')
        return cls(regions, labels)

    @classmethod
    def singletons(cls, j):
        n, m = j.shape
        regions = [j.from_cells([(i, k)]) for i in range(n) for k in range(m)]
        labels = [f'({_fmt(j.a_values[i])},{_fmt(j.b_values[k])})' for i in range(n) for k in range(m)]
        return cls.from_regions(regions, labels)

    @classmethod
    def rows(cls, j):
        """One region per A value."""
        n, _ = j.shape
        regions = [j.rectangle([i], range(j.shape[1])) for i in range(n)]
        return cls.from_regions(regions, [f'a={_fmt(v)}' for v in j.a_values])

    @classmethod
    def cols(cls, j):
        """One region per B value."""
        _, m = j.shape
        regions = [j.rectangle(range(j.shape[0]), [k]) for k in range(m)]
        return cls.from_regions(regions, [f'b={_fmt(v)}' for v in j.b_values])

    @classmethod
    def full(cls, j):
        return cls.from_regions([j.full()], ['all'])

    def __len__(self):
        return len(self.regions)


def _fmt(v):
    return f'{float(v):.6g}'


def partition_sum(j, p):
    return sum((eval_joint(j, q).matrix for q in p.regions), np.zeros((j.dim, j.dim), dtype=np.complex128))


def defect(j, p):
    """
    J⁰ = I − Σ_i J(Q_i); a projector because the J(Q_i) are pairwise orthogonal.
    """
    if not isinstance(p, GridPartition):
        raise InvalidPartition('expected a GridPartition')
    for q in p.regions:
        check_grid(j, q)
    m = np.eye(j.dim, dtype=np.complex128) - partition_sum(j, p)
    try:
        return Projector.from_matrix(m, tol=get_config().compare_tol)
    except Exception as e:
        raise InvariantViolation(f'defect is not a projector: {e}') from e


@dataclass
class Violation:
    check: str
    detail: str
    masks: List[list] = field(default_factory=list)

    def __str__(self):
        where = f' masks={self.masks}' if self.masks else ''
        return f'{self.check}: {self.detail}{where}'


@dataclass
class GpvmReport:
    trials: int
    checks: int = 0
    additive: bool = True
    violations: List[Violation] = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations


def _mask_list(q):
    return q.mask.astype(int).tolist()


def _random_family(j, rng):
    n, m = j.shape
    k = int(rng.integers(1, min(4, n * m) + 1))
    labels = rng.integers(-1, k, size=(n, m))
    family = [j.region(labels == b) for b in range(k)]
    return [q for q in family if not q.is_empty()]


def verify_gpvm(j, trials, seed):
    """
    Check the gPVM axioms over random disjoint region families.
    Args:
        j: JointObservable
        trials: number of random families (the all-singletons family and {full} are always included)
        seed: RNG seed
    Returns:
        GpvmReport; `additive` stays true only if every family was exactly additive
    """
    cfg = get_config()
    rng = np.random.Generator(np.random.PCG64(seed))
    report = GpvmReport(trials=trials)
    eye = np.eye(j.dim)

    def record(ok, check, detail, *regions):
        report.checks += 1
        if not ok:
            report.violations.append(Violation(check, detail, [_mask_list(q) for q in regions]))

    record(eval_joint(j, j.empty()).rank == 0, 'empty', 'J(∅) ≠ 0', j.empty())
    record(within(max_abs(eval_joint(j, j.full()).matrix - eye), cfg.compare_tol), 'full', 'J(full) ≠ I', j.full())

    n, m = j.shape
    families = [[j.from_cells([(i, k)]) for i in range(n) for k in range(m)], [j.full()]]
    families += [_random_family(j, rng) for _ in range(trials)]
    for family in families:
        values = [eval_joint(j, q) for q in family]
        for x in range(len(family)):
            for y in range(x + 1, len(family)):
                residual = max_abs(values[x].matrix @ values[y].matrix)
                record(within(residual, cfg.compare_tol), 'orthogonality',
                       f'‖J(Q_i)J(Q_j)‖ = {residual:.3e}', family[x], family[y])
        union = j.empty()
        for q in family:
            union = union.union(q)
        ju = eval_joint(j, union)
        for q, v in zip(family, values):
            record(leq(v, ju), 'monotonicity', 'J(Q_i) ≰ J(⋃Q)', q, union)
        total = sum((v.matrix for v in values), np.zeros((j.dim, j.dim), dtype=np.complex128))
        record(matrix_leq(total, ju.matrix), 'subadditivity', 'Σ J(Q_i) ≰ J(⋃Q)', *family)
        if not within(max_abs(total - ju.matrix), cfg.compare_tol):
            report.additive = False

        # nested pair
        q = j.region(rng.random((n, m)) < 0.5)
        bigger = q.union(j.region(rng.random((n, m)) < 0.5))
        record(leq(eval_joint(j, q), eval_joint(j, bigger)), 'monotonicity', 'Q ⊆ Q′ but J(Q) ≰ J(Q′)', q, bigger)
    return report


def check_additivity(j):
    """PVM test: the singleton values sum to I."""
    total = partition_sum(j, GridPartition.singletons(j))
    return within(max_abs(total - np.eye(j.dim)), get_config().compare_tol)


@dataclass
class UncertaintyRecord:
    l_a: float
    l_b: float
    delta_a: float
    delta_b: float
    holds: bool
    commutator_bound: bool  # |⟨[A,B]⟩| ≤ 2ΔAΔB
    fixes_state: bool  # J(L_A×L_B)ψ = ψ


def uncertainty_check(j, psi):
    """
    l_A·l_B ≥ 2ΔAΔB with L_A, L_B the smallest closed intervals holding the possible outcomes.
    """
    cfg = get_config()
    psi = check_normalized(psi, j.dim)
    ma = sorted(possible_outcomes(j.a, psi).indices)
    mb = sorted(possible_outcomes(j.b, psi).indices)
    l_a = float(j.a_values[ma[-1]] - j.a_values[ma[0]])
    l_b = float(j.b_values[mb[-1]] - j.b_values[mb[0]])
    delta_a = math.sqrt(j.a.variance(psi))
    delta_b = math.sqrt(j.b.variance(psi))
    holds = l_a * l_b >= 2 * delta_a * delta_b - cfg.compare_tol

    am, bm = j.a.matrix, j.b.matrix
    comm = abs(np.vdot(psi, (am @ bm - bm @ am) @ psi))
    commutator_bound = comm <= 2 * delta_a * delta_b + cfg.compare_tol

    box = j.rectangle(range(ma[0], ma[-1] + 1), range(mb[0], mb[-1] + 1))
    fixed = eval_joint(j, box).matrix @ psi
    fixes_state = within(max_abs(fixed - psi), cfg.compare_tol + cfg.outcome_tol * j.dim)
    return UncertaintyRecord(l_a, l_b, delta_a, delta_b, bool(holds), bool(commutator_bound), bool(fixes_state))


def minimality_oracle(j, q):
    """
    Span of the ranges of A(R1) ∧ B(R2) over every rectangle R1×R2 ⊆ Q, maximal or not.
    """
    check_grid(j, q)
    blocks = [np.zeros((j.dim, 0), dtype=np.complex128)]
    for rows, cols in all_rectangles(q.mask):
        term = _rectangle_term(j, rows, cols)
        if term.rank:
            blocks.append(term.matrix)
    return span_projector(np.hstack(blocks))


def check_eigenstate_law(j, q):
    """
    Common eigenvectors with eigenvalue pair (a, b): fixed by J(Q) when (a, b) ∈ Q, annihilated otherwise.
    """
    tol = get_config().compare_tol
    jq = eval_joint(j, q).matrix
    n, m = j.shape
    for i in range(n):
        for k in range(m):
            common = _rectangle_term(j, [i], [k])
            if not common.rank:
                continue
            basis = common.range_basis()
            target = basis if q.mask[i, k] else np.zeros_like(basis)
            if not within(max_abs(jq @ basis - target), tol):
                return False
    return True


def check_unitary_covariance(j, q, u):
    """J over (UAU†, UBU†) equals U J(Q) U†."""
    rotated = JointObservable(conjugate(j.a, u), conjugate(j.b, u))
    lhs = eval_joint(rotated, rotated.region(q.mask)).matrix
    rhs = u @ eval_joint(j, q).matrix @ dagger(u)
    return within(max_abs(lhs - rhs), get_config().compare_tol)


def check_characterization(j, q, rng, samples=3):
    """
    (1) states in a confined rectangle's meet are fixed by J(Q);
    (2) states orthogonal to every confined rectangle's meet are annihilated by J(Q).
    """
    tol = get_config().compare_tol
    jq = eval_joint(j, q).matrix
    for rows, cols in maximal_rectangles(q.mask):
        term = _rectangle_term(j, rows, cols)
        if not term.rank:
            continue
        basis = term.range_basis()
        for _ in range(samples):
            c = rng.standard_normal(term.rank) + 1j * rng.standard_normal(term.rank)
            psi = basis @ (c / np.linalg.norm(c))
            if not within(max_abs(jq @ psi - psi), tol):
                return False
    outside = np.eye(j.dim) - minimality_oracle(j, q).matrix
    for _ in range(samples):
        v = outside @ (rng.standard_normal(j.dim) + 1j * rng.standard_normal(j.dim))
        norm = np.linalg.norm(v)
        if norm < 1e-6:
            continue
        if not within(max_abs(jq @ (v / norm)), tol):
            return False
    return True


@dataclass(frozen=True, eq=False)
class CoarseJoint:
    joint: JointObservable
    a_labels: Tuple[str, ...]
    b_labels: Tuple[str, ...]
    masks_checked: int


def expand_mask(coarse_mask, pa, pb, shape):
    """Fine mask ⋃Q̃ of a coarse mask over the product partition."""
    coarse_mask = np.asarray(coarse_mask, dtype=bool)
    row_block = np.empty(shape[0], dtype=int)
    col_block = np.empty(shape[1], dtype=int)
    for bi, block in enumerate(pa.blocks):
        row_block[sorted(block)] = bi
    for bk, block in enumerate(pb.blocks):
        col_block[sorted(block)] = bk
    return coarse_mask[np.ix_(row_block, col_block)]


def _coarse_masks(ka, kb, seed=0, limit_bits=12, samples=256):
    bits = ka * kb
    if bits <= limit_bits:
        for code in range(1 << bits):
            yield np.array([(code >> b) & 1 for b in range(bits)], dtype=bool).reshape(ka, kb)
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
        for _ in range(samples):
            yield rng.random((ka, kb)) < 0.5


def coarse_grain_joint(j, pa, pb):
    """
    J_ÃB̃ for partitions of σ(A) and σ(B), checked against J_AB(⋃Q̃) on the coarse masks.
    Returns:
        CoarseJoint
    """
    ca = coarse_grain(j.a, pa)
    cb = coarse_grain(j.b, pb)
    coarse = JointObservable(ca.observable, cb.observable)
    tol = get_config().compare_tol
    checked = 0
    for cm in _coarse_masks(len(pa.blocks), len(pb.blocks)):
        lhs = eval_joint(coarse, coarse.region(cm))
        rhs = eval_joint(j, j.region(expand_mask(cm, pa, pb, j.shape)))
        if not within(max_abs(lhs.matrix - rhs.matrix), tol):
            raise InvariantViolation(f'coarse joint differs from the coarse-grained joint on mask '
                                     f'{cm.astype(int).tolist()}')
        checked += 1
    return CoarseJoint(coarse, ca.labels, cb.labels, checked)


def coarse_is_pvm(j, pa, pb):
    """
    Whether the J-values of the product blocks sum to I; the coarse joint is then a PVM.
    """
    total = np.zeros((j.dim, j.dim), dtype=np.complex128)
    for ba in pa.blocks:
        for bb in pb.blocks:
            total = total + eval_joint(j, j.rectangle(sorted(ba), sorted(bb))).matrix
    return within(max_abs(total - np.eye(j.dim)), get_config().compare_tol)
