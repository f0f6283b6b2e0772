"""
Randomized property suites behind `cli.py verify`. Each suite runs independent trials
seeded from one SeedSequence; trials may run on a thread pool and are reported in
trial order.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from gpvm.GPVMConfig import get_config, within
from gpvm.errors import GPVMError
from gpvm.fixtures import (random_commuting_pair, random_density, random_eigenvalues, random_hermitian,
                           random_observable, random_state, random_unitary)
from gpvm.funcalc import (check_composition, check_right_composition, check_spectral_monotonicity,
                          dot_plus, dot_times, extract_pvm, generalized, prefix_agreement,
                          property_suite_fE)
from gpvm.joint import (GridPartition, JointObservable, check_additivity, check_characterization,
                        check_eigenstate_law, check_unitary_covariance, coarse_grain_joint, eval_joint,
                        margins, minimality_oracle, uncertainty_check, verify_gpvm)
from gpvm.linalg import (Projector, complement, dagger, eigh, join, leq, max_abs, meet)
from gpvm.measure import (DensityMatrix, ancilla_composite, apply_unselected, build_channel,
                          outcome_probabilities, realize_ancilla)
from gpvm.observable import (OutcomePartition, apply_scalar_function, evaluate,
                             observable_from_matrix, observables_close)
from gpvm.utils import Logger


@dataclass
class Failure:
    suite: str
    trial: int
    check: str
    witness: str

    def __str__(self):
        return f'[{self.suite} trial {self.trial}] {self.check}\n{self.witness}'


@dataclass
class SuiteReport:
    name: str
    trials: int
    seed: int
    failures: List[Failure] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures


def _fmt(m):
    return np.array2string(np.asarray(m), precision=6, suppress_small=True, max_line_width=120)


class _Trial:
    """Collects failed checks of one trial."""

    def __init__(self, suite, index, rng):
        self.suite = suite
        self.index = index
        self.rng = rng
        self.failures = []
        self.notes = []

    def check(self, ok, name, **witness):
        if not ok:
            text = '\n'.join(f'  {k} = {_fmt(v) if isinstance(v, np.ndarray) else v}' for k, v in witness.items())
            self.failures.append(Failure(self.suite, self.index, name, text))
        return ok

    def close(self, x, y, name, tol=None, **witness):
        tol = get_config().compare_tol if tol is None else tol
        return self.check(within(max_abs(np.asarray(x) - np.asarray(y)), tol), name, **witness)


def _random_projector(n, rng, u=None):
    u = random_unitary(n, rng) if u is None else u
    rank = int(rng.integers(0, n + 1))
    cols = rng.permutation(n)[:rank]
    return Projector.from_orthonormal(u[:, cols], n)


def lattice_trial(t):
    rng = t.rng
    n = int(rng.integers(2, 7))
    p, q = _random_projector(n, rng), _random_projector(n, rng)
    w = dict(P=p.matrix, Q=q.matrix)
    m, j = meet(p, q), join(p, q)
    t.check(leq(m, p) and leq(m, q), 'meet is a lower bound', **w)
    t.check(leq(p, j) and leq(q, j), 'join is an upper bound', **w)
    t.close(join(p, meet(p, q)).matrix, p.matrix, 'absorption P ∨ (P ∧ Q) = P', **w)
    t.close(meet(p, join(p, q)).matrix, p.matrix, 'absorption P ∧ (P ∨ Q) = P', **w)
    t.close(complement(join(p, q)).matrix, meet(complement(p), complement(q)).matrix, 'De Morgan', **w)
    t.close(complement(complement(p)).matrix, p.matrix, 'double complement', **w)

    u = random_unitary(n, rng)
    pc, qc = _random_projector(n, rng, u), _random_projector(n, rng, u)
    prod = pc.matrix @ qc.matrix
    wc = dict(P=pc.matrix, Q=qc.matrix)
    t.close(meet(pc, qc).matrix, prod, 'commuting meet = PQ', **wc)
    t.close(join(pc, qc).matrix, pc.matrix + qc.matrix - prod, 'commuting join = P + Q − PQ', **wc)

    h = random_hermitian(int(rng.integers(2, 9)), rng)
    dec = eigh(h)
    v = dec.eigenvectors
    scale = 1.0 + max_abs(h)
    t.check(within(max_abs((v * dec.eigenvalues) @ dagger(v) - h), get_config().eig_residual_tol * scale),
            'eigh reconstruction', M=h)
    t.check(within(max_abs(dagger(v) @ v - np.eye(h.shape[0])), get_config().orthonormal_tol),
            'eigh eigenvectors orthonormal', M=h)


def _random_joint(rng, commuting=False, max_dim=6, max_values=4):
    n = int(rng.integers(2, max_dim + 1))
    ka = int(rng.integers(2, min(max_values, n) + 1))
    kb = int(rng.integers(2, min(max_values, n) + 1))
    if commuting:
        a, b = random_commuting_pair(n, ka, kb, rng)
    else:
        a, b = random_observable(n, ka, rng), random_observable(n, kb, rng)
    return JointObservable(a, b)


def _random_subset(k, rng):
    return [i for i in range(k) if rng.random() < 0.5]


def _random_blocks(k, rng, max_blocks):
    nb = int(rng.integers(1, min(k, max_blocks) + 1))
    labels = np.concatenate([np.arange(nb), rng.integers(0, nb, size=k - nb)])
    rng.shuffle(labels)
    return OutcomePartition.from_blocks([np.flatnonzero(labels == b) for b in range(nb)], k)


def gpvm_trial(t):
    rng = t.rng
    commuting = t.index % 4 == 0
    j = _random_joint(rng, commuting=commuting)
    a, b = j.a, j.b
    w = dict(A=a.matrix, B=b.matrix)

    report = verify_gpvm(j, trials=3, seed=int(rng.integers(0, 2 ** 32)))
    for v in report.violations:
        t.check(False, f'gPVM axiom: {v}', **w)
    if commuting:
        if t.check(report.additive and check_additivity(j), 'commuting pair is additive', **w):
            t.notes.append('commuting fixture: exact additivity confirmed')

    r = _random_subset(len(a), rng)
    s = _random_subset(len(b), rng)
    t.close(margins(j, r, 'A').matrix, evaluate(a, r).matrix, 'margin on A', R=r, **w)
    t.close(margins(j, s, 'B').matrix, evaluate(b, s).matrix, 'margin on B', S=s, **w)

    q = j.region(rng.random(j.shape) < 0.5)
    wq = dict(mask=q.mask.astype(int), **w)
    t.check(check_eigenstate_law(j, q), 'eigenstate law', **wq)
    t.check(check_unitary_covariance(j, q, random_unitary(j.dim, rng)), 'unitary covariance', **wq)
    t.check(check_characterization(j, q, rng), 'characterization', **wq)
    t.close(eval_joint(j, q).matrix, minimality_oracle(j, q).matrix, 'oracle equivalence', **wq)

    for _ in range(10):
        psi = random_state(j.dim, rng)
        rec = uncertainty_check(j, psi)
        t.check(rec.holds and rec.commutator_bound and rec.fixes_state, 'uncertainty bound',
                psi=psi, record=rec, **w)

    if t.index % 5 == 0:
        pa = _random_blocks(len(a), rng, 2)
        pb = _random_blocks(len(b), rng, 2)
        try:
            coarse_grain_joint(j, pa, pb)
        except GPVMError as e:
            t.check(False, f'coarse graining: {e}', pa=pa.blocks, pb=pb.blocks, **w)


_FUNCTIONS: Dict[str, Callable[[float, float], float]] = {
    'x+y': lambda x, y: x + y,
    'x*y': lambda x, y: x * y,
    'x*y+x': lambda x, y: x * y + x,
    'max(x,y)-y/2': lambda x, y: max(x, y) - y / 2,
}


def funcalc_trial(t):
    rng = t.rng
    n = int(rng.integers(2, 5))
    a = random_observable(n, int(rng.integers(2, n + 1)), rng)
    b = random_observable(n, int(rng.integers(2, n + 1)), rng)
    w = dict(A=a.matrix, B=b.matrix)
    name = list(_FUNCTIONS)[t.index % len(_FUNCTIONS)]
    f = _FUNCTIONS[name]

    g = generalized(a, b, f)
    order = rng.permutation(len(g.values))
    out = extract_pvm(g, order)
    t.check(prefix_agreement(g, order, out), 'chain prefixes agree', f=name, order=order, **w)
    rep = property_suite_fE(a, b, f, seed=int(rng.integers(0, 2 ** 32)))
    t.check(rep.passed, 'f_E properties', f=name, details='; '.join(rep.details), **w)

    t.check(observables_close(dot_plus(a, b), dot_plus(b, a)), 'dot-plus commutes', **w)
    t.check(observables_close(dot_times(a, b), dot_times(b, a)), 'dot-times commutes', **w)

    ea, eb = apply_scalar_function(a, np.exp), apply_scalar_function(b, np.exp)
    t.check(observables_close(dot_times(ea, eb), apply_scalar_function(dot_plus(a, b), np.exp)),
            'exponential of dot-plus', **w)

    t.check(check_composition(lambda v: 2 * v + 1, _FUNCTIONS['x*y'], a, b), 'composition with 2x+1', **w)
    t.check(check_right_composition(_FUNCTIONS['x*y'], np.exp, np.exp, a, b), 'right composition with exp', **w)

    base = random_eigenvalues(n, rng)
    shift = rng.uniform(0.0, 1.0, n)
    u = random_unitary(n, rng)
    low = observable_from_matrix(u @ np.diag(base) @ dagger(u))
    high = observable_from_matrix(u @ np.diag(base + shift) @ dagger(u))
    c = (observable_from_matrix(u @ np.diag(random_eigenvalues(n, rng)[rng.permutation(n)]) @ dagger(u))
         if t.index % 2 else random_observable(n, int(rng.integers(1, n + 1)), rng))
    t.check(check_spectral_monotonicity(low, high, c), 'dot-plus respects the spectral order',
            A=low.matrix, B=high.matrix, C=c.matrix)


def measure_trial(t):
    rng = t.rng
    j = _random_joint(rng, commuting=t.index % 3 == 0, max_dim=4)
    n, m = j.shape
    cells = n * m
    k = int(rng.integers(1, cells + 1))
    labels = np.concatenate([np.arange(k), rng.integers(0, k, size=cells - k)])
    rng.shuffle(labels)
    labels = labels.reshape(n, m)
    part = GridPartition.from_regions([j.region(labels == b) for b in range(k)])
    c = build_channel(j, part)
    rho = DensityMatrix(random_density(j.dim, rng))
    w = dict(A=j.a.matrix, B=j.b.matrix, cells=labels)

    out = apply_unselected(c, rho)
    d_tr = float(np.trace(c.defect.matrix @ rho.matrix).real)
    t.check(out.trace <= rho.trace + 1e-10, 'trace does not increase', **w)
    t.check((abs(out.trace - rho.trace) <= 1e-10) == (d_tr <= 1e-10), 'trace preserved iff no defect weight', **w)
    t.check(float(eigh(out.matrix).eigenvalues[0]) >= -1e-9, 'output is positive', **w)
    t.close(apply_unselected(c, out).matrix, out.matrix, 'unselected map is idempotent', **w)

    u = realize_ancilla(c)
    t.check(within(max_abs(dagger(u) @ u - np.eye(u.shape[0])), get_config().unitary_tol), 'ancilla unitary', **w)
    t.close(ancilla_composite(c, rho, u), out.matrix, 'ancilla composite = unselected map',
            tol=get_config().density_tol, **w)

    probs = outcome_probabilities(c, rho)
    t.check(within(abs(probs.probabilities.sum() + probs.none - 1.0), get_config().norm_tol),
            'probabilities sum to one', **w)
    if k >= 2:
        merged = np.where(labels == k - 1, 0, labels)
        coarse = GridPartition.from_regions([j.region(merged == b) for b in range(k - 1)])
        coarse_probs = outcome_probabilities(build_channel(j, coarse), rho)
        t.check(probs.probabilities.sum() <= coarse_probs.probabilities.sum() + 1e-9,
                'coarser partition does not lose outcome probability', **w)


SUITES = {
    'lattice': lattice_trial,
    'gpvm': gpvm_trial,
    'funcalc': funcalc_trial,
    'measure': measure_trial,
}


def _run_one(suite, index, seed_seq):
    t = _Trial(suite, index, np.random.Generator(np.random.PCG64(seed_seq)))
    try:
        SUITES[suite](t)
    except GPVMError as e:
        t.failures.append(Failure(suite, index, f'raised {type(e).__name__}', f'  {e}'))
    return t


def run_suite(name, trials, seed, workers=1):
    """
    Args:
        name: one of SUITES
        trials: number of random trials
        seed: master seed
        workers: thread count; results keep trial order either way
    Returns:
        SuiteReport
    """
    seeds = np.random.SeedSequence(seed).spawn(trials)
    report = SuiteReport(name, trials, seed)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: _run_one(name, i, seeds[i]), range(trials)))
    else:
        results = [_run_one(name, i, seeds[i]) for i in range(trials)]
    for t in results:
        report.failures.extend(t.failures)
        report.notes.extend(t.notes)
    Logger(f'{name}: {trials} trials, {len(report.failures)} failures')
    return report


def run_verify(suite, trials, seed, workers=1):
    names = list(SUITES) if suite == 'all' else [suite]
    return [run_suite(n, trials, seed, workers) for n in names]
