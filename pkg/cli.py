import argparse
import io
import sys
import warnings

import numpy as np
import ujson
from rich.console import Console
from rich.table import Table
from rich.text import Text

from gpvm.GPVMConfig import config_from_env, config_from_json, use_config
from gpvm.dataset import load_chain, load_density, load_observable, load_partition, load_region
from gpvm.errors import (ConfigError, ExprSyntaxError, FunctionUndefined, GPVMError, InputError, InvalidChain,
                         UnboundVariable, UnknownIdentifier)
from gpvm.exprparse import parse
from gpvm.funcalc import GeneratingChainOrder, extract_pvm, generalized, is_pvm
from gpvm.joint import JointObservable, defect, eval_joint
from gpvm.measure import NO_OUTCOME, build_channel, outcome_probabilities, sample_outcomes
from gpvm.utils import Logger, RNG_ALGORITHM, set_verbosity
from gpvm.verify import SUITES, run_verify

warnings.filterwarnings('ignore')

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT = 2
EXIT_INVARIANT = 3
EXIT_UNDEFINED = 4

INPUT_ERRORS = (InputError, ExprSyntaxError, UnknownIdentifier, UnboundVariable, ConfigError, InvalidChain)

_err = Console(stderr=True, highlight=False)


def _num(x):
    # +0.0 folds -0.0 so equal inputs print equal text
    return round(float(x), 12) + 0.0


def _matrix_json(m):
    m = np.asarray(m)
    return {'re': [[_num(v) for v in row] for row in m.real],
            'im': [[_num(v) for v in row] for row in m.imag]}


def _complex_text(z):
    re, im = _num(z.real), _num(z.imag)
    if im == 0.0:
        return f'{re:.6g}'
    return f'{re:.6g}{im:+.6g}i'


def _matrix_table(title, m):
    m = np.asarray(m)
    table = Table(title=title, show_header=False)
    for _ in range(m.shape[1]):
        table.add_column(justify='right')
    for row in m:
        table.add_row(*[_complex_text(z) for z in row])
    return table


class Report:
    """Buffers stdout text; nothing is written until the command succeeds."""

    def __init__(self, fmt):
        self.fmt = fmt
        self.payload = {}
        self._buf = io.StringIO()
        self.console = Console(file=self._buf, width=160, color_system=None, force_terminal=False,
                               highlight=False, markup=False, soft_wrap=True)

    def text(self):
        if self.fmt == 'json':
            return ujson.dumps(self.payload, sort_keys=True, ensure_ascii=False) + '\n'
        return self._buf.getvalue()


def cmd_joint(args, report):
    a, b = load_observable(args.a_file), load_observable(args.b_file)
    if a.dim != b.dim:
        raise InputError(f'{args.a_file} and {args.b_file} have dimensions {a.dim} and {b.dim}')
    j = JointObservable(a, b)
    if (args.region is None) == (args.partition is None):
        raise InputError('give exactly one of a region file or --partition')
    con = report.console

    if args.region is not None:
        q = load_region(args.region, j)
        p = eval_joint(j, q)
        report.payload = {'cells': q.cells(), 'rank': p.rank, 'projector': _matrix_json(p.matrix)}
        con.print(f'region cells: {q.cells()}')
        con.print(f'rank: {p.rank}')
        con.print(_matrix_table('J_AB(Q)', p.matrix))
        return EXIT_OK

    part = load_partition(args.partition, j)
    d = defect(j, part)
    table = Table(title=Text(f'J_AB on partition "{args.partition}"'))
    table.add_column('label')
    table.add_column('cells')
    table.add_column('rank', justify='right')
    outcomes = []
    for label, q in zip(part.labels, part.regions):
        p = eval_joint(j, q)
        outcomes.append({'label': label, 'cells': q.cells(), 'rank': p.rank, 'projector': _matrix_json(p.matrix)})
        table.add_row(Text(label), str(q.cells()), str(p.rank))
    table.add_row('none', '-', str(d.rank))
    report.payload = {'outcomes': outcomes, 'defect': {'rank': d.rank, 'projector': _matrix_json(d.matrix)},
                      'pvm': d.rank == 0}
    con.print(table)
    con.print(_matrix_table('defect J⁰', d.matrix))
    con.print(f'pvm: {d.rank == 0}')
    return EXIT_OK


def _chain(spec, g):
    if spec in (None, 'ascending'):
        return GeneratingChainOrder.ascending(len(g.values))
    if spec == 'descending':
        return GeneratingChainOrder.descending(len(g.values))
    perm = GeneratingChainOrder(tuple(load_chain(spec)))
    if len(perm) != len(g.values):
        raise InvalidChain(f'chain orders {len(perm)} values, f(A,B) takes {len(g.values)}')
    return perm


def cmd_funcalc(args, report):
    f = parse(args.f, ('x', 'y'))
    a, b = load_observable(args.a_file), load_observable(args.b_file)
    if a.dim != b.dim:
        raise InputError(f'{args.a_file} and {args.b_file} have dimensions {a.dim} and {b.dim}')
    g = generalized(a, b, f)
    order = _chain(args.chain, g)
    out = extract_pvm(g, order)
    already = is_pvm(g)
    con = report.console

    report.payload = {
        'f': str(f),
        'values': [_num(v) for v in g.values],
        'chain': list(order.permutation),
        'already_pvm': already,
        'eigenvalues': [_num(v) for v in out.eigenvalues],
        'ranks': [p.rank for p in out.projectors],
        'matrix': _matrix_json(out.matrix),
    }
    con.print(f'f(x, y) = {f}')
    con.print(f'values of f on σ(A)×σ(B): {[_num(v) for v in g.values]}')
    con.print(f'chain: {list(order.permutation)}')
    con.print(f'f(A,B) already a PVM: {already}')
    table = Table(title='f_E(A,B)')
    table.add_column('eigenvalue', justify='right')
    table.add_column('rank', justify='right')
    for lam, p in zip(out.eigenvalues, out.projectors):
        table.add_row(f'{_num(lam):.10g}', str(p.rank))
    con.print(table)
    con.print(_matrix_table('f_E(A,B) matrix', out.matrix))
    return EXIT_OK


def cmd_measure(args, report):
    a, b = load_observable(args.a_file), load_observable(args.b_file)
    if a.dim != b.dim:
        raise InputError(f'{args.a_file} and {args.b_file} have dimensions {a.dim} and {b.dim}')
    j = JointObservable(a, b)
    part = load_partition(args.partition, j)
    rho = load_density(args.rho_file)
    c = build_channel(j, part)
    probs = outcome_probabilities(c, rho)
    hist = sample_outcomes(c, rho, args.shots, args.seed)
    csv = hist.to_csv()
    if args.csv:
        with open(args.csv, 'w', encoding='utf-8', newline='') as fh:
            fh.write(csv)

    rows = list(zip(probs.labels + (NO_OUTCOME,), probs.vector()))
    report.payload = {
        'probabilities': [{'label': label, 'probability': _num(p)} for label, p in rows],
        'histogram': [{'label': label, 'count': int(n), 'frequency': _num(fr)}
                      for label, n, fr in zip(hist.labels, hist.counts, hist.frequencies)],
        'shots': hist.shots,
        'seed': hist.seed,
        'rng': hist.algorithm,
    }
    table = Table(title='outcome probabilities')
    table.add_column('label')
    table.add_column('probability', justify='right')
    for label, p in rows:
        table.add_row(Text(label), f'{_num(p):.6f}')
    report.console.print(table)
    report.console.print(f'# shots={hist.shots} seed={hist.seed} rng={RNG_ALGORITHM}')
    report.console.print(csv, end='', markup=False)
    return EXIT_OK


def cmd_verify(args, report):
    reports = run_verify(args.suite, args.trials, args.seed, args.workers)
    failed = [f for r in reports for f in r.failures]
    for f in failed:
        _err.print(str(f), markup=False)
        _err.print(f'  seed={args.seed}', markup=False)
    if failed:
        _err.print(f'{len(failed)} property failures', markup=False)
        return EXIT_VERIFY_FAILED

    table = Table(title=f'verify (seed {args.seed})')
    table.add_column('suite')
    table.add_column('trials', justify='right')
    table.add_column('failures', justify='right')
    table.add_column('notes')
    suites = []
    for r in reports:
        notes = {}
        for n in r.notes:
            notes[n] = notes.get(n, 0) + 1
        note_text = '; '.join(f'{n} ({k}×)' for n, k in notes.items())
        suites.append({'suite': r.name, 'trials': r.trials, 'failures': len(r.failures), 'notes': notes})
        table.add_row(r.name, str(r.trials), str(len(r.failures)), note_text)
    report.payload = {'seed': args.seed, 'passed': True, 'suites': suites}
    report.console.print(table)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(description='Generalized joint observables of finite-dimensional observables')
    parser.add_argument('--format', default='table', choices=['table', 'json'])
    parser.add_argument('--seed', default=0, type=int)
    parser.add_argument('--tol', default=None, type=str, help='JSON object of tolerance overrides')
    parser.add_argument('--quiet', action='store_true', help='no progress log on stderr')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('joint', help='J_AB on a region or a partition')
    p.add_argument('a_file')
    p.add_argument('b_file')
    p.add_argument('region', nargs='?', default=None)
    p.add_argument('--partition', default=None, type=str,
                   help='singletons, rows (one region per A value), cols (one per B value), full, '
                        'or a partition JSON file')
    p.set_defaults(handler=cmd_joint)

    p = sub.add_parser('funcalc', help='f_E(A,B) along a generating chain')
    p.add_argument('a_file')
    p.add_argument('b_file')
    p.add_argument('--f', required=True, type=str, help='expression in x and y')
    p.add_argument('--chain', default='ascending', type=str, help='ascending, descending, or a chain JSON file')
    p.set_defaults(handler=cmd_funcalc)

    p = sub.add_parser('measure', help='unselected joint measurement and sampled histogram')
    p.add_argument('a_file')
    p.add_argument('b_file')
    p.add_argument('partition')
    p.add_argument('rho_file')
    p.add_argument('--shots', default=10000, type=int)
    p.add_argument('--csv', default=None, type=str, help='also write the histogram CSV here')
    p.add_argument('--seed', default=argparse.SUPPRESS, type=int, help='sampling seed, same as the global --seed')
    p.set_defaults(handler=cmd_measure)

    p = sub.add_parser('verify', help='randomized property suites')
    p.add_argument('--suite', default='all', choices=list(SUITES) + ['all'])
    p.add_argument('--trials', default=100, type=int)
    p.add_argument('--workers', default=1, type=int)
    p.add_argument('--seed', default=argparse.SUPPRESS, type=int, help='master seed, same as the global --seed')
    p.add_argument('--inject-fault', action='store_true', help=argparse.SUPPRESS)
    p.set_defaults(handler=cmd_verify)
    return parser


def main(argv=None):
    """
    Args:
        argv: argument list, sys.argv[1:] when None
    Returns:
        process exit code
    """
    args = build_parser().parse_args(argv)
    set_verbosity(not args.quiet)
    report = Report(args.format)
    try:
        cfg = config_from_env()
        if args.tol:
            cfg = config_from_json(args.tol, base=cfg)
        overrides = {'fault_skew': 1.0} if getattr(args, 'inject_fault', False) else {}
        with use_config(cfg, **overrides):
            code = args.handler(args, report)
    except FunctionUndefined as e:
        _err.print(f'error: {e}', markup=False)
        return EXIT_UNDEFINED
    except INPUT_ERRORS as e:
        _err.print(f'error: {e}', markup=False)
        return EXIT_INPUT
    except GPVMError as e:
        _err.print(f'error: {type(e).__name__}: {e}', markup=False)
        return EXIT_INVARIANT
    except ValueError as e:
        _err.print(f'error: {e}', markup=False)
        return EXIT_INPUT
    if code == EXIT_OK:
        sys.stdout.write(report.text())
        sys.stdout.flush()
    Logger(f'exit {code}')
    return code


if __name__ == "__main__":
    sys.exit(main())
