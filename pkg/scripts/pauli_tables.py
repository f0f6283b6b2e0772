import argparse
import os
import sys
import warnings
from itertools import product

__package__ = "scripts"
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import numpy as np
from rich.console import Console
from rich.table import Table

from gpvm.fixtures import pauli_observable, sigma_x, sigma_y, sigma_z
from gpvm.funcalc import dot_plus, dot_times
from gpvm.joint import JointObservable, eval_joint
from gpvm.observable import observable_from_matrix

warnings.filterwarnings('ignore')


def name_projector(j, m, tol=1e-9):
    """Match J(Q) against 0, I and the spectral projectors of A and B."""
    named = {'0': np.zeros((j.dim, j.dim)), 'I': np.eye(j.dim)}
    for v, p in zip(j.a_values, j.a.projectors):
        named[f'P({v:+.3g})'] = p.matrix
    for v, q in zip(j.b_values, j.b.projectors):
        named[f'Q({v:+.3g})'] = q.matrix
    for name, ref in named.items():
        if np.max(np.abs(m - ref)) <= tol:
            return name
    return '?'


def mask_table(title, j):
    n, m = j.shape
    table = Table(title=title)
    table.add_column('cells')
    table.add_column('rank', justify='right')
    table.add_column('J(Q)')
    for bits in product([False, True], repeat=n * m):
        q = j.region(np.array(bits, dtype=bool).reshape(n, m))
        p = eval_joint(j, q)
        cells = ' '.join(f'({j.a_values[i]:+.3g},{j.b_values[k]:+.3g})' for i, k in q.cells()) or '∅'
        table.add_row(cells, str(p.rank), name_projector(j, p.matrix))
    return table


def funcalc_table():
    table = Table(title='f_E(A,B) on two-dimensional pairs')
    table.add_column('A')
    table.add_column('B')
    table.add_column('f')
    table.add_column('spectrum')
    pairs = [('σ_x', sigma_x(), 'σ_y', sigma_y()),
             ('σ_z', sigma_z(), 'σ_z', sigma_z()),
             ('2σ_z', pauli_observable(0.0, [0, 0, 2.0]), 'σ_x', sigma_x())]
    for an, a, bn, b in pairs:
        for fn, op in (('x+y', dot_plus), ('x*y', dot_times)):
            out = op(a, b)
            spec = ', '.join(f'{v:.6g}×{p.rank}' for v, p in zip(out.eigenvalues, out.projectors))
            table.add_row(an, bn, fn, spec)
    return table


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Golden tables for two-dimensional joint observables")
    parser.add_argument('--commuting', action='store_true', help='also print the commuting-pair tables')
    args = parser.parse_args()

    console = Console()
    console.print(mask_table('J_AB for A=σ_x, B=σ_y', JointObservable(sigma_x(), sigma_y())))
    if args.commuting:
        console.print(mask_table('J_AB for A=0.7·I, B=-0.3·I',
                                 JointObservable(pauli_observable(0.7, [0, 0, 0]), pauli_observable(-0.3, [0, 0, 0]))))
        console.print(mask_table('J_AB for A=σ_z, B=0.7·I',
                                 JointObservable(sigma_z(), pauli_observable(0.7, [0, 0, 0]))))
        console.print(mask_table('J_AB for A=σ_z, B=1+2σ_z (B|a+> = b+|a+>)',
                                 JointObservable(sigma_z(), pauli_observable(1.0, [0, 0, 2.0]))))
        console.print(mask_table('J_AB for A=σ_z, B=1-2σ_z (B|a+> = b-|a+>)',
                                 JointObservable(sigma_z(), pauli_observable(1.0, [0, 0, -2.0]))))
        console.print(mask_table('J_AB for A=diag(1,1,2), B=diag(-1,3,3)',
                                 JointObservable(observable_from_matrix(np.diag([1.0, 1.0, 2.0])),
                                                 observable_from_matrix(np.diag([-1.0, 3.0, 3.0])))))
    console.print(funcalc_table())
