import pytest
import ujson

from cli import EXIT_INPUT, EXIT_INVARIANT, EXIT_OK, EXIT_UNDEFINED, EXIT_VERIFY_FAILED, main


def run(capsys, *argv):
    code = main(['--quiet', '--format', 'json', *argv])
    out = capsys.readouterr().out
    return code, (ujson.loads(out) if out else None), out


def test_joint_singleton_region_is_zero(capsys, data):
    code, payload, _ = run(capsys, 'joint', data('sigma_x.json'), data('sigma_y.json'), data('region_singleton.json'))
    assert code == EXIT_OK
    assert payload['rank'] == 0
    assert payload['cells'] == [[1, 1]]
    assert payload['projector']['re'] == [[0.0, 0.0], [0.0, 0.0]]


def test_joint_borel_region_gives_margin(capsys, data):
    code, payload, _ = run(capsys, 'joint', data('sigma_x.json'), data('sigma_y.json'),
                           data('region_a_negative.json'))
    assert code == EXIT_OK
    assert payload['rank'] == 1
    assert payload['projector']['re'] == [[0.5, -0.5], [-0.5, 0.5]]


def test_joint_partition(capsys, data):
    code, payload, _ = run(capsys, 'joint', data('sigma_x.json'), data('sigma_y.json'), '--partition', 'singletons')
    assert code == EXIT_OK
    assert [o['rank'] for o in payload['outcomes']] == [0, 0, 0, 0]
    assert payload['defect']['rank'] == 2
    assert payload['pvm'] is False
    code, payload, _ = run(capsys, 'joint', data('sigma_z.json'), data('sigma_z.json'),
                           '--partition', data('partition_diagonal.json'))
    assert code == EXIT_OK
    assert [o['label'] for o in payload['outcomes']] == ['same', 'opposite']
    assert [o['rank'] for o in payload['outcomes']] == [2, 0]
    assert payload['pvm'] is True


def test_joint_table_output(capsys, data):
    code = main(['--quiet', 'joint', data('sigma_x.json'), data('sigma_y.json'), '--partition', 'rows'])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert 'a=-1' in out and 'a=1' in out
    assert 'pvm: True' in out


@pytest.mark.parametrize('argv', [
    ['joint', 'sigma_x.json', 'sigma_y.json'],
    ['joint', 'sigma_x.json', 'sigma_y.json', 'region_singleton.json', '--partition', 'rows'],
    ['joint', 'sigma_x.json', 'diag3_a.json', '--partition', 'rows'],
    ['joint', 'sigma_x.json', 'missing.json', '--partition', 'rows'],
])
def test_joint_bad_input(capsys, data, argv):
    argv = [data(a) if a.endswith('.json') else a for a in argv]
    code, payload, out = run(capsys, *argv)
    assert code == EXIT_INPUT
    assert out == ''


def test_malformed_json(capsys, data, tmp_path):
    bad = tmp_path / 'bad.json'
    bad.write_text('{"dim": 2, "matrix_re": [[1, 0], [0, 1]')
    code, _, out = run(capsys, 'joint', str(bad), data('sigma_y.json'), '--partition', 'rows')
    assert code == EXIT_INPUT and out == ''
    outside = tmp_path / 'outside.json'
    outside.write_text('{"points": [[5, 5]]}')
    code, _, _ = run(capsys, 'joint', data('sigma_x.json'), data('sigma_y.json'), str(outside))
    assert code == EXIT_INPUT


def test_non_hermitian_input(capsys, data, tmp_path):
    m = tmp_path / 'm.json'
    m.write_text('{"dim": 2, "matrix_re": [[1, 1], [0, 1]]}')
    code, _, out = run(capsys, 'joint', str(m), data('sigma_y.json'), '--partition', 'rows')
    assert code == EXIT_INVARIANT and out == ''


def test_funcalc_sum_of_sigma_x_sigma_y(capsys, data):
    code, payload, _ = run(capsys, 'funcalc', data('sigma_x.json'), data('sigma_y.json'), '--f', 'x+y')
    assert code == EXIT_OK
    assert payload['eigenvalues'] == [0.0]
    assert payload['ranks'] == [2]
    assert payload['values'] == [-2.0, 0.0, 2.0]
    assert payload['already_pvm'] is False


def test_funcalc_commuting_product(capsys, data):
    code, payload, _ = run(capsys, 'funcalc', data('sigma_z.json'), data('sigma_z.json'), '--f', 'x*y')
    assert code == EXIT_OK
    assert payload['eigenvalues'] == [1.0]
    assert payload['already_pvm'] is True


def test_funcalc_matrix_form_matches_pauli_form(capsys, data):
    _, by_pauli, _ = run(capsys, 'funcalc', data('sigma_x.json'), data('sigma_y.json'), '--f', 'max(x,y)')
    _, by_matrix, _ = run(capsys, 'funcalc', data('sigma_x.json'), data('sigma_y_matrix.json'), '--f', 'max(x,y)')
    assert by_pauli['eigenvalues'] == by_matrix['eigenvalues']
    assert by_pauli['ranks'] == by_matrix['ranks']


def test_funcalc_chains(capsys, data):
    code, payload, _ = run(capsys, 'funcalc', data('sigma_x.json'), data('sigma_y.json'), '--f', 'x+y',
                           '--chain', 'descending')
    assert code == EXIT_OK
    assert payload['chain'] == [2, 1, 0]
    code, payload, _ = run(capsys, 'funcalc', data('sigma_x.json'), data('sigma_y.json'), '--f', 'x+y',
                           '--chain', data('chain_swap.json'))
    assert code == EXIT_OK
    assert payload['chain'] == [1, 0, 2]
    code, _, _ = run(capsys, 'funcalc', data('sigma_x.json'), data('sigma_y.json'), '--f', 'x*y',
                     '--chain', data('chain_swap.json'))
    assert code == EXIT_INPUT


@pytest.mark.parametrize('expr, expected', [('x +', EXIT_INPUT), ('x + z', EXIT_INPUT), ('min(x)', EXIT_INPUT),
                                            ('ln(x) + y', EXIT_UNDEFINED), ('sqrt(x)', EXIT_UNDEFINED)])
def test_funcalc_expression_errors(capsys, data, expr, expected):
    code, _, out = run(capsys, 'funcalc', data('sigma_x.json'), data('sigma_y.json'), '--f', expr)
    assert code == expected
    assert out == ''


def test_measure_singletons_never_fire(capsys, data):
    code, payload, _ = run(capsys, 'measure', data('sigma_x.json'), data('sigma_y.json'), 'singletons',
                           data('rho_mixed.json'), '--shots', '1000')
    assert code == EXIT_OK
    none = payload['histogram'][-1]
    assert none['label'] == 'none'
    assert none['frequency'] == 1.0
    assert payload['probabilities'][-1]['probability'] == 1.0


def test_measure_full_partition(capsys, data):
    code, payload, _ = run(capsys, 'measure', data('sigma_x.json'), data('sigma_y.json'), 'full',
                           data('rho_plus_x.json'), '--shots', '500')
    assert code == EXIT_OK
    assert payload['histogram'][0] == {'label': 'all', 'count': 500, 'frequency': 1.0}
    assert payload['rng'] == 'numpy.PCG64'


def test_measure_is_reproducible(capsys, data, tmp_path):
    argv = ['measure', data('sigma_x.json'), data('sigma_y.json'), 'rows', data('rho_plus_x.json'),
            '--shots', '2000', '--csv', str(tmp_path / 'h.csv')]
    _, first, text = run(capsys, '--seed', '9', *argv)
    _, _, again = run(capsys, '--seed', '9', *argv)
    assert text == again
    assert first['seed'] == 9
    csv = (tmp_path / 'h.csv').read_text()
    assert csv.splitlines()[0] == 'label,count,frequency'
    # |+x> is the a=1 eigenstate of σ_x
    assert [h['count'] for h in first['histogram']] == [0, 2000, 0]


def test_measure_table_output_identical(capsys, data):
    argv = ['--quiet', '--seed', '3', 'measure', data('sigma_z.json'), data('sigma_x.json'), 'cols',
            data('rho_mixed.json'), '--shots', '100']
    assert main(argv) == EXIT_OK
    first = capsys.readouterr().out
    assert main(argv) == EXIT_OK
    assert capsys.readouterr().out == first
    assert '# shots=100 seed=3 rng=numpy.PCG64' in first


def test_measure_bad_shots(capsys, data):
    code, _, out = run(capsys, 'measure', data('sigma_x.json'), data('sigma_y.json'), 'rows',
                       data('rho_mixed.json'), '--shots', '0')
    assert code == EXIT_INPUT and out == ''


def test_verify_passes(capsys):
    code, payload, _ = run(capsys, 'verify', '--suite', 'lattice', '--trials', '5', '--seed', '1')
    assert code == EXIT_OK
    assert payload['passed'] is True
    assert payload['suites'][0]['suite'] == 'lattice'
    assert payload['seed'] == 1
    code, payload, _ = run(capsys, 'verify', '--trials', '2', '--workers', '2')
    assert code == EXIT_OK
    assert len(payload['suites']) == 4


def test_verify_injected_fault(capsys):
    code = main(['--quiet', 'verify', '--suite', 'lattice', '--trials', '2', '--inject-fault'])
    captured = capsys.readouterr()
    assert code == EXIT_VERIFY_FAILED
    assert captured.out == ''
    assert 'seed=0' in captured.err


@pytest.mark.parametrize('tol', ['{"compare_tol": -1}', '{"no_such_tol": 1e-3}', '[1, 2]', '{not json'])
def test_bad_tolerance_overrides(capsys, data, tol):
    code, _, out = run(capsys, '--tol', tol, 'joint', data('sigma_x.json'), data('sigma_y.json'),
                       '--partition', 'rows')
    assert code == EXIT_INPUT and out == ''


def test_tolerance_from_environment(capsys, data, monkeypatch):
    monkeypatch.setenv('GPVM_TOL', '{"compare_tol": 1e-8}')
    code, _, _ = run(capsys, 'joint', data('sigma_x.json'), data('sigma_y.json'), '--partition', 'rows')
    assert code == EXIT_OK
    monkeypatch.setenv('GPVM_TOL', 'nonsense')
    code, _, _ = run(capsys, 'joint', data('sigma_x.json'), data('sigma_y.json'), '--partition', 'rows')
    assert code == EXIT_INPUT


def test_seed_after_subcommand(capsys, data):
    argv = ['measure', data('sigma_x.json'), data('sigma_y.json'), 'rows', data('rho_mixed.json'), '--shots', '300']
    code, after, text = run(capsys, *argv, '--seed', '3')
    assert code == EXIT_OK
    assert after['seed'] == 3
    _, _, again = run(capsys, '--seed', '3', *argv)
    assert text == again
    _, default, _ = run(capsys, *argv)
    assert default['seed'] == 0
    code, payload, _ = run(capsys, 'verify', '--suite', 'all', '--trials', '2', '--seed', '7')
    assert code == EXIT_OK
    assert payload['seed'] == 7
