import pytest

from gpvm.GPVMConfig import use_config
from gpvm.verify import SUITES, run_suite, run_verify


@pytest.mark.parametrize('suite', list(SUITES))
def test_suites_pass(suite):
    report = run_suite(suite, trials=10, seed=11)
    assert report.passed, '\n'.join(str(f) for f in report.failures)
    assert report.trials == 10


def test_gpvm_axiom_sweep():
    report = run_suite('gpvm', trials=100, seed=0)
    assert report.passed, '\n'.join(str(f) for f in report.failures)
    assert report.notes.count('commuting fixture: exact additivity confirmed') == 25


def test_thread_pool_keeps_trial_order():
    serial = run_suite('funcalc', trials=6, seed=5, workers=1)
    pooled = run_suite('funcalc', trials=6, seed=5, workers=3)
    assert [str(f) for f in serial.failures] == [str(f) for f in pooled.failures]
    assert serial.notes == pooled.notes


def test_run_verify_all():
    reports = run_verify('all', trials=2, seed=3)
    assert [r.name for r in reports] == list(SUITES)
    assert all(r.passed for r in reports)


def test_injected_fault_is_reported():
    with use_config(fault_skew=1.0):
        report = run_suite('lattice', trials=3, seed=0)
    assert not report.passed
    assert {f.trial for f in report.failures} == {0, 1, 2}
    assert str(report.failures[0]).startswith('[lattice trial 0]')
