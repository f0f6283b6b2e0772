from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from gpvm.errors import ChannelInvalid, DimensionMismatch, InvariantViolation, NotHermitian, NotNormalized
from gpvm.fixtures import random_commuting_pair, random_density, random_observable, random_state
from gpvm.joint import GridPartition, JointObservable
from gpvm.linalg import Projector
from gpvm.measure import (NO_OUTCOME, DensityMatrix, MeasurementChannel, ancilla_composite, apply_unselected,
                          build_channel, outcome_probabilities, realize_ancilla, sample_outcomes)


def _random_partition(j, rng):
    n, m = j.shape
    k = int(rng.integers(1, n * m + 1))
    labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n * m - k)])
    rng.shuffle(labels)
    labels = labels.reshape(n, m)
    return GridPartition.from_regions([j.region(labels == b) for b in range(k)])


def _random_channel(rng):
    dim = int(rng.integers(2, 5))
    ka, kb = int(rng.integers(2, dim + 1)), int(rng.integers(2, dim + 1))
    if rng.random() < 0.3:
        j = JointObservable(*random_commuting_pair(dim, ka, kb, rng))
    else:
        j = JointObservable(random_observable(dim, ka, rng), random_observable(dim, kb, rng))
    return build_channel(j, _random_partition(j, rng))


def test_density_matrix_validation():
    assert DensityMatrix.maximally_mixed(3).trace == pytest.approx(1.0)
    DensityMatrix(np.diag([0.3, 0.2]))
    with pytest.raises(NotHermitian):
        DensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(InvariantViolation):
        DensityMatrix(np.diag([1.2, -0.2]))
    with pytest.raises(NotNormalized):
        DensityMatrix(np.diag([0.8, 0.8]))
    with pytest.raises(DimensionMismatch):
        DensityMatrix(np.zeros((2, 3)))


def test_singleton_channel_of_sigma_x_sigma_y(xy_joint, rng):
    c = build_channel(xy_joint, GridPartition.singletons(xy_joint))
    assert all(k.rank == 0 for k in c.kraus)
    np.testing.assert_allclose(c.defect.matrix, np.eye(2), atol=1e-12)
    assert not c.trace_preserving
    rho = DensityMatrix(random_density(2, rng))
    np.testing.assert_allclose(apply_unselected(c, rho).matrix, np.zeros((2, 2)), atol=1e-12)
    probs = outcome_probabilities(c, rho)
    assert probs.none == pytest.approx(1.0)
    hist = sample_outcomes(c, rho, 1000, seed=5)
    assert hist.labels[-1] == NO_OUTCOME
    assert hist.counts[-1] == 1000


def test_b_value_partition_of_sigma_x_sigma_y(xy_joint):
    c = build_channel(xy_joint, GridPartition.cols(xy_joint))
    assert c.trace_preserving
    for k, q in zip(c.kraus, xy_joint.b.projectors):
        np.testing.assert_allclose(k.matrix, q.matrix, atol=1e-9)
    probs = outcome_probabilities(c, DensityMatrix.maximally_mixed(2))
    np.testing.assert_allclose(probs.probabilities, [0.5, 0.5], atol=1e-12)
    assert probs.none == pytest.approx(0.0, abs=1e-12)
    frame = probs.to_frame()
    assert list(frame['label']) == ['b=-1', 'b=1', NO_OUTCOME]


def test_full_partition_is_identity_channel(xy_joint, rng):
    c = build_channel(xy_joint, GridPartition.full(xy_joint))
    rho = DensityMatrix(random_density(2, rng))
    np.testing.assert_allclose(apply_unselected(c, rho).matrix, rho.matrix, atol=1e-12)
    assert outcome_probabilities(c, rho).probabilities.tolist() == pytest.approx([1.0])
    hist = sample_outcomes(c, rho, 500, seed=1)
    assert hist.counts.tolist() == [500, 0]
    u = realize_ancilla(c)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-9)
    np.testing.assert_allclose(ancilla_composite(c, rho, u), rho.matrix, atol=1e-10)


def test_state_in_kraus_range_is_unchanged(zz_joint):
    c = build_channel(zz_joint, GridPartition.singletons(zz_joint))
    rho = DensityMatrix.from_state([0.0, 1.0])
    np.testing.assert_allclose(apply_unselected(c, rho).matrix, rho.matrix, atol=1e-12)


def test_commuting_diagonal_partition_dephases(zz_joint, rng):
    c = build_channel(zz_joint, GridPartition.singletons(zz_joint))
    assert c.trace_preserving
    rho = DensityMatrix(random_density(2, rng))
    dephased = np.diag(np.diag(rho.matrix))
    np.testing.assert_allclose(apply_unselected(c, rho).matrix, dephased, atol=1e-12)
    np.testing.assert_allclose(ancilla_composite(c, rho), dephased, atol=1e-10)


def test_ancilla_isometry_on_ground_block(xy_joint, rng):
    c = build_channel(xy_joint, GridPartition.rows(xy_joint))
    u = realize_ancilla(c)
    anc = len(c.kraus) + 1
    psi = random_state(2, rng)
    out = (u @ np.kron(psi, np.eye(anc)[0])).reshape(2, anc)
    np.testing.assert_allclose(out[:, 0], c.defect.matrix @ psi, atol=1e-12)
    for i, k in enumerate(c.kraus, start=1):
        np.testing.assert_allclose(out[:, i], k.matrix @ psi, atol=1e-12)
    for _ in range(50):
        rho = DensityMatrix(random_density(2, rng))
        np.testing.assert_allclose(ancilla_composite(c, rho, u), apply_unselected(c, rho).matrix, atol=1e-10)


def test_random_channel_properties(rng):
    for _ in range(50):
        c = _random_channel(rng)
        u = realize_ancilla(c)
        assert np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= 1e-9
        rho = DensityMatrix(random_density(c.dim, rng))
        out = apply_unselected(c, rho)
        np.testing.assert_allclose(ancilla_composite(c, rho, u), out.matrix, atol=1e-10)
        assert out.trace <= rho.trace + 1e-10
        assert np.min(np.linalg.eigvalsh(out.matrix)) >= -1e-9
        np.testing.assert_allclose(apply_unselected(c, out).matrix, out.matrix, atol=1e-9)
        probs = outcome_probabilities(c, rho)
        assert probs.probabilities.sum() + probs.none == pytest.approx(1.0, abs=1e-9)
        assert out.trace == pytest.approx(probs.probabilities.sum(), abs=1e-10)


def test_coarser_partition_keeps_more_probability(rng):
    for _ in range(20):
        dim = int(rng.integers(2, 5))
        j = JointObservable(random_observable(dim, 2, rng), random_observable(dim, 2, rng))
        rho = DensityMatrix(random_density(dim, rng))
        fine = outcome_probabilities(build_channel(j, GridPartition.singletons(j)), rho)
        for coarse in (GridPartition.rows(j), GridPartition.cols(j), GridPartition.full(j)):
            total = outcome_probabilities(build_channel(j, coarse), rho).probabilities.sum()
            assert fine.probabilities.sum() <= total + 1e-9


def test_channel_rejects_inconsistent_kraus():
    p = Projector.from_matrix(np.diag([1.0, 0.0]))
    with pytest.raises(ChannelInvalid):
        MeasurementChannel((p, p), Projector.zero(2), ('a', 'b'))
    with pytest.raises(ChannelInvalid):
        MeasurementChannel((p,), Projector.zero(2), ('a',))
    with pytest.raises(ChannelInvalid):
        MeasurementChannel((p,), Projector.from_matrix(np.diag([0.0, 1.0])), ('a', 'b'))


def test_probabilities_need_normalized_state(xy_joint):
    c = build_channel(xy_joint, GridPartition.rows(xy_joint))
    with pytest.raises(NotNormalized):
        outcome_probabilities(c, DensityMatrix(np.diag([0.4, 0.4])))
    with pytest.raises(DimensionMismatch):
        apply_unselected(c, DensityMatrix.maximally_mixed(3))
    with pytest.raises(ValueError):
        sample_outcomes(c, DensityMatrix.maximally_mixed(2), 0, seed=1)


def test_sampling_matches_probabilities(xy_joint, zz_joint, rng):
    fixtures = [
        (build_channel(xy_joint, GridPartition.rows(xy_joint)), DensityMatrix.maximally_mixed(2)),
        (build_channel(zz_joint, GridPartition.singletons(zz_joint)), DensityMatrix(random_density(2, rng))),
        (build_channel(xy_joint, GridPartition.from_regions([xy_joint.from_cells([(0, 0), (0, 1), (1, 0)]),
                                                             xy_joint.from_cells([(1, 1)])])),
         DensityMatrix(random_density(2, rng))),
    ]
    for c, rho in fixtures:
        hist = sample_outcomes(c, rho, 10 ** 6, seed=7)
        expected = outcome_probabilities(c, rho).vector()
        np.testing.assert_allclose(hist.frequencies, expected, atol=5e-3)
        assert hist.counts.sum() == 10 ** 6


def test_sampling_is_reproducible(xy_joint):
    c = build_channel(xy_joint, GridPartition.rows(xy_joint))
    rho = DensityMatrix.maximally_mixed(2)
    first = sample_outcomes(c, rho, 2000, seed=42).to_csv()
    assert first == sample_outcomes(c, rho, 2000, seed=42).to_csv()
    assert first != sample_outcomes(c, rho, 2000, seed=43).to_csv()
    assert first.splitlines()[0] == 'label,count,frequency'
    assert first.splitlines()[-1].startswith('none,0,')
    with ThreadPoolExecutor(max_workers=3) as pool:
        runs = list(pool.map(lambda s: sample_outcomes(c, rho, 2000, seed=s).to_csv(), [42, 42, 42]))
    assert runs == [first] * 3
