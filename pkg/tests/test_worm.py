import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_energy_rank, random_orthonormal
from wormlab.dataset import LabeledDataset
from wormlab.errors import ContractError, FitError, InputError
from wormlab.regression import solve_least_squares
from wormlab.synthetic import GeneratorConfig, generate
from wormlab.worm import (
    ClassDictionary,
    WormModel,
    classify_worm,
    energy_profile,
    equivalence_transform,
    fit_worm,
    load_model,
    predict_worm,
    rescaled_regression,
    save_model,
    select_basis,
    weighted_scores,
    worm_decide,
    worm_regress,
)


def _model_from_blocks(blocks, weights, variant="weighted_abs"):
    return WormModel(
        tuple(ClassDictionary(B, w, c) for c, (B, w) in enumerate(zip(blocks, weights))),
        decision_variant=variant,
    )


def _random_model(rng, m=50, ks=(4, 3, 3), variant="weighted_abs"):
    Q = random_orthonormal(rng, m, sum(ks))
    offs = np.concatenate([[0], np.cumsum(ks)])
    blocks = [Q[:, offs[c] : offs[c + 1]] for c in range(len(ks))]
    weights = [np.sort(rng.uniform(0.5, 5.0, k))[::-1] for k in ks]
    return _model_from_blocks(blocks, weights, variant)


# -- select_basis ---------------------------------------------------------------


def test_select_basis_rank_one():
    v = np.array([1.0, 2.0, -2.0])
    A = np.column_stack([v, v, v])
    for tau in (0.1, 0.9, 1.0):
        d = select_basis(A, tau)
        assert d.k == 1
        np.testing.assert_allclose(np.abs(d.basis[:, 0]), np.abs(v) / 3.0, atol=1e-12)
        assert d.weights[0] == pytest.approx(3.0 * np.sqrt(3.0))


def test_select_basis_full_energy_is_numerical_rank():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((10, 3)) @ rng.standard_normal((3, 6))
    assert select_basis(A, 1.0).k == np.linalg.matrix_rank(A) == 3


def test_select_basis_hand_energy():
    # sigma = (3, 1): cumulative energy 9/10, 10/10
    A = np.array([[3.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_allclose(energy_profile(A), [0.9, 1.0])
    assert select_basis(A, 0.9).k == 1
    assert select_basis(A, 0.91).k == 2


def test_select_basis_zero_matrix():
    with pytest.raises(FitError):
        select_basis(np.zeros((4, 3)), 0.9)
    with pytest.raises(ContractError):
        select_basis(np.eye(3), 0.0)


def test_select_basis_sign_convention():
    rng = np.random.default_rng(4)
    d = select_basis(rng.standard_normal((8, 5)), 1.0)
    idx = np.argmax(np.abs(d.basis), axis=0)
    assert np.all(d.basis[idx, np.arange(d.k)] > 0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), tau=st.floats(0.05, 1.0))
def test_select_basis_matches_linear_scan(seed, tau):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((12, 6)) * rng.uniform(0.1, 3.0, 6)
    sigma = np.linalg.svd(A, compute_uv=False)
    assert select_basis(A, tau).k == brute_force_energy_rank(list(sigma), tau)


# -- fit_worm -------------------------------------------------------------------


def test_fit_rank_one_classes():
    u = np.array([1.0, 0.0, 0.0, 0.0])
    v = np.array([0.0, 1.0, 1.0, 0.0])
    X = np.column_stack([u, u, v, v, v])
    model = fit_worm(LabeledDataset(X, [0, 0, 1, 1, 1]), 0.99)
    assert model.assembled.shape == (4, 2)
    assert model.ranks == [1, 1]


def test_fit_noiseless_synthetic_rank_one():
    train, test = generate(GeneratorConfig(seed=8))
    model = fit_worm(train, 0.99)
    assert model.ranks == [1] * 30
    assert model.assembled.shape == (200, 30)
    np.testing.assert_array_equal(predict_worm(model, test.data), test.labels)


def test_fit_too_many_components():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((5, 12))
    with pytest.raises(FitError, match="smaller tau"):
        fit_worm(LabeledDataset(X, np.repeat([0, 1], 6)), 1.0)


def test_fit_requires_two_populated_classes():
    with pytest.raises(FitError):
        fit_worm(LabeledDataset(np.eye(3), [0, 0, 0]))


# -- regress / decide -----------------------------------------------------------


def test_regress_orthonormal_dictionary():
    rng = np.random.default_rng(2)
    model = _random_model(rng)
    y = rng.standard_normal(50)
    np.testing.assert_allclose(worm_regress(model, y).values, model.assembled.T @ y, atol=1e-12)


def test_regress_exact_basis_atom():
    model = _random_model(np.random.default_rng(3))
    res = worm_regress(model, model.dictionaries[0].basis[:, 0])
    expected = np.zeros(model.offsets[-1])
    expected[0] = 1.0
    np.testing.assert_allclose(res.values, expected, atol=1e-12)
    assert res.residual_norm <= 1e-12


def test_regress_matches_least_squares_on_random_dictionary():
    rng = np.random.default_rng(4)
    train = LabeledDataset(rng.standard_normal((50, 20)), np.repeat([0, 1], 10))
    model = fit_worm(train, 0.8)
    y = rng.standard_normal(50)
    np.testing.assert_allclose(
        worm_regress(model, y).values, solve_least_squares(model.assembled, y).values, atol=1e-10
    )


def test_regress_flags_near_identical_subspaces():
    rng = np.random.default_rng(5)
    u = random_orthonormal(rng, 6, 1)
    model = _model_from_blocks([u, u], [np.array([1.0]), np.array([1.0])])
    res = worm_regress(model, rng.standard_normal(6))
    assert res.ill_conditioned
    assert np.all(np.isfinite(res.values))
    # minimum norm splits the weight evenly
    assert res.values[0] == pytest.approx(res.values[1])


def test_decide_hand_arithmetic():
    I = np.eye(3)
    model = _model_from_blocks([I[:, :1], I[:, 1:]], [np.array([1.0]), np.array([2.0, 0.1])])
    decision = worm_decide(model, np.array([0.9, 0.5, 0.5]))
    np.testing.assert_allclose(decision.scores, [0.9, 1.05])
    assert decision.label == 1


def test_decide_zero_block_and_tie():
    I = np.eye(3)
    model = _model_from_blocks([I[:, :1], I[:, 1:]], [np.array([1.0]), np.array([2.0, 1.0])])
    assert worm_decide(model, np.array([0.3, 0.0, 0.0])).label == 0
    assert worm_decide(model, np.array([2.0, 0.5, 1.0])).label == 0  # 2.0 vs 2.0
    with pytest.raises(ContractError):
        worm_decide(model, np.array([1.0, 2.0]))


def test_signed_variant_keeps_sign():
    I = np.eye(3)
    blocks = [I[:, :1], I[:, 1:2]]
    w = [np.array([1.0]), np.array([1.0])]
    coeffs = np.array([-2.0, 1.0])
    assert worm_decide(_model_from_blocks(blocks, w, "weighted_abs"), coeffs).label == 0
    assert worm_decide(_model_from_blocks(blocks, w, "weighted_signed"), coeffs).label == 1


def test_classify_noiseless_points_and_purity():
    train, test = generate(GeneratorConfig(seed=21))
    model = fit_worm(train)
    for j in range(0, 1000, 97):
        assert classify_worm(model, test.data[:, j]) == test.labels[j]
    y = test.data[:, 0]
    a, b = worm_decide(model, worm_regress(model, y)), worm_decide(model, worm_regress(model, y))
    assert a.label == b.label and a.scores.tobytes() == b.scores.tobytes()


def test_sign_flip_invariance_weighted_abs():
    rng = np.random.default_rng(6)
    for _ in range(50):
        model = _random_model(rng)
        y = rng.standard_normal(50)
        label = classify_worm(model, y)
        c = int(rng.integers(0, model.num_classes))
        j = int(rng.integers(0, model.dictionaries[c].k))
        flipped = [d.basis.copy() for d in model.dictionaries]
        flipped[c][:, j] *= -1
        other = _model_from_blocks(flipped, [d.weights for d in model.dictionaries])
        assert classify_worm(other, y) == label


# -- equivalence ------------------------------------------------------------------


def test_equivalence_identity_weights():
    rng = np.random.default_rng(7)
    D = rng.standard_normal((20, 6))
    y = rng.standard_normal(20)
    x = solve_least_squares(D, y).values
    np.testing.assert_array_equal(rescaled_regression(D, np.ones(6), y).values, x)


def test_equivalence_on_model():
    rng = np.random.default_rng(8)
    model = _random_model(rng)
    y = rng.standard_normal(50)
    x = worm_regress(model, y).values
    np.testing.assert_allclose(equivalence_transform(model, y).values, model.weights * x, rtol=1e-10, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_equivalence_property(seed):
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((50, 10))
    w = rng.uniform(0.1, 10.0, 10)
    y = rng.standard_normal(50)
    x = solve_least_squares(D, y).values
    x_new = rescaled_regression(D, w, y).values
    assert np.max(np.abs(x_new - w * x)) <= 1e-8 * np.max(np.abs(w * x))


def test_equivalence_decision_invariance():
    rng = np.random.default_rng(9)
    for _ in range(120):
        model = _random_model(rng, variant="weighted_signed")
        y = rng.standard_normal(50)
        weighted = weighted_scores(model, worm_regress(model, y).values[:, None])[:, 0]
        x_new = equivalence_transform(model, y).values
        unweighted = np.add.reduceat(x_new, model.offsets[:-1])
        np.testing.assert_allclose(weighted, unweighted, rtol=1e-9, atol=1e-12)
        assert np.argmax(weighted) == np.argmax(unweighted)


def test_rescaled_regression_validation():
    with pytest.raises(ContractError):
        rescaled_regression(np.eye(3), np.ones(2), np.ones(3))
    with pytest.raises(InputError):
        rescaled_regression(np.eye(3), np.array([1.0, 0.0, 1.0]), np.ones(3))


# -- invariants ---------------------------------------------------------------------


def test_class_dictionary_invariants():
    with pytest.raises(ContractError):
        ClassDictionary(np.ones((3, 1)), np.array([1.0]))
    with pytest.raises(ContractError):
        ClassDictionary(np.eye(3)[:, :2], np.array([1.0, 2.0]))
    with pytest.raises(ContractError):
        ClassDictionary(np.eye(3)[:, :1], np.array([0.0]))


def test_rank_monotone_in_tau():
    rng = np.random.default_rng(10)
    for _ in range(30):
        A = rng.standard_normal((15, 8)) * rng.uniform(0.1, 2.0, 8)
        ks = [select_basis(A, t).k for t in np.linspace(0.05, 1.0, 25)]
        assert ks == sorted(ks)


# -- serialization --------------------------------------------------------------------


def test_model_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(11)
    train = LabeledDataset(rng.standard_normal((30, 12)), np.repeat([0, 1, 2], 4))
    model = fit_worm(train, 0.9, "weighted_signed")
    path = save_model(model, tmp_path / "m.json")
    back = load_model(path)
    assert back.energy_threshold == model.energy_threshold
    assert back.decision_variant == model.decision_variant
    assert back.ranks == model.ranks
    for a, b in zip(model.dictionaries, back.dictionaries):
        assert a.basis.tobytes() == b.basis.tobytes()
        assert a.weights.tobytes() == b.weights.tobytes()
        assert a.class_id == b.class_id


def test_load_rejects_foreign_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"format": "other"}')
    with pytest.raises(InputError):
        load_model(p)
    p.write_text("not json")
    with pytest.raises(InputError):
        load_model(p)
