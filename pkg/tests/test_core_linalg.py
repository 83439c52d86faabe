import numpy as np
import pytest

from kahler_core import (HermitianForm, InvariantParams, NotInvariant, NotPositiveDefinite, NotSelfAdjoint,
                         SchemeMismatch, contract_params, eval_D, expand_params, k3_scheme, projective_distance,
                         symmetric_eigen)
from kahler_core.core_linalg import invert


def random_positive_form(dim, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return A @ A.conj().T + dim * np.eye(dim)


def test_inverse_and_log_det():
    M = random_positive_form(6)
    form = HermitianForm(M)
    assert np.allclose(form.entries @ form.inverse_entries, np.eye(6), atol=1e-10)
    assert form.log_det() == pytest.approx(np.linalg.slogdet(M)[1])


def test_invert_swaps_form_and_inverse():
    M = random_positive_form(4, seed=3)
    form = HermitianForm(M)
    inverse = invert(form)
    assert np.allclose(inverse.entries, form.inverse_entries)
    assert np.allclose(invert(inverse).entries, M)


def test_non_hermitian_rejected():
    M = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(NotSelfAdjoint):
        HermitianForm(M)


def test_indefinite_form():
    form = HermitianForm(np.diag([1.0, -1.0]))
    assert not form.is_positive_definite()
    with pytest.raises(NotPositiveDefinite):
        form.log_det()


def test_eval_D_identity_is_norm():
    z = np.array([[1 + 1j, 2.0, -1j], [0.5, 0.0, 3.0]])
    assert np.allclose(eval_D(np.eye(3), z), np.sum(np.abs(z) ** 2, axis=1))


def test_eigenvalues_sorted_by_magnitude():
    eigen = symmetric_eigen(np.diag([1.0, -3.0, 2.0]))
    assert list(eigen.eigenvalues) == [-3.0, 2.0, 1.0]
    assert np.allclose(eigen.reconstruct(), np.diag([1.0, -3.0, 2.0]))


def test_invariant_params_validation():
    scheme = k3_scheme(3)
    with pytest.raises(SchemeMismatch):
        InvariantParams(scheme, [1.0, 2.0])
    with pytest.raises(NotPositiveDefinite):
        InvariantParams(scheme, [1.0, -1.0, 1.0, 1.0])


def test_normalization_fixes_diagonal_product():
    params = InvariantParams(k3_scheme(6), np.linspace(2.0, 12.0, 11))
    normalized = params.normalized()
    assert np.prod(normalized.diagonal_values) == pytest.approx(1.0)
    assert projective_distance(params, normalized) == pytest.approx(0.0, abs=1e-12)
    assert normalized.as_dict()['C'] == pytest.approx(normalized.values[-1])


def test_contract_expanded_params():
    params = InvariantParams(k3_scheme(6), np.linspace(2.0, 12.0, 11))
    contracted = contract_params(expand_params(params), params.scheme)
    assert np.allclose(contracted.values, params.values)


def test_contract_rejects_non_invariant_matrix():
    scheme = k3_scheme(3)
    H = np.eye(scheme.dim)
    H[0, 0] = 2.0
    with pytest.raises(NotInvariant) as info:
        contract_params(H, scheme)
    assert info.value.deviation > 0.1


def test_projective_distance():
    assert projective_distance([1.0, 1.0], [1.0, 1.05]) == pytest.approx(1 / 41)
    assert projective_distance([1.0, 1.0], [3.0, 3.15]) == pytest.approx(1 / 41)
    assert projective_distance([1.0, 6.0, 15.0, 20.0], [2.0, 12.0, 30.0, 40.0]) == pytest.approx(0.0, abs=1e-12)
    assert projective_distance([1.0, 6.0, 15.0, 20.0], [1.0, 6.0, 15.0, 21.0]) == pytest.approx(1 / 41)
