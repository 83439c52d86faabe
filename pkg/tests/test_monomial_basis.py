import numpy as np
import pytest

from kahler_core import ConfigError, SchemeMismatch, gamma_generators, get_scheme, k3_scheme, monomial_basis
from kahler_core.monomial_basis import BIG, SMALL, section_dimension


@pytest.mark.parametrize("k, dim, n_params", [(3, 11, 4), (6, 38, 11), (9, 83, 26)])
def test_scheme_sizes(k, dim, n_params):
    scheme = k3_scheme(k)
    assert section_dimension(k) == dim
    assert monomial_basis(k).dim == dim
    assert scheme.n_params == n_params
    assert np.all(scheme.class_sizes > 0)


def test_basis_order_big_triangle_first():
    basis = monomial_basis(3)
    assert basis.labels()[0] == "x^0y^0"
    assert basis.labels()[-1] == "w*x^0y^0"
    assert basis.big.sum() == 10
    assert basis.index(SMALL, 0, 0) == 10
    assert basis.homogeneous(basis.index(BIG, 1, 2)) == (1, 2, 0)


def test_unknown_monomial_raises():
    with pytest.raises(ConfigError):
        monomial_basis(6).index(BIG, 7, 0)


def test_cp1_basis():
    basis = monomial_basis(4, 'cp1')
    assert basis.dim == 5
    assert basis.labels() == ["x^0", "x^1", "x^2", "x^3", "x^4"]


def test_degree_six_classes():
    scheme = k3_scheme(6)
    sizes = dict(zip(scheme.labels, scheme.class_sizes))
    assert sizes['a_VII'] == 3
    assert sizes['C'] == 6
    c = scheme.labels.index('C')
    a_vii = scheme.labels.index('a_VII')
    assert list(scheme.endpoints[c]) == [a_vii, a_vii]
    assert not scheme.diagonal[c]


@pytest.mark.parametrize("k", [3, 6, 9])
def test_expanded_matrices_are_gamma_invariant(k):
    scheme = k3_scheme(k)
    rng = np.random.default_rng(k)
    H = scheme.expand(rng.uniform(0.5, 2.0, scheme.n_params))
    for name, U in gamma_generators(scheme.basis).items():
        image = U.T @ H @ U.conj()
        assert np.allclose(image, H, atol=1e-12), name


def test_project_recovers_parameters():
    scheme = k3_scheme(6)
    values = np.linspace(1.0, 3.0, scheme.n_params)
    assert np.allclose(scheme.project(scheme.expand(values)), values)
    assert scheme.invariance_deviation(scheme.expand(values)) == pytest.approx(0.0, abs=1e-14)


def test_invariance_deviation_detects_broken_symmetry():
    scheme = k3_scheme(3)
    H = scheme.expand(np.ones(scheme.n_params))
    H[0, 1] = H[1, 0] = 0.5
    assert scheme.invariance_deviation(H) > 0.1


def test_get_scheme_by_name():
    assert get_scheme('K3k6') is k3_scheme(6)
    assert get_scheme('CP1Diag(4)').n_params == 5
    with pytest.raises(SchemeMismatch):
        get_scheme('P2k3')
    with pytest.raises(SchemeMismatch):
        k3_scheme(5)


def test_expand_rejects_wrong_length():
    with pytest.raises(SchemeMismatch):
        k3_scheme(3).expand([1.0, 2.0])
