import numpy as np
import pytest

from kahler_core import QuadratureRule, integrate_hermitian, integrate_outer, integrate_scalar, round_sphere_rule
from kahler_core.errors import QuadratureFailure
from kahler_core.quadrature import CHART_SPHERE, is_spanning


def cp1_sections(points, k=3):
    return points[:, :1] ** np.arange(k + 1)


def test_round_rule_mass():
    rule = round_sphere_rule(100)
    assert len(rule) == 100
    assert rule.total_mass == pytest.approx(np.pi)
    assert rule.chart_mass(CHART_SPHERE) == pytest.approx(np.pi)
    assert rule.label == "round-sphere(100)"


def test_round_rule_needs_points():
    with pytest.raises(QuadratureFailure):
        round_sphere_rule(2)


def test_integrates_height_function(round_rule):
    # u = |x|^2 / (1 + |x|^2) has mean 1/2 on the round sphere
    value = integrate_scalar(round_rule, lambda p: np.abs(p[:, 0]) ** 2 / (1 + np.abs(p[:, 0]) ** 2))
    assert value == pytest.approx(np.pi / 2, rel=1e-12)


def test_parallel_chunks_match_serial():
    rule = round_sphere_rule(5000, n_theta=2)
    assert len(rule.chunks()) > 1
    vectors = cp1_sections(rule.points)
    density = 1.0 / np.sum(np.abs(vectors) ** 2, axis=1)
    serial = integrate_outer(rule, vectors, density, n_jobs=1)
    threaded = integrate_outer(rule, vectors, density, n_jobs=2)
    assert np.allclose(serial, threaded, rtol=1e-12)


def test_hermitian_and_outer_agree(round_rule):
    vectors = cp1_sections(round_rule.points)

    def outer(points):
        z = cp1_sections(points)
        return z[:, :, None] * z.conj()[:, None, :]

    assert np.allclose(integrate_hermitian(round_rule, outer),
                       integrate_outer(round_rule, vectors, np.ones(len(round_rule))))


def test_non_finite_integrand(round_rule):
    with pytest.raises(QuadratureFailure):
        integrate_scalar(round_rule, lambda p: 1.0 / (np.abs(p[:, 0]) - np.abs(p[0, 0])))


def test_rejects_non_positive_weights():
    x = np.array([[0.5 + 0j], [2.0 + 0j]])
    with pytest.raises(QuadratureFailure):
        QuadratureRule('cp1', x, np.hstack([x, x]), np.zeros(2), np.array([1.0, 0.0]), "bad")


def test_spanning(round_rule):
    assert is_spanning(round_rule, cp1_sections(round_rule.points))
    two_points = round_rule.select(np.arange(len(round_rule)) < 2)
    assert not is_spanning(two_points, cp1_sections(two_points.points))
