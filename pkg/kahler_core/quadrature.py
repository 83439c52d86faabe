import logging
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .errors import QuadratureFailure
from .utils import CHUNK_SIZE

logger = logging.getLogger(__name__)

CHART_BIG, CHART_SMALL, CHART_SPHERE = 0, 1, 2


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Weighted point set nu* = sum w_i delta_{z_i}.

    `points` holds the ambient affine coordinates used to evaluate sections:
    (x,) on CP^1 and (x, y, w) on the K3 surface. `chart_coords` are the
    coordinates of the chart each point was generated in.
    """
    space: str
    points: np.ndarray
    chart_coords: np.ndarray
    charts: np.ndarray
    weights: np.ndarray
    label: str
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.weights) == 0:
            raise QuadratureFailure(f"Rule {self.label} has no points")
        if np.any(self.weights <= 0):
            raise QuadratureFailure(f"Rule {self.label} has non-positive weights")
        object.__setattr__(self, 'total_mass', float(np.sum(self.weights)))

    def __len__(self):
        return len(self.weights)

    def chunks(self, size=CHUNK_SIZE):
        return [slice(start, min(start + size, len(self))) for start in range(0, len(self), size)]

    def chart_mass(self, chart):
        return float(np.sum(self.weights[self.charts == chart]))

    def select(self, mask):
        return QuadratureRule(self.space, self.points[mask], self.chart_coords[mask],
                              self.charts[mask], self.weights[mask], f"{self.label}[subset]")


def map_chunks(rule, func, n_jobs):
    slices = rule.chunks()
    if n_jobs == 1 or len(slices) == 1:
        return [func(s) for s in slices]
    return Parallel(n_jobs=n_jobs, prefer="threads")(delayed(func)(s) for s in slices)


def _check_finite(values, rule, chunk):
    bad = ~np.isfinite(values)
    if np.any(bad):
        first = np.argwhere(bad.reshape(len(bad), -1).any(axis=1))[0, 0]
        point = rule.points[chunk][first]
        raise QuadratureFailure(f"Integrand not finite at point {point} of {rule.label}")


def integrate_scalar(rule, f, n_jobs=1):
    """sum_i w_i f(z_i); f maps an (n, m) block of points to n values"""
    def partial(chunk):
        values = np.asarray(f(rule.points[chunk]), dtype=float)
        _check_finite(values, rule, chunk)
        return np.sum(rule.weights[chunk] * values)

    return float(np.sum(map_chunks(rule, partial, n_jobs)))


def integrate_hermitian(rule, F, n_jobs=1, orbit_average=None):
    """Entrywise weighted sum of Hermitian matrices F(z_i); F maps n points to (n, d, d)"""
    def partial(chunk):
        values = np.asarray(F(rule.points[chunk]))
        _check_finite(values, rule, chunk)
        return np.einsum('i,ijk->jk', rule.weights[chunk], values)

    total = np.sum(np.stack(map_chunks(rule, partial, n_jobs)), axis=0)
    total = (total + total.conj().T) / 2
    return orbit_average(total) if orbit_average is not None else total


def integrate_outer(rule, vectors, density, n_jobs=1, orbit_average=None):
    """sum_i w_i density_i z_i conj(z_i)^T for precomputed section vectors z_i"""
    vectors = np.asarray(vectors)
    scaled = rule.weights * np.asarray(density, dtype=float)

    def partial(chunk):
        block = vectors[chunk]
        _check_finite(scaled[chunk], rule, chunk)
        return (block * scaled[chunk][:, None]).T @ block.conj()

    total = np.sum(np.stack(map_chunks(rule, partial, n_jobs)), axis=0)
    total = (total + total.conj().T) / 2
    return orbit_average(total) if orbit_average is not None else total


def is_spanning(rule, vectors):
    """Whether the Gram matrix of z/|z| against the rule is positive definite"""
    vectors = np.asarray(vectors)
    norms = np.sum(np.abs(vectors) ** 2, axis=1)
    gram = integrate_outer(rule, vectors, 1.0 / norms)
    return bool(np.min(np.linalg.eigvalsh(gram)) > 1e-12 * np.max(np.abs(gram)))


def round_sphere_rule(n, n_theta=1):
    """Midpoint rule for the round area form on CP^1 in the affine coordinate x.

    With u = |x|^2 / (1 + |x|^2) the round measure is pi du dtheta / (2 pi),
    so cells of equal width in u carry equal weight. The grid is symmetric
    under u -> 1 - u, i.e. under x -> 1/x.
    """
    if n < 4:
        raise QuadratureFailure(f"Round-sphere rule needs n >= 4, got {n}")
    u = (np.arange(n) + 0.5) / n
    radius = np.sqrt(u / (1.0 - u))
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    x = (radius[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = np.full(x.shape, np.pi / (n * n_theta))
    label = f"round-sphere({n})" if n_theta == 1 else f"round-sphere({n},{n_theta})"
    return QuadratureRule('cp1', x[:, None], np.stack([x, np.zeros_like(x)], axis=1),
                          np.full(x.shape, CHART_SPHERE), weights, label)
