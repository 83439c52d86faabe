"""S^1-invariant metrics on H^0(O(k)) over CP^1.

A diagonal metric is given by the entries a_p of G^{-1}, so that
D(x) = sum_p a_p |x|^{2p}. Every integrand reduces to a function of
t = |x|^2, and the substitution u = t / (1 + t) maps the sphere to [0, 1]
with the round area uniform in u.
"""
import logging
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as poly
from scipy.special import comb

from .errors import ConfigError, ExponentMismatch, NumericalError, QuadratureFailure
from .iteration import IterationTrace, fit_sigma
from .quadrature import round_sphere_rule
from .utils import TOY_START, TOY_VARIANTS, symmetric_completion

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 400
TAU_SERIES_RADIUS = 1e-3


@dataclass(frozen=True, eq=False)
class DiagMetric:
    k: int
    a: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.shape != (self.k + 1,):
            raise ConfigError(f"Degree {self.k} metric needs {self.k + 1} coefficients, got {a.shape}")
        if np.any(a <= 0):
            raise ConfigError(f"Metric coefficients must be positive: {a}")
        if self.symmetric:
            a = (a + a[::-1]) / 2
        object.__setattr__(self, 'a', a)

    @classmethod
    def from_half(cls, half, k):
        """Symmetric metric from a_0..a_{k//2}"""
        if len(half) != k // 2 + 1:
            raise ConfigError(f"Degree {k} needs {k // 2 + 1} leading coefficients, got {len(half)}")
        return cls(k, symmetric_completion(half, k), symmetric=True)

    @classmethod
    def round(cls, k):
        return cls(k, comb(k, np.arange(k + 1)), symmetric=True)

    @property
    def values(self):
        return self.a

    @property
    def half(self):
        return self.a[:self.k // 2 + 1]

    def D(self, t):
        return poly.polyval(t, self.a)

    def normalized(self, total=None):
        total = 2.0 ** self.k if total is None else total
        return DiagMetric(self.k, self.a * (total / self.a.sum()), self.symmetric)


def _radial_grid(resolution):
    """Midpoints in u and the corresponding t = u / (1 - u)"""
    if resolution < 4:
        raise ConfigError(f"Radial resolution must be >= 4, got {resolution}")
    u = (np.arange(resolution) + 0.5) / resolution
    return u / (1.0 - u), np.full(resolution, 1.0 / resolution)


def _checked_D(metric, t):
    D = metric.D(t)
    if not np.all(np.isfinite(D)) or np.any(D <= 0):
        raise QuadratureFailure(f"D underflow or overflow for metric {metric.a}")
    return D


def _hilbert(metric, t, weights):
    """Diagonal of R * int t^p / D against a radial measure; R fixes the trace identity"""
    D = _checked_D(metric, t)
    powers = t[None, :] ** np.arange(metric.k + 1)[:, None]
    integrals = powers @ (weights / D)
    return (metric.k + 1) / np.sum(weights) * integrals


def fs_density(metric, t):
    """Fubini-Study area density in u: v'(t) (1 + t)^2 with v = t D'/D"""
    D = _checked_D(metric, t)
    d1 = poly.polyval(t, poly.polyder(metric.a))
    d2 = poly.polyval(t, poly.polyder(metric.a, 2))
    dv = d1 / D + t * d2 / D - t * (d1 / D) ** 2
    return dv * (1.0 + t) ** 2


def hilbert_fs(metric, resolution=DEFAULT_RESOLUTION):
    t, du = _radial_grid(resolution)
    return _hilbert(metric, t, du * fs_density(metric, t))


def hilbert_nu(metric, rule):
    if rule.space != 'cp1':
        raise ConfigError(f"Rule {rule.label} is not a CP^1 rule")
    t = np.abs(rule.points[:, 0]) ** 2
    return _hilbert(metric, t, rule.weights)


def hilbert_canonical(metric, p_exponent, resolution=DEFAULT_RESOLUTION):
    if p_exponent == 0 or metric.k != -2 * p_exponent:
        raise ExponentMismatch(f"O({metric.k}) is not K^{p_exponent} on CP^1")
    t, du = _radial_grid(resolution)
    density = _checked_D(metric, t) ** (1.0 / p_exponent) * (1.0 + t) ** 2
    return _hilbert(metric, t, du * density)


def _from_hilbert(metric, diagonal):
    return DiagMetric(metric.k, 1.0 / diagonal, metric.symmetric).normalized()


def t_step_fs(metric, resolution=DEFAULT_RESOLUTION):
    """One step of T = Hilb o FS with the Fubini-Study volume of the current metric"""
    return _from_hilbert(metric, hilbert_fs(metric, resolution))


def t_nu_step(metric, rule):
    return _from_hilbert(metric, hilbert_nu(metric, rule))


def t_canonical_step(metric, p_exponent=-3, resolution=DEFAULT_RESOLUTION):
    """T_K step with volume form D^{1/p} times the Euclidean area in x"""
    return _from_hilbert(metric, hilbert_canonical(metric, p_exponent, resolution))


def psi_nu_diag(metric, rule):
    D = _checked_D(metric, np.abs(rule.points[:, 0]) ** 2)
    return float(np.sum(rule.weights * np.log(D))
                 - rule.total_mass / (metric.k + 1) * np.sum(np.log(metric.a)))


def tau_closed_form(s):
    """The k = 2 map s -> tau(s) on metrics a = (1/2, s, 1/2).

    Written with arccosh; for s < 1 the same expression is evaluated with
    arccosh(s) = i arccos(s), which keeps the ratio real.
    """
    if s <= 0:
        raise ConfigError(f"tau is defined for s > 0, got {s}")
    a = np.arccosh(complex(s))
    a2 = (a * a).real
    if abs(a2) < TAU_SERIES_RADIUS:
        return ((4 / 3 + 8 * a2 / 15 + 23 * a2 ** 2 / 210)
                / (4 / 3 + 4 * a2 / 15 + 8 * a2 ** 2 / 315))
    root = np.sqrt(complex(s * s - 1.0))
    value = (s * a + root * (s * s - 2.0)) / (2.0 * s * root - 2.0 * a)
    if abs(value.imag) > 1e-10 * abs(value.real):
        raise NumericalError(f"tau({s}) is not real: {value}")
    return float(value.real)


def tau_iterates(s0, steps):
    values = [float(s0)]
    for _ in range(steps):
        values.append(tau_closed_form(values[-1]))
    return values


def tau_numeric(s, resolution=4000):
    """tau(s) from a numerically integrated T step at k = 2"""
    image = t_step_fs(DiagMetric(2, (0.5, s, 0.5)), resolution)
    return image.a[1] / (2.0 * image.a[0])


def q_matrix_cp1(k):
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    i = np.arange(k + 1)
    binom = comb(k, i)
    return (k + 1) / (2 * k + 1) * np.outer(binom, binom) / comb(2 * k, i[:, None] + i[None, :])


def chi(m, k):
    if not 0 <= m <= k:
        raise ConfigError(f"chi needs 0 <= m <= k, got m={m}, k={k}")
    kp = k + 1
    r = np.arange(1, m + 1)
    return float(np.prod((kp - r) / (kp + r)))


def lambda_mk(m, k):
    return float(-2 * (k + 1) * np.log(chi(m, k)))


def toy_step_function(variant, resolution=DEFAULT_RESOLUTION, rule=None):
    """The map DiagMetric -> DiagMetric for one of the three toy iterations"""
    if variant == 't':
        return lambda m: t_step_fs(m, resolution)
    if variant == 't_nu':
        rule = rule if rule is not None else round_sphere_rule(resolution)
        return lambda m: t_nu_step(m, rule)
    if variant == 't_k':
        return lambda m: t_canonical_step(m, -m.k // 2, resolution)
    raise ConfigError(f"Unknown toy variant '{variant}'; expected one of {TOY_VARIANTS}")


def toy_trace(variant, k=6, start=None, steps=40, resolution=DEFAULT_RESOLUTION, rule=None):
    """Run a toy iteration from a symmetric start, recording every step"""
    step = toy_step_function(variant, resolution, rule)
    start = TOY_START[variant] if start is None else start
    metric = DiagMetric.from_half(start, k) if len(start) < k + 1 else DiagMetric(k, start)
    psi_rule = round_sphere_rule(resolution) if variant == 't_nu' and rule is None else rule

    trace = IterationTrace()
    trace.record(metric, psi_nu_diag(metric, psi_rule) if variant == 't_nu' else None)
    for r in range(steps):
        metric = step(metric)
        trace.record(metric, psi_nu_diag(metric, psi_rule) if variant == 't_nu' else None)
        logger.debug(f"toy {variant} step {r + 1}: {np.round(metric.half, 5)}")
    logger.info(f"Toy {variant} iteration: {steps} steps, last step size {trace.step_sizes[-1]:.3e}"
                if steps else f"Toy {variant} iteration: start only")
    return trace


def toy_sigma(variant, k=6, steps=40, resolution=DEFAULT_RESOLUTION):
    trace = toy_trace(variant, k, steps=steps, resolution=resolution)
    return fit_sigma(trace)
