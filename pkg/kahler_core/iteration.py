"""Balanced-metric iteration, convergence analysis and eta statistics.

The map T_nu sends G^{-1} to the inverse of R int z conj(z)^T / D dnu,
evaluated against a fixed quadrature rule and projected onto the invariant
parameters of the scheme. Iterates are normalized so the product of the
diagonal parameters is 1.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core_linalg import (HermitianForm, InvariantParams, contract_params, eval_D,
                          expand_params, projective_distance)
from .errors import (ConfigError, InsufficientDecay, MaxStepsExceeded, NotPositiveDefinite,
                     QuadratureFailure, SchemeMismatch)
from .k3_geometry import fs_volume_ratio, section_vectors
from .quadrature import integrate_outer, map_chunks
from .utils import (DEFAULT_MAX_STEPS, DEFAULT_TOL, HISTOGRAM_PRESETS, KAPPA_MAX, REFINE_KAPPA,
                    REFINE_KAPPA_STEPS, bin_labels, histogram_percentages)

logger = logging.getLogger(__name__)

SIGMA_MIN_STEPS = 6
SIGMA_RELATIVE_FLOOR = 1e-8
SIGMA_MAX_MISFIT = 0.35
SIGMA_PIVOT_FLOOR = 1e-3


@dataclass
class IterationTrace:
    params_by_step: list = field(default_factory=list)
    psi_by_step: list = field(default_factory=list)
    step_sizes: list = field(default_factory=list)
    trace_residuals: list = field(default_factory=list)
    sigma: float = None
    direction: np.ndarray = None
    converged: bool = False

    def record(self, params, psi=None, trace_residual=None):
        if self.params_by_step:
            self.step_sizes.append(projective_distance(self.params_by_step[-1], params))
        self.params_by_step.append(params)
        self.psi_by_step.append(psi)
        self.trace_residuals.append(trace_residual)

    @property
    def steps(self):
        return len(self.params_by_step) - 1

    @property
    def final(self):
        return self.params_by_step[-1]

    def rows(self):
        """One row per step: r, parameter values, psi"""
        return [[r, *(float(v) for v in p.values), psi]
                for r, (p, psi) in enumerate(zip(self.params_by_step, self.psi_by_step))]


def fit_sigma(trace):
    """Geometric decay rate and error direction from the tail of a trace.

    Successive differences of sum-normalized iterates decay like sigma^r;
    sigma comes from a least-squares fit of log |d_r| over the last third
    of the differences that stay well above rounding noise. The direction
    sums the differences of that window, so the largest ones dominate; it is
    scaled to unit max-norm with its first significant entry positive.
    """
    if trace.steps < SIGMA_MIN_STEPS:
        raise InsufficientDecay(f"Need at least {SIGMA_MIN_STEPS} steps to fit sigma, got {trace.steps}")
    vectors = np.array([np.asarray(p.values, dtype=float) for p in trace.params_by_step])
    vectors = vectors / vectors.sum(axis=1, keepdims=True)
    diffs = np.diff(vectors, axis=0)
    norms = np.linalg.norm(diffs, axis=1)

    noise = SIGMA_RELATIVE_FLOOR * np.linalg.norm(vectors[-1])
    below = np.flatnonzero(norms <= noise)
    usable = norms[:below[0]] if len(below) else norms
    tail = max(len(usable) // 3, 3)
    if len(usable) < 3:
        raise InsufficientDecay(f"Only {len(usable)} differences above rounding noise")
    r = np.arange(len(usable))[-tail:]
    slope, intercept = np.polyfit(r, np.log(usable[-tail:]), 1)
    misfit = np.max(np.abs(np.log(usable[-tail:]) - (slope * r + intercept)))
    sigma = float(np.exp(slope))
    if not 0 < sigma < 1 or misfit > SIGMA_MAX_MISFIT:
        raise InsufficientDecay(f"Differences are not geometric (sigma={sigma:.3f}, misfit={misfit:.3f})")

    window = diffs[len(usable) - tail:len(usable)].sum(axis=0)
    direction = window / np.max(np.abs(window))
    leading = np.flatnonzero(np.abs(direction) > SIGMA_PIVOT_FLOOR)
    direction = direction * np.sign(direction[leading[0]])
    trace.sigma, trace.direction = sigma, direction
    logger.info(f"Fitted sigma={sigma:.4f} over steps {r[0] + 1}..{r[-1] + 1}")
    return trace.sigma, trace.direction


@lru_cache(maxsize=8)
def rule_sections(rule, k):
    if rule.space == 'cp1':
        return rule.points[:, :1] ** np.arange(k + 1)
    return section_vectors(rule.points, k)


def rule_degree(params, rule):
    basis = params.scheme.basis
    if basis.space != rule.space:
        raise SchemeMismatch(f"Scheme {params.scheme.name} cannot be used with rule {rule.label}")
    return basis.k


def positive_denominators(inverse, sections, rule):
    D = eval_D(inverse, sections)
    if not np.all(np.isfinite(D)) or np.any(D <= 0):
        bad = int(np.argmin(np.where(np.isfinite(D), D, -np.inf)))
        raise QuadratureFailure(f"D is not positive at point {rule.points[bad]} of {rule.label}")
    return D


def hilbert_params(params, rule, n_jobs=1):
    """Projected R int z conj(z)^T / D dnu with R = dim / mass"""
    k = rule_degree(params, rule)
    scheme = params.scheme
    sections = rule_sections(rule, k)
    D = positive_denominators(expand_params(params).entries, sections, rule)
    matrix = integrate_outer(rule, sections, (scheme.dim / rule.total_mass) / D, n_jobs)
    return InvariantParams(scheme, scheme.project(matrix))


def trace_pairing(params, hilbert):
    """sum G^{ab} T_{ab}; equals the section dimension for an exact T_nu step"""
    return float(np.sum(params.values * hilbert.values * params.scheme.class_sizes))


def _t_nu_step(params, rule, n_jobs=1):
    hilbert = hilbert_params(params, rule, n_jobs)
    residual = abs(trace_pairing(params, hilbert) / params.scheme.dim - 1.0)
    form = HermitianForm(hilbert.scheme.expand(hilbert.values), check=False)
    return contract_params(form.inverse_entries, params.scheme).normalized(), residual


def t_nu_step_k3(params, rule, n_jobs=1):
    if rule.space != 'k3':
        raise ConfigError(f"Rule {rule.label} is not a K3 rule")
    return _t_nu_step(params, rule, n_jobs)[0]


def psi_nu(params, rule):
    """sum w log D - mass / dim * log det G^{-1}; invariant under scaling"""
    k = rule_degree(params, rule)
    form = expand_params(params)
    D = positive_denominators(form.entries, rule_sections(rule, k), rule)
    return float(np.sum(rule.weights * np.log(D)) - rule.total_mass / form.dim * form.log_det())


def iterate_to_fixed_point(p0, rule, tol=DEFAULT_TOL, max_steps=DEFAULT_MAX_STEPS, n_jobs=1,
                           min_steps=0, raise_on_max=False):
    """Iterate T_nu until the projective step size drops below tol"""
    if tol <= 0:
        raise ConfigError(f"Tolerance must be positive, got {tol}")
    params = p0.normalized()
    trace = IterationTrace()
    trace.record(params, psi_nu(params, rule))
    for r in range(1, max_steps + 1):
        params, residual = _t_nu_step(params, rule, n_jobs)
        trace.record(params, psi_nu(params, rule), residual)
        logger.info(f"Step {r}: size={trace.step_sizes[-1]:.3e}, psi={trace.psi_by_step[-1]:.8f}")
        if trace.step_sizes[-1] < tol and r >= min_steps:
            trace.converged = True
            break

    if not trace.converged:
        logger.warning(f"No fixed point after {max_steps} steps on {rule.label}; "
                       f"last step size {trace.step_sizes[-1] if trace.step_sizes else float('nan'):.3e}")
        if raise_on_max:
            raise MaxStepsExceeded(f"T_nu did not converge in {max_steps} steps", params=params, trace=trace)
    return params, trace


@dataclass
class EtaReport:
    max: float
    min: float
    mean_abs_dev: float
    edges: tuple
    percentages: np.ndarray
    eta_values: np.ndarray
    normalizer: float
    fs_volume: float

    def as_dict(self):
        return {
            'max': self.max,
            'min': self.min,
            'mean_abs_dev': self.mean_abs_dev,
            'normalizer': self.normalizer,
            'fs_volume': self.fs_volume,
            'histogram': dict(zip(bin_labels(self.edges), (round(float(p), 4) for p in self.percentages))),
        }


def _volume_ratios(params, k, rule, n_jobs):
    inverse = expand_params(params).entries

    def chunk_ratio(chunk):
        return fs_volume_ratio(inverse, k, rule.points[chunk])

    return np.concatenate(map_chunks(rule, chunk_ratio, n_jobs))


def eta_report(params, k, rule, bins=None, n_jobs=1):
    """Statistics of eta = mu / (c nu) with c fixing the nu-mean of eta to 1"""
    if rule_degree(params, rule) != k:
        raise SchemeMismatch(f"Scheme {params.scheme.name} does not match degree {k}")
    edges = tuple(bins if bins is not None else HISTOGRAM_PRESETS.get(k, HISTOGRAM_PRESETS[6]))
    if list(edges) != sorted(edges):
        raise ConfigError(f"Histogram edges must be increasing: {edges}")
    ratio = _volume_ratios(params, k, rule, n_jobs)
    weights = rule.weights
    normalizer = float(np.sum(weights * ratio) / rule.total_mass)
    eta = ratio / normalizer
    report = EtaReport(
        max=float(eta.max()),
        min=float(eta.min()),
        mean_abs_dev=float(np.sum(weights * np.abs(eta - 1)) / rule.total_mass),
        edges=edges,
        percentages=histogram_percentages(eta, weights, edges),
        eta_values=eta,
        normalizer=normalizer,
        fs_volume=normalizer * rule.total_mass,
    )
    logger.info(f"eta on {rule.label}: max={report.max:.4f}, min={report.min:.4f}, "
                f"mean|eta-1|={report.mean_abs_dev:.4f}")
    return report


@dataclass(frozen=True, eq=False)
class EtaCoefficients:
    scheme: object
    values: np.ndarray

    def as_dict(self, scale=1.0):
        return dict(zip(self.scheme.labels, (float(v) * scale for v in self.values)))


def _endpoint_scales(params):
    endpoints = params.scheme.endpoints
    return np.sqrt(params.values[endpoints[:, 0]] * params.values[endpoints[:, 1]])


def eta_coefficients(params, k, rule, report=None, n_jobs=1):
    """R a int (eta - 1) z conj(z)^T / D dnu per class, in rescaled monomials"""
    report = report if report is not None else eta_report(params, k, rule, n_jobs=n_jobs)
    scheme = params.scheme
    sections = rule_sections(rule, k)
    D = positive_denominators(expand_params(params).entries, sections, rule)
    density = (scheme.dim / rule.total_mass) * (report.eta_values - 1.0) / D
    matrix = integrate_outer(rule, sections, density, n_jobs)
    return EtaCoefficients(scheme, _endpoint_scales(params) * scheme.project(matrix))


def refine_step(params, coeffs, kappa):
    """G^{-1} + kappa G^{-1} E G^{-1} with E assembled from eta-coefficients"""
    if not 0 < kappa < KAPPA_MAX:
        raise ConfigError(f"kappa must lie in (0, 2e), got {kappa}")
    if coeffs.scheme is not params.scheme:
        raise SchemeMismatch(f"Coefficients for {coeffs.scheme.name} do not match {params.scheme.name}")
    scheme = params.scheme
    inverse = scheme.expand(params.values)
    error = scheme.expand(coeffs.values / _endpoint_scales(params))
    updated = HermitianForm(inverse + kappa * inverse @ error @ inverse, check=False)
    if not updated.is_positive_definite():
        raise NotPositiveDefinite(f"Refinement with kappa={kappa} left the positive cone")
    return contract_params(updated.entries, scheme).normalized()


@dataclass
class RefinementRecord:
    step: int
    kappa: float
    params: InvariantParams
    coefficients: EtaCoefficients
    report: EtaReport


def kappa_schedule(kappa, steps):
    """Per-step kappa values; a short list repeats its last entry"""
    values = list(np.atleast_1d(kappa).astype(float))
    if not values:
        raise ConfigError("Empty kappa schedule")
    return (values + values[-1:] * steps)[:steps]


def refine(params, rule, kappa=REFINE_KAPPA, steps=REFINE_KAPPA_STEPS, bins=None, n_jobs=1):
    """Repeated refine_step, recording params, eta-coefficients and eta statistics"""
    k = rule_degree(params, rule)
    schedule = kappa_schedule(kappa, steps)
    for value in schedule:
        if not 0 < value < KAPPA_MAX:
            raise ConfigError(f"kappa must lie in (0, 2e), got {value}")

    params = params.normalized()
    report = eta_report(params, k, rule, bins, n_jobs)
    records = [RefinementRecord(0, float('nan'), params, eta_coefficients(params, k, rule, report, n_jobs),
                                report)]
    for step, value in enumerate(schedule, start=1):
        params = refine_step(params, records[-1].coefficients, value)
        report = eta_report(params, k, rule, bins, n_jobs)
        records.append(RefinementRecord(step, value, params,
                                        eta_coefficients(params, k, rule, report, n_jobs), report))
        logger.info(f"Refinement step {step} (kappa={value}): mean|eta-1|={report.mean_abs_dev:.5f}")
    return records
