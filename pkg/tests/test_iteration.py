import numpy as np
import pytest
from scipy.special import comb

from kahler_core import (ConfigError, EtaCoefficients, EtaReport, InsufficientDecay, InvariantParams,
                         IterationTrace, MaxStepsExceeded, NotPositiveDefinite, SchemeMismatch, cp1_scheme,
                         chern_weil_volume, eta_coefficients, eta_report, fit_sigma, iterate_to_fixed_point,
                         k3_scheme, projective_distance, RuleCache, psi_nu, refine, refine_step, t_nu_step_k3)
from kahler_core.iteration import hilbert_params, kappa_schedule, trace_pairing
from kahler_core.reference import load_reference
from kahler_core.utils import DEFAULT_RULES


def synthetic_trace(sigma, steps=20, mode=(1.0, -1.0, -1.0, 1.0)):
    scheme = cp1_scheme(3)
    base, mode = np.array([1.0, 3.0, 3.0, 1.0]), np.asarray(mode)
    trace = IterationTrace()
    for r in range(steps + 1):
        trace.record(InvariantParams(scheme, base + 0.1 * sigma ** r * mode))
    return trace


def test_fit_sigma_recovers_geometric_rate():
    trace = synthetic_trace(0.5)
    sigma, direction = fit_sigma(trace)
    assert sigma == pytest.approx(0.5, rel=1e-6)
    assert np.allclose(direction, [1.0, -1.0, -1.0, 1.0])
    assert trace.sigma == sigma


def test_fit_sigma_direction_with_vanishing_first_entry():
    _, direction = fit_sigma(synthetic_trace(0.6, mode=(0.0, -2.0, 2.0, 0.0)))
    assert np.allclose(direction, [0.0, 1.0, -1.0, 0.0], atol=1e-6)


def test_fit_sigma_direction_ignores_rounding_floor():
    _, direction = fit_sigma(synthetic_trace(0.3, steps=60))
    assert np.allclose(direction, [1.0, -1.0, -1.0, 1.0], atol=1e-6)
    assert np.sum(direction) == pytest.approx(0.0, abs=1e-8)


def test_fit_sigma_needs_decay():
    with pytest.raises(InsufficientDecay):
        fit_sigma(synthetic_trace(0.5, steps=3))
    with pytest.raises(InsufficientDecay):
        fit_sigma(synthetic_trace(1.2, steps=12))


def test_round_metric_converges_immediately(round_rule):
    params = InvariantParams(cp1_scheme(6), comb(6, np.arange(7)))
    final, trace = iterate_to_fixed_point(params, round_rule)
    assert trace.converged
    assert trace.steps <= 2
    assert projective_distance(params, final) < 1e-4


def test_psi_decreases_and_trace_identity(round_rule):
    start = InvariantParams(cp1_scheme(6), (0.018, 0.5, 4.5, 54.0, 4.5, 0.5, 0.018))
    final, trace = iterate_to_fixed_point(start, round_rule, tol=1e-8, max_steps=60)
    assert trace.converged
    assert np.all(np.diff(trace.psi_by_step) <= 1e-10)
    assert all(r < 1e-8 for r in trace.trace_residuals[1:])
    assert projective_distance(comb(6, np.arange(7)), final) < 1e-3


def test_psi_is_scale_invariant(k3_rule, identity_k3):
    params = identity_k3(3)
    assert psi_nu(params.scaled(3.7), k3_rule) == pytest.approx(psi_nu(params, k3_rule), rel=1e-10)


def test_k3_step(k3_rule, identity_k3):
    params = identity_k3(3)
    hilbert = hilbert_params(params, k3_rule)
    assert trace_pairing(params, hilbert) == pytest.approx(params.scheme.dim, rel=1e-10)
    image = t_nu_step_k3(params, k3_rule)
    assert np.prod(image.diagonal_values) == pytest.approx(1.0)
    assert np.all(image.values > 0)


def test_k3_step_rejects_sphere_rule(round_rule, identity_k3):
    with pytest.raises(ConfigError):
        t_nu_step_k3(identity_k3(3), round_rule)
    with pytest.raises(SchemeMismatch):
        psi_nu(identity_k3(3), round_rule)


def test_max_steps(k3_rule, identity_k3):
    with pytest.raises(MaxStepsExceeded) as info:
        iterate_to_fixed_point(identity_k3(3), k3_rule, max_steps=1, raise_on_max=True)
    assert info.value.params is not None
    assert info.value.trace.steps == 1
    with pytest.raises(ConfigError):
        iterate_to_fixed_point(identity_k3(3), k3_rule, tol=0.0)


def test_eta_report(k3_rule, identity_k3):
    params = identity_k3(3)
    report = eta_report(params, 3, k3_rule)
    weights = k3_rule.weights
    assert np.sum(weights * report.eta_values) / k3_rule.total_mass == pytest.approx(1.0)
    assert report.min <= 1.0 <= report.max
    assert report.percentages.sum() == pytest.approx(100.0)
    assert len(report.as_dict()['histogram']) == len(report.edges) + 1
    assert report.fs_volume == pytest.approx(report.normalizer * k3_rule.total_mass)
    with pytest.raises(SchemeMismatch):
        eta_report(params, 6, k3_rule)
    with pytest.raises(ConfigError):
        eta_report(params, 3, k3_rule, bins=(1.0, 0.5))


def test_eta_coefficients_vanish_for_constant_eta(k3_rule, identity_k3):
    params = identity_k3(3)
    flat = EtaReport(1.0, 1.0, 0.0, (1.0,), np.array([0.0, 100.0]), np.ones(len(k3_rule)), 1.0,
                     k3_rule.total_mass)
    coeffs = eta_coefficients(params, 3, k3_rule, report=flat)
    assert np.allclose(coeffs.values, 0.0)


def test_refine_step_with_zero_coefficients(identity_k3):
    params = InvariantParams(identity_k3(3).scheme, [13.26, 8.812, 4.956, 2.412])
    zero = EtaCoefficients(params.scheme, np.zeros(4))
    assert projective_distance(params, refine_step(params, zero, 2.5)) < 1e-12


def test_refine_step_validation(identity_k3):
    params = identity_k3(3)
    zero = EtaCoefficients(params.scheme, np.zeros(4))
    with pytest.raises(ConfigError):
        refine_step(params, zero, 2 * np.e)
    with pytest.raises(ConfigError):
        refine_step(params, zero, 0.0)
    with pytest.raises(SchemeMismatch):
        refine_step(identity_k3(6), zero, 1.0)
    with pytest.raises(NotPositiveDefinite):
        refine_step(params, EtaCoefficients(params.scheme, -np.ones(4)), 2.5)


def test_kappa_schedule():
    assert kappa_schedule([2.5, 1.0], 4) == [2.5, 1.0, 1.0, 1.0]
    assert kappa_schedule(2.5, 2) == [2.5, 2.5]


def test_refine_records(k3_rule, identity_k3):
    balanced = InvariantParams(identity_k3(3).scheme, [13.26, 8.812, 4.956, 2.412])
    records = refine(balanced, k3_rule, kappa=0.5, steps=2)
    assert [record.step for record in records] == [0, 1, 2]
    assert np.isnan(records[0].kappa)
    assert [record.kappa for record in records[1:]] == [0.5, 0.5]
    assert all(np.prod(record.params.diagonal_values) == pytest.approx(1.0) for record in records)
    assert projective_distance(records[0].params, records[1].params) > 0
    with pytest.raises(ConfigError):
        refine(balanced, k3_rule, kappa=[1.0, 6.0], steps=2)


@pytest.fixture(scope="module")
def default_rules():
    cache = RuleCache()
    return lambda k: cache.get(DEFAULT_RULES[k])


@pytest.fixture(scope="module")
def balanced_k6(default_rules):
    scheme = k3_scheme(6)
    start = InvariantParams(scheme, scheme.diagonal.astype(float))
    return iterate_to_fixed_point(start, default_rules(6), tol=1e-7, min_steps=8)


def test_psi_decreases_on_k3(k3_rule, identity_k3):
    _, trace = iterate_to_fixed_point(identity_k3(3), k3_rule, tol=1e-6)
    psi = np.array(trace.psi_by_step)
    assert trace.converged
    assert np.all(np.diff(psi) <= 1e-9 * np.max(np.abs(psi)))


@pytest.mark.slow
def test_k3_degree_three_balance(default_rules, identity_k3):
    table = load_reference('k3_balance_k3')
    final, trace = iterate_to_fixed_point(identity_k3(3), default_rules(3), tol=1e-6)
    assert trace.converged
    assert projective_distance(table['rows'][1][1:], trace.params_by_step[1]) < 0.005
    assert projective_distance(table['rows'][-1][1:], final) < 0.005


@pytest.mark.slow
def test_k3_degree_three_eta_statistics(identity_k3):
    stats = load_reference('eta_stats_k3')
    rule = RuleCache().get(tuple(stats['rule']))
    final, _ = iterate_to_fixed_point(identity_k3(3), rule, tol=1e-7)
    report = eta_report(final, 3, rule)
    assert report.normalizer == pytest.approx(stats['normalizer'], rel=0.005)
    assert report.max == pytest.approx(stats['max'], rel=0.02)
    assert report.min == pytest.approx(stats['min'], rel=0.02)
    assert report.mean_abs_dev == pytest.approx(stats['mean'], rel=0.02)
    assert report.fs_volume == pytest.approx(chern_weil_volume(3), rel=0.01)


@pytest.mark.slow
def test_k3_degree_six_balance(balanced_k6):
    table = load_reference('k3_balance_k6')
    final, trace = balanced_k6
    assert projective_distance(table['fine_fixed_point'], final) < 0.005
    sigma, _ = fit_sigma(trace)
    assert sigma == pytest.approx(table['sigma'], abs=0.05)


@pytest.mark.slow
def test_k3_degree_six_eta(default_rules, balanced_k6):
    stats = load_reference('eta_stats_k6')
    final, _ = balanced_k6
    report = eta_report(final, 6, default_rules(6))
    assert report.max == pytest.approx(stats['max'], rel=0.03)
    assert report.min == pytest.approx(stats['min'], rel=0.03)
    assert report.mean_abs_dev == pytest.approx(stats['mean'], rel=0.03)
    assert np.allclose(report.percentages, stats['percentages'], atol=1.0)

    table = load_reference('eta_coefficients_k6')
    coeffs = eta_coefficients(final, 6, default_rules(6), report).as_dict(scale=table['scale'])
    computed = np.array([coeffs[label] for label in table['columns'][1:]])
    published = np.array(table['rows'][0][1:])
    assert np.allclose(computed, published, rtol=0.1, atol=0.5)


@pytest.mark.slow
def test_k3_degree_six_refinement(default_rules, balanced_k6):
    table = load_reference('refine_k6')
    coefficients = load_reference('eta_coefficients_k6')
    labels = coefficients['columns'][1:]
    records = refine(balanced_k6[0], default_rules(6), kappa=table['kappa'], steps=len(table['rows']) - 1)
    for record, row in zip(records, table['rows']):
        assert projective_distance(row[1:], record.params) < 0.01, record.step
    for record, row in zip(records, coefficients['rows']):
        computed = record.coefficients.as_dict(scale=coefficients['scale'])
        assert np.allclose([computed[label] for label in labels], row[1:], rtol=0.15, atol=0.5), record.step
    for record, (_, _, _, mean_percent) in zip(records, table['errors']):
        assert 100 * record.report.mean_abs_dev == pytest.approx(mean_percent, rel=0.1), record.step
        if record.step > 0:
            assert record.report.max <= 1.055


@pytest.mark.slow
def test_small_kappa_refinement_reduces_eta_deviation(default_rules, balanced_k6):
    records = refine(balanced_k6[0], default_rules(6), kappa=1.0, steps=4)
    deviations = [record.report.mean_abs_dev for record in records]
    assert np.all(np.diff(deviations) < 0)


@pytest.mark.slow
def test_k3_degree_nine_balance(default_rules, identity_k3):
    table = load_reference('k3_balance_k9')
    final, trace = iterate_to_fixed_point(identity_k3(9), default_rules(9), tol=1e-7, min_steps=8)
    published = dict(zip(table['labels'], table['params']))
    assert projective_distance([published[label] for label in final.scheme.labels], final) < 0.01
    sigma, _ = fit_sigma(trace)
    assert sigma == pytest.approx(table['sigma'], abs=0.05)

    stats = load_reference('eta_stats_k9')
    report = eta_report(final, 9, default_rules(9))
    assert report.max == pytest.approx(stats['max'], rel=0.05)
    assert report.min == pytest.approx(stats['min'], rel=0.05)
    assert report.mean_abs_dev == pytest.approx(stats['mean'], rel=0.05)
