import csv

import numpy as np
import pytest

from kahler_core import ChartParams, ConfigError, RuleCache, RunConfig, export_rule_csv, load_config
from kahler_core.reference import compare_rows, load_reference, reference_ids, reference_params
from kahler_core.utils import DEFAULT_RULES


def test_defaults():
    config = RunConfig()
    assert config.rule_resolution == DEFAULT_RULES[6]
    assert config.kappa == (2.5,)
    assert config.n_jobs >= 1
    assert config.with_overrides(k=9).rule_resolution == DEFAULT_RULES[9]


def test_load_toml(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        'k = 9\n'
        'resolution = [24, 24, 16, 12]\n'
        'kappa = [2.5, 1.0]\n'
        'threads = 2\n'
        '\n'
        '[chart]\n'
        'p_radius = 1.7\n'
    )
    config = load_config(str(path)).validate(k3=True)
    assert config.k == 9
    assert config.rule_resolution == (24, 24, 16, 12)
    assert config.kappa == (2.5, 1.0)
    assert config.n_jobs == 2
    assert config.chart == ChartParams(p_radius=1.7)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.toml"))
    broken = tmp_path / "broken.toml"
    broken.write_text("k = = 3\n")
    with pytest.raises(ConfigError):
        load_config(str(broken))
    unknown = tmp_path / "unknown.toml"
    unknown.write_text("degree = 3\n")
    with pytest.raises(ConfigError):
        load_config(str(unknown))


def test_overrides_skip_none():
    config = RunConfig().with_overrides(k=3, tol=None, kappa=1.5)
    assert config.k == 3
    assert config.tol == RunConfig().tol
    assert config.kappa == (1.5,)


@pytest.mark.parametrize("overrides, k3", [
    ({'kappa': 6.0}, False),
    ({'resolution': (20, 20, 3, 10)}, False),
    ({'variant': 'q'}, False),
    ({'threads': 0}, False),
    ({'k': 5}, True),
])
def test_validation(overrides, k3):
    with pytest.raises(ConfigError):
        RunConfig().with_overrides(**overrides).validate(k3=k3)


def test_reference_tables():
    assert 'toy_t_nu' in reference_ids()
    assert load_reference('k3_volume')['analytic'] == 263.0
    with pytest.raises(ConfigError):
        load_reference('toy_t_q')
    with pytest.raises(ConfigError):
        reference_params('toy_t')
    params = reference_params('omega9_prime')
    assert params.scheme.name == 'K3k9'
    assert params.as_dict()["C'"] == pytest.approx(0.5101)


def test_compare_rows_matches_step_index():
    reference = [[0, 1.0, 2.0], [2, 1.0, 4.0]]
    rows = compare_rows([[0, 2.0, 4.0], [1, 9.0, 9.0], [2, 1.0, 4.2]], reference)
    assert [row['r'] for row in rows] == [0, 2]
    assert rows[0]['distance'] == pytest.approx(0.0, abs=1e-12)
    assert rows[1]['distance'] > 0


def test_rule_cache_round_trip(tmp_path):
    resolution = (6, 6, 5, 5)
    cache = RuleCache(str(tmp_path))
    rule = cache.get(resolution)
    assert cache.get(resolution) is rule
    assert (tmp_path / f"{rule.label}.joblib").exists()

    reloaded = RuleCache(str(tmp_path)).get(resolution)
    assert reloaded is not rule
    assert np.array_equal(reloaded.weights, rule.weights)
    assert reloaded.info == rule.info


def test_export_rule_csv(tmp_path):
    rule = RuleCache().get((6, 6, 5, 5))
    path = export_rule_csv(rule, str(tmp_path / "rule.csv"))
    with open(path) as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ['chart', 'c1_re', 'c1_im', 'c2_re', 'c2_im',
                       'x_re', 'x_im', 'y_re', 'y_im', 'w_re', 'w_im', 'weight']
    assert len(rows) == len(rule) + 1
    assert float(rows[1][-1]) == rule.weights[0]


def test_compare_rows_with_step_mapping():
    table = {'rows': [[0, 1.0, 2.0], [10, 1.0, 4.0]], 'steps': [0, 9]}
    rows = compare_rows([[0, 1.0, 2.0], [9, 2.0, 8.0], [10, 5.0, 5.0]], table)
    assert [(row['r'], row['step']) for row in rows] == [(0, 0), (10, 9)]
    assert rows[1]['distance'] == pytest.approx(0.0, abs=1e-12)
    assert load_reference('toy_t')['steps'][5] == 9
