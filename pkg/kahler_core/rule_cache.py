import csv
import logging
import os
import threading

import joblib

from .k3_geometry import ChartParams, build_k3_rule, rule_label

logger = logging.getLogger(__name__)

_rule_lock = threading.Lock()


class RuleCache:
    """K3 quadrature rules kept in memory and, with a directory, on disk"""

    def __init__(self, cache_dir=None):
        self.cache_dir = cache_dir
        self.rules = {}
        if cache_dir:
            os.makedirs(cache_dir, exist_ok=True)

    def _path(self, label):
        return os.path.join(self.cache_dir, f"{label}.joblib")

    def get(self, resolution, chart=ChartParams()):
        label = rule_label(resolution, chart)
        if label in self.rules:
            return self.rules[label]

        rule = self.load(label)
        if rule is None:
            rule = build_k3_rule(*resolution, chart=chart)
            self.save(rule)
        self.rules[label] = rule
        return rule

    def load(self, label):
        if not self.cache_dir:
            return None
        path = self._path(label)
        if not os.path.exists(path):
            return None
        with _rule_lock:
            rule = joblib.load(path)
        logger.info(f"Loaded rule {label} from {path}")
        return rule

    def save(self, rule):
        if not self.cache_dir:
            return None
        path = self._path(rule.label)
        with _rule_lock:
            joblib.dump(rule, path)
        logger.info(f"Cached rule {rule.label} at {path}")
        return path


def export_rule_csv(rule, path):
    """One row per point: chart, chart coordinates, ambient coordinates, weight"""
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle)
        header = ['chart', 'c1_re', 'c1_im', 'c2_re', 'c2_im']
        header += [f"{name}_{part}" for name in ('x', 'y', 'w')[:rule.points.shape[1]] for part in ('re', 'im')]
        writer.writerow(header + ['weight'])
        for chart, coords, point, weight in zip(rule.charts, rule.chart_coords, rule.points, rule.weights):
            row = [int(chart)]
            for value in (*coords, *point):
                row += [repr(float(value.real)), repr(float(value.imag))]
            writer.writerow(row + [repr(float(weight))])
    return path
