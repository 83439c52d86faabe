import json
import logging
import os
from functools import lru_cache

import numpy as np

from .core_linalg import InvariantParams, projective_distance
from .errors import ConfigError
from .monomial_basis import get_scheme

logger = logging.getLogger(__name__)

REFERENCE_PATH = os.path.join(os.path.dirname(__file__), 'data', 'reference_tables.json')


@lru_cache(maxsize=1)
def _tables():
    with open(REFERENCE_PATH) as handle:
        return json.load(handle)


def reference_ids():
    return sorted(_tables())


def load_reference(table_id):
    tables = _tables()
    if table_id not in tables:
        raise ConfigError(f"Unknown reference table '{table_id}'; available: {reference_ids()}")
    return tables[table_id]


def reference_params(table_id):
    """Published metric as InvariantParams, for tables that carry a scheme"""
    table = load_reference(table_id)
    if 'scheme' not in table:
        raise ConfigError(f"Reference table '{table_id}' is not a metric")
    return InvariantParams(get_scheme(table['scheme']), table['params'])


def compare_rows(computed, reference):
    """Pair rows by step index and measure projective agreement.

    `reference` is a list of rows or a table; a table's optional `steps` list
    gives, per published row, the computed step it corresponds to.
    """
    if isinstance(reference, dict):
        rows = reference.get('rows', [])
        steps = reference.get('steps') or [row[0] for row in rows]
    else:
        rows, steps = reference, [row[0] for row in reference]
    expected = {step: row for step, row in zip(steps, rows)}
    result = []
    for row in computed:
        key, values = row[0], np.asarray(row[1:], dtype=float)
        if key not in expected:
            continue
        published = expected[key]
        target = np.asarray(published[1:], dtype=float)
        n = min(len(values), len(target))
        result.append({
            'r': published[0],
            'step': key,
            'computed': [float(v) for v in values[:n]],
            'reference': [float(v) for v in target[:n]],
            'distance': projective_distance(target[:n], values[:n]),
        })
    return result


def symmetric_from_upper(upper):
    """Full symmetric matrix from the rows of its upper triangle, diagonal first"""
    n = len(upper)
    matrix = np.zeros((n, n))
    for i, row in enumerate(upper):
        if len(row) != n - i:
            raise ConfigError(f"Upper-triangle row {i} has {len(row)} entries, expected {n - i}")
        matrix[i, i:] = row
        matrix[i:, i] = row
    return matrix
