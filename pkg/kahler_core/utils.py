import numpy as np

# Iteration defaults
DEFAULT_TOL = 5e-5
DEFAULT_MAX_STEPS = 60
SYMMETRY_TOL = 1e-6
SELF_ADJOINT_TOL = 1e-10
PINV_CUTOFF = 1e-10
KAPPA_MAX = 2 * np.e
REFINE_KAPPA = 2.5
REFINE_KAPPA_STEPS = 5
CHI_ONE_TOL = 0.01

# mu/nu = VOLUME_FORM_SCALE * |w|^2 det Gram(r, r_x, r_y) / |r|^6
VOLUME_FORM_SCALE = 2.0

# Quadrature resolutions (n_x, n_p, n_u, n_w) per degree
DEFAULT_RULES = {
    3: (20, 20, 14, 10),
    6: (20, 20, 14, 10),
    9: (30, 30, 20, 14),
}

FINE_RULES = {
    3: (30, 30, 20, 14),
    6: (30, 30, 20, 16),
    9: (40, 40, 24, 20),
}

CHUNK_SIZE = 4096

# Chart geometry on w^2 = x^6 + y^6 + 1
CHART_DEFAULTS = {
    'big_band': (-0.531, -0.117),   # Re(x^6) transition between big and small chart
    'sheet_band': 0.5,              # |Re q| below which both w-sheets share a point
    'pou_inner': 1.0,               # U-covering cut-off is 1 below this radius
    'pou_outer': 1.2,               # ... and 0 above this one
    'p_radius': 1.6,
    'hex_scale': 1.4,               # hexagonal spacing = hex_scale / n
    'square_scale': 2.1,            # square spacing = square_scale / n
    'u_box': 6.0,
    'w_box': 2.7,
}

# Distribution tables of eta, bins (-inf, e0), [e0, e1), ..., [e_last, inf)
HISTOGRAM_PRESETS = {
    3: (0.4, 0.55, 0.7, 0.85, 1.0, 1.15, 1.3, 1.45),
    6: (0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0, 1.05),
    9: (0.88, 0.9, 0.92, 0.94, 0.96, 0.98, 1.0, 1.02),
}

TOY_VARIANTS = ('t', 't_nu', 't_k')

TOY_START = {
    't': (0.018, 0.495, 4.5, 54.0),
    't_nu': (0.018, 0.5, 4.5, 54.0),
    't_k': (0.018, 0.5, 4.5, 54.0),
}

TOY_TABLE_ROWS = {
    't': (0, 1, 2, 3, 4, 10, 20, 30, 40),
    't_nu': (0, 1, 2, 3, 4, 10, 13),
    't_k': (0, 1, 2, 3, 4, 10, 18),
}


def _bump_tail(s):
    positive = s > 0
    return np.where(positive, np.exp(-1.0 / np.where(positive, s, 1.0)), 0.0)


def smooth_transition(s):
    """C-infinity step from 0 (s <= 0) to 1 (s >= 1), peak slope 2 at s = 1/2.

    Satisfies f(s) + f(1 - s) = 1.
    """
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    left, right = _bump_tail(s), _bump_tail(1.0 - s)
    return left / (left + right)


def symmetric_completion(half, k):
    """Extend a_0..a_{k//2} to a_0..a_k with a_p = a_{k-p}"""
    half = np.asarray(half, dtype=float)
    full = np.empty(k + 1)
    full[:len(half)] = half
    full[k - np.arange(len(half))] = half
    return full


def normalize_sum(values, total):
    values = np.asarray(values, dtype=float)
    return values * (total / values.sum())


def normalize_product(values, mask):
    """Scale so the product of the masked entries is 1"""
    values = np.asarray(values, dtype=float)
    return values / np.exp(np.mean(np.log(values[mask])))


def histogram_percentages(values, weights, edges):
    """Weighted percentage of mass in each bin"""
    bins = np.searchsorted(np.asarray(edges), values, side='right')
    mass = np.bincount(bins, weights=weights, minlength=len(edges) + 1)
    return 100.0 * mass / mass.sum()


def bin_labels(edges):
    labels = [f"-{edges[0]}"]
    labels += [f"{lo}-{hi}" for lo, hi in zip(edges[:-1], edges[1:])]
    labels.append(f"{edges[-1]}-")
    return labels
