"""The K3 surface S = {w^2 = x^6 + y^6 + 1} and quadrature on it.

Two charts cover the affine piece U = {|x|, |y| < 1.2}:

* the big chart (x, p) with y = p (2 + p^6)^{1/6} (1 + x^6)^{1/6} and
  w = (1 + p^6) sqrt(1 + x^6), valid where Re(x^6) > -.531;
* the small chart (u, w) with u = x^6 - y^6, valid near x^6 = y^6 = -1/2.

U and its two images under coordinate permutations cover S. Rules are
reduced to a fundamental domain of the symmetry group: points carry their
orbit multiplicity in the weight, so Gamma-invariant integrands integrate
exactly and matrix integrands must be projected onto invariant matrices.

The measure is nu = theta ^ conj(theta) with theta = dx dy / w, i.e.
4 |F|^2 times Lebesgue measure in chart coordinates when theta = F dc1 dc2.
"""
import logging
from dataclasses import dataclass, field, replace

import joblib
import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError, NearBranchSingularity, NotPositive, OutsideDomain
from .monomial_basis import BIG, SMALL, monomial_basis
from .quadrature import CHART_BIG, CHART_SMALL, QuadratureRule
from .utils import CHART_DEFAULTS, VOLUME_FORM_SCALE, smooth_transition

logger = logging.getLogger(__name__)

OMEGA = np.exp(1j * np.pi / 3)
RESIDUAL_TOL = 1e-10
BRANCH_TOL = 1e-8

# 3 images of U, x <-> y, w -> -w
BIG_SYMMETRY_FACTOR = 12
# 3 images of U, 36 sixth-root images, w -> -w, conjugation
SMALL_SYMMETRY_FACTOR = 3 * 36 * 4


@dataclass(frozen=True)
class ChartParams:
    big_band: tuple = CHART_DEFAULTS['big_band']
    sheet_band: float = CHART_DEFAULTS['sheet_band']
    pou_inner: float = CHART_DEFAULTS['pou_inner']
    pou_outer: float = CHART_DEFAULTS['pou_outer']
    p_radius: float = CHART_DEFAULTS['p_radius']
    hex_scale: float = CHART_DEFAULTS['hex_scale']
    square_scale: float = CHART_DEFAULTS['square_scale']
    u_box: float = CHART_DEFAULTS['u_box']
    w_box: float = CHART_DEFAULTS['w_box']

    @classmethod
    def from_dict(cls, values):
        unknown = set(values) - set(CHART_DEFAULTS)
        if unknown:
            raise ConfigError(f"Unknown chart parameters: {sorted(unknown)}")
        values = dict(values)
        if 'big_band' in values:
            values['big_band'] = tuple(values['big_band'])
        return replace(cls(), **values)

    def key(self):
        return '' if self == ChartParams() else '-' + joblib.hash(self.__dict__)[:8]


@dataclass(frozen=True)
class SurfacePoint:
    x: complex
    y: complex
    w: complex
    chart: int
    chart_coords: tuple = field(default=())

    @property
    def residual(self):
        return surface_residual(self.x, self.y, self.w)

    def as_array(self):
        return np.array([[self.x, self.y, self.w]], dtype=complex)


def surface_residual(x, y, w):
    x6, y6 = x ** 6, y ** 6
    return np.abs(w * w - x6 - y6 - 1) / (1 + np.abs(x6) + np.abs(y6))


def big_chart_coords(x, p):
    """(y, w) for big-chart coordinates; principal roots throughout"""
    x6, p6 = x ** 6, p ** 6
    y = p * (2 + p6) ** (1 / 6) * (1 + x6) ** (1 / 6)
    w = (1 + p6) * np.sqrt(1 + x6)
    return y, w


def small_chart_coords(u, w):
    """(x, y) for small-chart coordinates; principal sixth roots"""
    w2 = w * w
    return ((w2 + u - 1) / 2) ** (1 / 6), ((w2 - u - 1) / 2) ** (1 / 6)


def big_theta(x, p):
    return 2.0 / ((2 + p ** 6) ** (5 / 6) * (1 + x ** 6) ** (1 / 3))


def small_theta(x, y):
    return 1.0 / (36 * x ** 5 * y ** 5)


def big_chart_point(x, p, chart=ChartParams()):
    x, p = complex(x), complex(p)
    if (x ** 6).real <= chart.big_band[0] or (p ** 6).real <= -1.5:
        raise OutsideDomain(f"({x}, {p}) is outside the big chart", point=(x, p))
    y, w = big_chart_coords(x, p)
    return SurfacePoint(x, complex(y), complex(w), CHART_BIG, (x, p))


def small_chart_point(u, w):
    u, w = complex(u), complex(w)
    x6, y6 = (w * w + u - 1) / 2, (w * w - u - 1) / 2
    if min(abs(x6), abs(y6)) < BRANCH_TOL:
        raise OutsideDomain(f"({u}, {w}) maps to a coordinate axis", point=(u, w))
    x, y = small_chart_coords(u, w)
    return SurfacePoint(complex(x), complex(y), w, CHART_SMALL, (u, w))


def theta_density(pt):
    """F with theta = F dc1 ^ dc2 in the point's chart"""
    if pt.chart == CHART_BIG:
        return complex(big_theta(pt.x, pt.chart_coords[1]))
    if abs(pt.x ** 5 * pt.y ** 5) < BRANCH_TOL:
        raise NearBranchSingularity(f"Small chart is singular at {pt}", point=pt)
    return complex(small_theta(pt.x, pt.y))


def _radial_cutoff(r, chart):
    return 1.0 - smooth_transition((r - chart.pou_inner) / (chart.pou_outer - chart.pou_inner))


def big_chart_weight(x6_real, chart=ChartParams()):
    lo, hi = chart.big_band
    return smooth_transition((x6_real - lo) / (hi - lo))


def sheet_weight(q_real, chart=ChartParams()):
    band = chart.sheet_band
    return smooth_transition((q_real + band) / (2 * band))


def cutoff_weight(pt, chart=ChartParams()):
    """Weight of the big chart in x at a point; depends only on Re(x^6)"""
    return float(big_chart_weight((pt.x ** 6).real, chart))


def covering_weights(x, y, chart=ChartParams()):
    """Partition of unity subordinate to U and its images under x <-> z, y <-> z"""
    ax, ay = np.abs(x), np.abs(y)
    with np.errstate(divide='ignore', invalid='ignore'):
        inv_x = np.where(ax > 0, 1.0 / ax, np.inf)
        inv_y = np.where(ay > 0, 1.0 / ay, np.inf)
        y_over_x = np.where(ax > 0, ay * inv_x, np.inf)
        x_over_y = np.where(ay > 0, ax * inv_y, np.inf)
    rho_z = _radial_cutoff(ax, chart) * _radial_cutoff(ay, chart)
    rho_x = _radial_cutoff(inv_x, chart) * _radial_cutoff(y_over_x, chart)
    rho_y = _radial_cutoff(inv_y, chart) * _radial_cutoff(x_over_y, chart)
    total = rho_x + rho_y + rho_z
    return rho_x / total, rho_y / total, rho_z / total


def partition_weights(x, y, w, chart=ChartParams()):
    """All cut-off functions at (x, y, w); each family sums to one"""
    x, y, w = np.asarray(x), np.asarray(y), np.asarray(w)
    psi_x, psi_y, psi_z = covering_weights(x, y, chart)
    alpha_x = big_chart_weight((x ** 6).real, chart)
    alpha_y = big_chart_weight((y ** 6).real, chart)
    q = w / np.sqrt(1 + x ** 6)
    return {
        'psi_x': psi_x, 'psi_y': psi_y, 'psi_z': psi_z,
        'big_x': alpha_x * (1 - alpha_y / 2),
        'big_y': alpha_y * (1 - alpha_x / 2),
        'small': (1 - alpha_x) * (1 - alpha_y),
        'sheet_plus': sheet_weight(q.real, chart),
        'sheet_minus': sheet_weight(-q.real, chart),
    }


def _hex_sector(spacing, radius):
    """Hexagonal lattice points spacing * (m + n omega), m >= 1, n >= 0, plus the origin"""
    top = int(np.ceil(radius / spacing)) + 1
    m, n = np.meshgrid(np.arange(1, top + 1), np.arange(0, top + 1), indexing='ij')
    m, n = m.ravel(), n.ravel()
    z = spacing * (m + n * OMEGA)
    keep = np.abs(z) < radius
    return (np.concatenate([[0], m[keep]]), np.concatenate([[0], n[keep]]),
            np.concatenate([[0j], z[keep]]))


def _conjugate_rep(m, n):
    """Sector representative of the conjugate lattice point"""
    return np.where(n >= 1, n, m), np.where(n >= 1, m, 0)


def big_chart_rule(n_x, n_p, chart=ChartParams()):
    h_x, h_p = chart.hex_scale / n_x, chart.hex_scale / n_p
    mx, nx, zx = _hex_sector(h_x, chart.pou_outer)
    mp, npp, zp = _hex_sector(h_p, chart.p_radius)
    ix, ip = np.meshgrid(np.arange(len(zx)), np.arange(len(zp)), indexing='ij')
    ix, ip = ix.ravel(), ip.ravel()

    base = max(mx.max(), nx.max(), mp.max(), npp.max()) + 2
    cmx, cnx = _conjugate_rep(mx, nx)
    cmp_, cnp = _conjugate_rep(mp, npp)
    key = ((mx[ix] * base + nx[ix]) * base + mp[ip]) * base + npp[ip]
    conj_key = ((cmx[ix] * base + cnx[ix]) * base + cmp_[ip]) * base + cnp[ip]
    keep = key <= conj_key
    ix, ip = ix[keep], ip[keep]
    fold = np.where(key[keep] < conj_key[keep], 2.0, 1.0)

    x, p = zx[ix], zp[ip]
    rotations = np.where(x == 0, 1.0, 6.0) * np.where(p == 0, 1.0, 6.0)
    alpha_x = big_chart_weight((x ** 6).real, chart)
    gamma = sheet_weight((1 + p ** 6).real, chart)
    live = (alpha_x > 0) & (gamma > 0)
    x, p, fold, rotations, alpha_x, gamma = (a[live] for a in (x, p, fold, rotations, alpha_x, gamma))

    y, w = big_chart_coords(x, p)
    psi_z = covering_weights(x, y, chart)[2]
    alpha_y = big_chart_weight((y ** 6).real, chart)
    cell = (np.sqrt(3) / 2) ** 2 * h_x ** 2 * h_p ** 2
    density = 4 * np.abs(big_theta(x, p)) ** 2
    weights = (BIG_SYMMETRY_FACTOR * rotations * fold * cell * density
               * psi_z * alpha_x * (1 - alpha_y / 2) * gamma)
    live = weights > 0
    return x[live], y[live], w[live], p[live], weights[live]


def small_chart_rule(n_u, n_w, chart=ChartParams(), batch=64):
    h_u, h_w = chart.square_scale / n_u, chart.square_scale / n_w
    top_u, top_w = int(chart.u_box / h_u), int(chart.w_box / h_w)
    u = (h_u * (np.arange(-top_u, top_u) + 0.5))[:, None] + 1j * (h_u * (np.arange(top_u) + 0.5))[None, :]
    w_all = (h_w * (np.arange(top_w) + 0.5))[:, None] + 1j * (h_w * (np.arange(-top_w, top_w) + 0.5))[None, :]
    u, w_all = u.ravel(), w_all.ravel()
    cell = h_u ** 2 * h_w ** 2

    pieces = []
    for start in range(0, len(w_all), batch):
        w = np.repeat(w_all[start:start + batch], len(u))
        uu = np.tile(u, len(w_all[start:start + batch]))
        x, y = small_chart_coords(uu, w)
        alpha_x = big_chart_weight((x ** 6).real, chart)
        alpha_y = big_chart_weight((y ** 6).real, chart)
        psi_z = covering_weights(x, y, chart)[2]
        cut = psi_z * (1 - alpha_x) * (1 - alpha_y)
        live = cut > 0
        x, y, w, uu, cut = x[live], y[live], w[live], uu[live], cut[live]
        weights = SMALL_SYMMETRY_FACTOR * cell * 4 * np.abs(small_theta(x, y)) ** 2 * cut
        pieces.append((x, y, w, uu, weights))
    return tuple(np.concatenate([piece[i] for piece in pieces]) for i in range(5))


def rule_label(resolution, chart=ChartParams()):
    n_x, n_p, n_u, n_w = resolution
    return f"k3({n_x},{n_p},{n_u},{n_w}){chart.key()}"


def build_k3_rule(n_x, n_p, n_u, n_w, chart=ChartParams()):
    """Symmetry-reduced quadrature rule for nu on S"""
    if min(n_x, n_p, n_u, n_w) < 4:
        raise ConfigError(f"Lattice parameters must be >= 4, got {(n_x, n_p, n_u, n_w)}")
    bx, by, bw, bp, b_weights = big_chart_rule(n_x, n_p, chart)
    sx, sy, sw, su, s_weights = small_chart_rule(n_u, n_w, chart)

    points = np.concatenate([np.stack([bx, by, bw], axis=1), np.stack([sx, sy, sw], axis=1)])
    residual = np.max(surface_residual(points[:, 0], points[:, 1], points[:, 2]))
    if residual > RESIDUAL_TOL:
        raise OutsideDomain(f"Surface residual {residual:.2e} exceeds tolerance")

    coords = np.concatenate([np.stack([bx, bp], axis=1), np.stack([su, sw], axis=1)])
    charts = np.concatenate([np.full(len(bx), CHART_BIG), np.full(len(sx), CHART_SMALL)])
    info = {
        'n': (n_x, n_p, n_u, n_w),
        'N1': int(len(bx)), 'N2': int(len(sx)),
        'V1': float(np.sum(b_weights)), 'V2': float(np.sum(s_weights)),
        'max_residual': float(residual),
    }
    label = rule_label((n_x, n_p, n_u, n_w), chart)
    rule = QuadratureRule('k3', points, coords, charts,
                          np.concatenate([b_weights, s_weights]), label, info)
    logger.info(f"Built rule {label}: N1={info['N1']}, N2={info['N2']}, "
                f"V1={info['V1']:.4f}, V2={info['V2']:.4f}, total={rule.total_mass:.4f}")
    return rule


def l_i(n=64):
    """int_0^1 (1 - p^3)^{-2/3} dp, split at the fixed point of p -> (1 - p^3)^{1/3}"""
    nodes, weights = leggauss(n)
    b = 2.0 ** (-1 / 3)
    p = b * (nodes + 1) / 2
    return float(b * np.sum(weights * (1 - p ** 3) ** (-2 / 3)))


def analytic_volume(n=64):
    return 27.0 * l_i(n) ** 4


def chern_weil_volume(k):
    """Total Fubini-Study volume of O(k) on S"""
    return 8.0 * np.pi ** 2 * k ** 2


@dataclass(frozen=True, eq=False)
class SectionJet:
    """Monomial values and x, y derivatives at a stack of surface points"""
    k: int
    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    v_plus: np.ndarray
    v_minus: np.ndarray
    v_plus_x: np.ndarray
    v_plus_y: np.ndarray
    v_minus_x: np.ndarray
    v_minus_y: np.ndarray

    @property
    def r_plus(self):
        return self.v_plus

    @property
    def r_minus(self):
        return self.w[:, None] * self.v_minus

    @property
    def r(self):
        return np.concatenate([self.r_plus, self.r_minus], axis=1)

    @property
    def delta_x(self):
        return np.concatenate([self.v_plus_x, self.w[:, None] * self.v_minus_x], axis=1)

    @property
    def delta_y(self):
        return np.concatenate([self.v_plus_y, self.w[:, None] * self.v_minus_y], axis=1)

    @property
    def f_x(self):
        return 3 * self.x ** 5

    @property
    def f_y(self):
        return 3 * self.y ** 5

    def _branch_term(self, f):
        zeros = np.zeros_like(self.v_plus)
        return np.concatenate([zeros, (f / self.w)[:, None] * self.v_minus], axis=1)

    @property
    def r_x(self):
        return self.delta_x + self._branch_term(self.f_x)

    @property
    def r_y(self):
        return self.delta_y + self._branch_term(self.f_y)


def _as_points(points):
    if isinstance(points, SurfacePoint):
        return points.as_array()
    points = np.asarray(points, dtype=complex)
    return points[None, :] if points.ndim == 1 else points


def _monomials(x, y, exponents):
    k = int(exponents.max(initial=0))
    xp = x[:, None] ** np.arange(k + 1)
    yp = y[:, None] ** np.arange(k + 1)
    p, q = exponents[:, 0], exponents[:, 1]
    value = xp[:, p] * yp[:, q]
    d_x = p * xp[:, np.maximum(p - 1, 0)] * yp[:, q]
    d_y = q * xp[:, p] * yp[:, np.maximum(q - 1, 0)]
    return value, d_x, d_y


def section_jet(points, k):
    points = _as_points(points)
    basis = monomial_basis(k, 'k3')
    x, y, w = points[:, 0], points[:, 1], points[:, 2]
    vp, vp_x, vp_y = _monomials(x, y, basis.exponents[basis.blocks == BIG])
    vm, vm_x, vm_y = _monomials(x, y, basis.exponents[basis.blocks == SMALL])
    return SectionJet(k, x, y, w, vp, vm, vp_x, vp_y, vm_x, vm_y)


def section_vectors(points, k):
    """Values of the monomial basis (x^p y^q, w x^p y^q) at each point"""
    points = _as_points(points)
    basis = monomial_basis(k, 'k3')
    x, y, w = points[:, 0], points[:, 1], points[:, 2]
    vp = _monomials(x, y, basis.exponents[basis.blocks == BIG])[0]
    vm = _monomials(x, y, basis.exponents[basis.blocks == SMALL])[0]
    return np.concatenate([vp, w[:, None] * vm], axis=1)


def _inner(a, b, matrix):
    return np.einsum('na,ab,nb->n', a, matrix, b.conj())


def _volume_determinant(jet, matrix):
    vectors = (jet.r, jet.r_x, jet.r_y)
    gram = np.empty((len(jet.x), 3, 3), dtype=complex)
    for i, a in enumerate(vectors):
        for j, b in enumerate(vectors):
            gram[:, i, j] = _inner(a, b, matrix)
    norm2 = gram[:, 0, 0].real
    return np.abs(jet.w) ** 2 * np.linalg.det(gram).real / norm2 ** 3


def _volume_branch_safe(jet, matrix, basis):
    big, small = basis.blocks == BIG, basis.blocks == SMALL
    h_plus, h_minus = matrix[np.ix_(big, big)], matrix[np.ix_(small, small)]
    r, w = jet.r, jet.w
    norm2 = _inner(r, r, matrix).real
    dx, dy = jet.delta_x, jet.delta_y
    dx_hat = dx - (_inner(dx, r, matrix) / norm2)[:, None] * r
    dy_hat = dy - (_inner(dy, r, matrix) / norm2)[:, None] * r

    plus2 = _inner(jet.v_plus, jet.v_plus, h_plus).real
    minus2 = _inner(jet.v_minus, jet.v_minus, h_minus).real
    q_x = (plus2 * _inner(jet.v_minus_x, jet.v_minus, h_minus)
           - minus2 * _inner(jet.v_plus_x, jet.v_plus, h_plus)) / norm2
    q_y = (plus2 * _inner(jet.v_minus_y, jet.v_minus, h_minus)
           - minus2 * _inner(jet.v_plus_y, jet.v_plus, h_plus)) / norm2
    f_x, f_y = jet.f_x, jet.f_y

    nx2 = _inner(dx_hat, dx_hat, matrix).real
    ny2 = _inner(dy_hat, dy_hat, matrix).real
    cross = _inner(dx_hat, dy_hat, matrix)
    mixed = f_x[:, None] * dy_hat - f_y[:, None] * dx_hat
    w2, wc2 = w * w, np.conj(w) ** 2

    v1 = np.abs(w) ** 2 * (nx2 * ny2 - np.abs(cross) ** 2)
    v2 = plus2 * minus2 / norm2 * _inner(mixed, mixed, matrix).real
    v3 = np.abs(w) ** 2 * np.abs(f_x * q_y - f_y * q_x) ** 2
    v4 = (ny2 * np.conj(q_x) * wc2 * f_x + nx2 * np.conj(q_y) * wc2 * f_y).real
    v5 = (cross * (np.conj(f_x) * q_y * w2 + f_y * np.conj(q_x) * wc2)).real
    return (v1 + v2 - v3 + 2 * v4 - 2 * v5) / norm2 ** 2


def fs_volume_ratio(inverse, k, points, formula='branch_safe'):
    """mu / nu of the Fubini-Study volume of D = z^T G^{-1} conj(z) at surface points"""
    matrix = getattr(inverse, 'entries', inverse)
    jet = section_jet(points, k)
    if formula == 'branch_safe':
        ratio = _volume_branch_safe(jet, np.asarray(matrix), monomial_basis(k, 'k3'))
    elif formula == 'determinant':
        ratio = _volume_determinant(jet, np.asarray(matrix))
    else:
        raise ConfigError(f"Unknown volume formula '{formula}'")
    ratio = VOLUME_FORM_SCALE * ratio
    if np.any(~(ratio > 0)):
        bad = int(np.argmin(np.where(ratio > 0, np.inf, 0)))
        raise NotPositive(f"Volume ratio {ratio[bad]} at point {jet.x[bad], jet.y[bad], jet.w[bad]}")
    return ratio
