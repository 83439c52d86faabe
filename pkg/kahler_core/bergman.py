"""The Q operator on invariant Hermitian forms and its algebraic approximation.

Q acts on functions f_A = s^T A conj(s) / D built from a G-orthonormal
basis s: Q(A)_B = R int f_A f_B dnu. With s = B z and B the symmetric
square root of G^{-1}, the Frobenius-orthonormal class indicators
I_c / sqrt|c| give an orthonormal basis of the invariant forms, in which Q
is a symmetric matrix with Q(1) = 1 at a balanced metric.

Q-tilde replaces the quadrature by the product map H^0(L^k) x H^0(L^k) ->
H^0(L^2k) and the quotient of the symmetric-square metric, which only
needs the algebraic data of the embedding.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .core_linalg import expand_params, symmetric_eigen
from .errors import ConfigError, DegreeOverflow, RankDeficient, SchemeMismatch
from .iteration import rule_degree, positive_denominators, rule_sections
from .monomial_basis import BIG, SMALL, monomial_basis
from .quadrature import integrate_outer
from .utils import CHI_ONE_TOL, PINV_CUTOFF

logger = logging.getLogger(__name__)

# w^2 = x^6 + y^6 + 1 as (dp, dq) shifts of the big-triangle target
SURFACE_RELATION = ((6, 0), (0, 6), (0, 0))


@dataclass(frozen=True, eq=False)
class ProductMap:
    """s_a s_b = sum_i P[i, a, b] tau_i with tau the degree 2k monomials"""
    k: int
    space: str
    coefficients: np.ndarray

    @property
    def source(self):
        return monomial_basis(self.k, self.space)

    @property
    def target(self):
        return monomial_basis(2 * self.k, self.space)


def _target_index(target, block, p, q):
    try:
        return target.index(block, p, q)
    except ConfigError:
        raise DegreeOverflow(f"Product monomial {(block, p, q)} is not in degree {target.k}") from None


def product_map(k, space='k3'):
    source, target = monomial_basis(k, space), monomial_basis(2 * k, space)
    P = np.zeros((target.dim, source.dim, source.dim))
    for a in range(source.dim):
        pa, qa = (int(e) for e in source.exponents[a])
        for b in range(source.dim):
            pb, qb = (int(e) for e in source.exponents[b])
            p, q = pa + pb, qa + qb
            blocks = (source.blocks[a], source.blocks[b])
            if blocks == (SMALL, SMALL):
                for dp, dq in SURFACE_RELATION:
                    P[_target_index(target, BIG, p + dp, q + dq), a, b] += 1.0
            elif SMALL in blocks:
                P[_target_index(target, SMALL, p, q), a, b] += 1.0
            else:
                P[_target_index(target, BIG, p, q), a, b] += 1.0
    logger.debug(f"Product map degree {k} -> {2 * k}: {source.dim}x{source.dim} -> {target.dim}")
    return ProductMap(k, space, P)


def square_coefficients(inverse, pm):
    """H' = P (H x H) P^T, so that D(z)^2 = sum H'_ij tau_i conj(tau_j)"""
    H = np.asarray(getattr(inverse, 'entries', inverse))
    P = pm.coefficients
    if H.shape != (pm.source.dim,) * 2:
        raise SchemeMismatch(f"Metric of shape {H.shape} does not match degree {pm.k}")
    square = np.einsum('iab,ac,bd,jcd->ij', P, H, H, P, optimize=True)
    return (square + square.conj().T) / 2


def induced_square_metric(inverse, pm):
    """Quotient metric on H^0(L^2k) of the symmetric square of G: the
    pseudo-inverse of H' scaled by dim_k / dim_2k."""
    values, vectors = linalg.eigh(square_coefficients(inverse, pm))
    cutoff = PINV_CUTOFF * np.max(np.abs(values))
    if np.any(np.abs(values) <= cutoff):
        raise RankDeficient(f"Product map into degree {2 * pm.k} is not surjective "
                            f"({int(np.sum(np.abs(values) <= cutoff))} null directions)")
    pseudo_inverse = (vectors / values) @ vectors.conj().T
    return (pm.source.dim / pm.target.dim) * pseudo_inverse


@dataclass
class InvariantQMatrix:
    labels: tuple
    entries: np.ndarray
    asymmetry: float = 0.0
    identity: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self):
        return len(self.labels)

    def eigenvalues(self):
        return symmetric_eigen(self.entries).eigenvalues

    def apply_identity(self):
        return self.entries @ self.identity

    def reordered(self, labels):
        order = [self.labels.index(label) for label in labels]
        identity = self.identity[order] if self.identity is not None else None
        return InvariantQMatrix(tuple(labels), self.entries[np.ix_(order, order)], self.asymmetry, identity)

    def negated(self, label):
        """Same operator with the basis form of `label` replaced by its negative"""
        signs = np.where(np.asarray(self.labels) == label, -1.0, 1.0)
        identity = self.identity * signs if self.identity is not None else None
        return InvariantQMatrix(self.labels, self.entries * np.outer(signs, signs), self.asymmetry, identity)

    def rows(self, scale=1.0):
        return [[label, *(float(v) * scale for v in row)] for label, row in zip(self.labels, self.entries)]


def display_order(scheme):
    """Off-diagonal classes first, then big-triangle and small-triangle diagonals"""
    off = [label for label, diag in zip(scheme.labels, scheme.diagonal) if not diag]
    big = [label for label, diag in zip(scheme.labels, scheme.diagonal) if diag and label.startswith('a')]
    small = [label for label, diag in zip(scheme.labels, scheme.diagonal) if diag and not label.startswith('a')]
    return tuple(off + big + small)


def orthonormal_sections(params):
    """B with s = B z a G-orthonormal basis, B the symmetric square root of G^{-1}.

    B is diagonal off the off-diagonal classes, so s is the rescaled monomials
    except where an off-diagonal class couples monomials: for the triple
    1, x^6, y^6 at k = 6 the sections are A + B x^6 + B y^6 and its two
    permutations.
    """
    values, vectors = linalg.eigh(expand_params(params).entries)
    return (vectors * np.sqrt(values)) @ vectors.conj().T


def _orthonormal_forms(params):
    """B (I_c / sqrt|c|) B for every class, i.e. I_c / sqrt|c| in the frame s"""
    scheme = params.scheme
    root = orthonormal_sections(params)
    sizes = scheme.class_sizes
    return np.stack([root @ (scheme.indicator(c) / np.sqrt(sizes[c])) @ root
                     for c in range(scheme.n_params)])


def _identity_vector(scheme):
    return np.where(scheme.diagonal, np.sqrt(scheme.class_sizes), 0.0)


def _q_matrix(params, entries):
    symmetric = (entries + entries.T) / 2
    scale = max(np.max(np.abs(symmetric)), np.finfo(float).tiny)
    asymmetry = float(np.max(np.abs(entries - entries.T)) / scale)
    return InvariantQMatrix(params.scheme.labels, symmetric, asymmetry, _identity_vector(params.scheme))


def q_direct(params, k, rule, n_jobs=1):
    """R int phi_c phi_d dnu with phi_c = z^T eps_c conj(z) / D"""
    if rule_degree(params, rule) != k:
        raise SchemeMismatch(f"Scheme {params.scheme.name} does not match degree {k}")
    sections = rule_sections(rule, k)
    D = positive_denominators(expand_params(params).entries, sections, rule)
    forms = _orthonormal_forms(params)
    phi = np.einsum('na,cab,nb->nc', sections, forms, sections.conj(), optimize=True).real / D[:, None]
    R = params.scheme.dim / rule.total_mass
    entries = integrate_outer(rule, phi, np.full(len(rule), R), n_jobs).real
    return _q_matrix(params, entries)


def q_tilde(params, pm=None):
    """Q on invariant forms from the product map and the induced square metric"""
    basis = params.scheme.basis
    pm = pm if pm is not None else product_map(basis.k, basis.space)
    induced = induced_square_metric(expand_params(params), pm)
    factor = linalg.cholesky(induced, lower=True)
    forms = _orthonormal_forms(params)

    entries = np.zeros((params.scheme.n_params,) * 2)
    for column in factor.T:
        kernel = np.einsum('iab,i->ab', pm.coefficients, column)
        left = forms @ kernel
        right = forms @ kernel.conj()
        entries += np.einsum('cae,dea->cd', left, right).real
    matrix = _q_matrix(params, entries)
    logger.info(f"Q-tilde for {params.scheme.name}: leading eigenvalues "
                f"{np.round(matrix.eigenvalues()[:4], 5)}")
    return matrix


@dataclass
class SpectralReport:
    chis: np.ndarray
    k_prime: float
    lambdas: list
    flags: list

    def as_dict(self):
        return {
            'chis': [float(c) for c in self.chis],
            'k_prime': self.k_prime,
            'lambdas': self.lambdas,
            'flags': self.flags,
        }


def laplacian_estimates(chis, dim, n=2, one_tol=CHI_ONE_TOL):
    """lambda = -2 k' log chi with k' = dim^(1/n).

    chi in (1, 1 + one_tol] is read as 1 (quadrature error on the constant mode)
    and flagged 'clamped'; larger or non-positive values get no estimate.
    """
    if dim < 2 or n < 1:
        raise ConfigError(f"Need dim >= 2 and n >= 1, got dim={dim}, n={n}")
    k_prime = float(dim ** (1.0 / n))
    lambdas, flags = [], []
    for chi in np.asarray(chis, dtype=float):
        if chi <= 0:
            lambdas.append(None)
            flags.append('negative')
        elif chi > 1 + one_tol:
            lambdas.append(None)
            flags.append('above_one')
        elif chi > 1:
            lambdas.append(0.0)
            flags.append('clamped')
        else:
            lambdas.append(float(-2.0 * k_prime * np.log(chi)))
            flags.append('')
    return SpectralReport(np.asarray(chis, dtype=float), k_prime, lambdas, flags)
