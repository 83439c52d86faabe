"""Dense Hermitian linear algebra on section spaces and invariant parameters."""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import NotInvariant, NotPositiveDefinite, NotSelfAdjoint, SchemeMismatch
from .monomial_basis import ParamScheme, get_scheme
from .utils import SELF_ADJOINT_TOL, SYMMETRY_TOL, normalize_product

logger = logging.getLogger(__name__)


class HermitianForm:
    """Positive definite Hermitian matrix with a lazily computed inverse.

    A form G is an inner product on the section space; its inverse G^{-1}
    holds the coefficients of D(z) = sum G^{ab} z_a conj(z_b).
    """

    def __init__(self, entries, inverse_entries=None, check=True):
        entries = np.asarray(entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise NotSelfAdjoint(f"Expected a square matrix, got shape {entries.shape}")
        if check:
            _check_self_adjoint(entries)
        self.entries = entries
        self._inverse = inverse_entries
        self._cholesky = None

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def cholesky(self):
        if self._cholesky is None:
            try:
                self._cholesky = linalg.cholesky(self.entries, lower=True)
            except linalg.LinAlgError as e:
                raise NotPositiveDefinite(f"Cholesky factorization failed: {e}") from None
        return self._cholesky

    @property
    def inverse_entries(self):
        if self._inverse is None:
            factor = (self.cholesky, True)
            inverse = linalg.cho_solve(factor, np.eye(self.dim, dtype=self.entries.dtype))
            self._inverse = (inverse + inverse.conj().T) / 2
        return self._inverse

    def log_det(self):
        return 2.0 * np.sum(np.log(np.diag(self.cholesky).real))

    def is_positive_definite(self):
        try:
            self.cholesky
        except NotPositiveDefinite:
            return False
        return True


def _check_self_adjoint(matrix, tol=SELF_ADJOINT_TOL):
    scale = max(np.max(np.abs(matrix)), 1.0)
    deviation = np.max(np.abs(matrix - matrix.conj().T))
    if deviation > tol * scale:
        raise NotSelfAdjoint(f"Matrix deviates from self-adjoint by {deviation:.3e}")


def invert(form):
    inverse = HermitianForm(form.inverse_entries, inverse_entries=form.entries, check=False)
    return inverse


def eval_D(inverse, z):
    """D(z) = sum G^{ab} z_a conj(z_b); z may be a single vector or a stack of rows"""
    matrix = inverse.entries if isinstance(inverse, HermitianForm) else np.asarray(inverse)
    z = np.asarray(z)
    return np.einsum('...a,ab,...b->...', z, matrix, z.conj()).real


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T


def symmetric_eigen(matrix):
    """Eigenvalues sorted by decreasing absolute value"""
    matrix = np.asarray(matrix)
    _check_self_adjoint(matrix)
    values, vectors = linalg.eigh((matrix + matrix.conj().T) / 2)
    order = np.argsort(-np.abs(values), kind='stable')
    return EigenDecomposition(values[order], vectors[:, order])


@dataclass(frozen=True, eq=False)
class InvariantParams:
    """Symmetry-reduced parameters of G^{-1}; ordering follows the scheme labels"""
    scheme: ParamScheme
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.scheme.n_params,):
            raise SchemeMismatch(
                f"{self.scheme.name} expects {self.scheme.n_params} values, got {values.shape}")
        if np.any(values[self.scheme.diagonal] <= 0):
            raise NotPositiveDefinite(f"Diagonal parameters must be positive: {values}")
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_name(cls, name, values):
        return cls(get_scheme(name), values)

    @property
    def diagonal_values(self):
        return self.values[self.scheme.diagonal]

    def normalized(self):
        """Rescale so the product of the diagonal-class entries is 1"""
        return InvariantParams(self.scheme, normalize_product(self.values, self.scheme.diagonal))

    def scaled(self, factor):
        return InvariantParams(self.scheme, self.values * factor)

    def as_dict(self):
        return dict(zip(self.scheme.labels, (float(v) for v in self.values)))


def expand_params(params):
    """Full G^{-1} matrix in the monomial basis"""
    return HermitianForm(params.scheme.expand(params.values), check=False)


def contract_params(form, scheme, tol=SYMMETRY_TOL):
    matrix = form.entries if isinstance(form, HermitianForm) else np.asarray(form)
    deviation = scheme.invariance_deviation(matrix)
    if deviation > tol:
        raise NotInvariant(f"Matrix is not invariant for {scheme.name} "
                           f"(relative deviation {deviation:.3e})", deviation=deviation)
    return InvariantParams(scheme, scheme.project(matrix))


def project_invariant(matrix, scheme):
    """Orbit average of a Hermitian matrix onto the invariant subspace"""
    return scheme.project_matrix(matrix)


def projective_distance(p, q):
    """min over s > 0 of max_i |s q_i - p_i| / |p_i|"""
    a = np.asarray(getattr(q, 'values', q), dtype=float)
    b = np.asarray(getattr(p, 'values', p), dtype=float)
    if a.shape != b.shape:
        raise SchemeMismatch(f"Cannot compare vectors of shapes {b.shape} and {a.shape}")
    scale = np.max(np.abs(b))
    c = np.where(np.abs(b) > 0, np.abs(b), scale)
    slopes, offsets = a / c, b / c

    # the objective is convex and piecewise linear in s; its minimum sits at a kink
    with np.errstate(divide='ignore', invalid='ignore'):
        zeros = offsets / slopes
        diff = (offsets[:, None] - offsets[None, :]) / (slopes[:, None] - slopes[None, :])
        summ = (offsets[:, None] + offsets[None, :]) / (slopes[:, None] + slopes[None, :])
    candidates = np.concatenate([zeros.ravel(), diff.ravel(), summ.ravel(), [1.0]])
    candidates = candidates[np.isfinite(candidates) & (candidates > 0)]
    objective = np.max(np.abs(np.outer(candidates, slopes) - offsets), axis=1)
    return float(np.min(objective))
