"""Monomial section bases and the symmetry-reduced parameter schemes.

Sections of O(k) on the K3 surface w^2 = x^6 + y^6 + 1 are polynomials of
degree k in (x, y) (the "big triangle") plus w times polynomials of degree
k - 3 (the "small triangle"). Monomials are listed in lexicographic (p, q)
order, big triangle first. On CP^1 the basis is 1, x, ..., x^k.

A parameter scheme groups the entries of a Hermitian matrix into orbits of
the symmetry group: sixth-root phases force exponents to agree mod 6,
coordinate permutations act on homogeneous exponents (p, q, r), the covering
involution w -> -w separates the two triangles and conjugation makes all
entries real.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

from .errors import ConfigError, SchemeMismatch

logger = logging.getLogger(__name__)

BIG, SMALL = 0, 1
ZETA = np.exp(1j * np.pi / 3)

SCHEME_DEGREES = (3, 6, 9)

# (label, block, homogeneous exponents of the two monomials); order is parameter order
K3_CLASS_TABLE = {
    3: [
        ('a_I', BIG, (1, 1, 1), (1, 1, 1)),
        ('a_II', BIG, (1, 0, 2), (1, 0, 2)),
        ('a_III', BIG, (0, 0, 3), (0, 0, 3)),
        ('b_I', SMALL, (0, 0, 0), (0, 0, 0)),
    ],
    6: [
        ('a_I', BIG, (2, 2, 2), (2, 2, 2)),
        ('a_II', BIG, (1, 2, 3), (1, 2, 3)),
        ('a_III', BIG, (1, 1, 4), (1, 1, 4)),
        ('a_IV', BIG, (3, 3, 0), (3, 3, 0)),
        ('a_V', BIG, (2, 4, 0), (2, 4, 0)),
        ('a_VI', BIG, (1, 5, 0), (1, 5, 0)),
        ('a_VII', BIG, (0, 0, 6), (0, 0, 6)),
        ('b_I', SMALL, (1, 1, 1), (1, 1, 1)),
        ('b_II', SMALL, (1, 2, 0), (1, 2, 0)),
        ('b_III', SMALL, (0, 0, 3), (0, 0, 3)),
        ('C', BIG, (0, 0, 6), (6, 0, 0)),
    ],
    9: [
        ('a_I', BIG, (3, 3, 3), (3, 3, 3)),
        ('a_II', BIG, (3, 2, 4), (3, 2, 4)),
        ('a_III', BIG, (2, 2, 5), (2, 2, 5)),
        ('a_IV', BIG, (4, 1, 4), (4, 1, 4)),
        ('a_V', BIG, (3, 1, 5), (3, 1, 5)),
        ('a_VI', BIG, (2, 1, 6), (2, 1, 6)),
        ('a_VII', BIG, (1, 1, 7), (1, 1, 7)),
        ('a_VIII', BIG, (4, 0, 5), (4, 0, 5)),
        ('a_IX', BIG, (3, 0, 6), (3, 0, 6)),
        ('a_X', BIG, (2, 0, 7), (2, 0, 7)),
        ('a_XI', BIG, (1, 0, 8), (1, 0, 8)),
        ('a_XII', BIG, (0, 0, 9), (0, 0, 9)),
        ('C_1', BIG, (2, 1, 6), (8, 1, 0)),
        ('C_2', BIG, (2, 1, 6), (2, 7, 0)),
        ('C_3', BIG, (2, 7, 0), (8, 1, 0)),
        ('C_4', BIG, (0, 0, 9), (6, 0, 3)),
        ('C_5', BIG, (6, 0, 3), (0, 6, 3)),
        ('C_6', BIG, (1, 1, 7), (7, 1, 1)),
        ('b_I', SMALL, (2, 2, 2), (2, 2, 2)),
        ('b_II', SMALL, (1, 2, 3), (1, 2, 3)),
        ('b_III', SMALL, (1, 1, 4), (1, 1, 4)),
        ('b_IV', SMALL, (3, 3, 0), (3, 3, 0)),
        ('b_V', SMALL, (2, 4, 0), (2, 4, 0)),
        ('b_VI', SMALL, (1, 5, 0), (1, 5, 0)),
        ('b_VII', SMALL, (0, 0, 6), (0, 0, 6)),
        ("C'", SMALL, (0, 0, 6), (6, 0, 0)),
    ],
}


@dataclass(frozen=True, eq=False)
class MonomialBasis:
    space: str
    k: int
    exponents: np.ndarray
    blocks: np.ndarray

    @property
    def dim(self):
        return len(self.blocks)

    @property
    def big(self):
        return self.blocks == BIG

    @property
    def small(self):
        return self.blocks == SMALL

    def degree(self, block):
        return self.k if block == BIG else self.k - 3

    def homogeneous(self, i):
        p, q = (int(e) for e in self.exponents[i])
        return p, q, self.degree(self.blocks[i]) - p - q

    def index(self, block, p, q):
        try:
            return self._lookup()[(block, p, q)]
        except KeyError:
            raise ConfigError(f"No monomial {(block, p, q)} in degree {self.k} basis") from None

    def _lookup(self):
        return _index_table(self)

    def labels(self):
        names = []
        for (p, q), block in zip(self.exponents, self.blocks):
            mono = f"x^{p}y^{q}" if self.space == 'k3' else f"x^{p}"
            names.append(f"w*{mono}" if block == SMALL else mono)
        return names


@lru_cache(maxsize=None)
def _index_table(basis):
    return {(int(b), int(p), int(q)): i
            for i, ((p, q), b) in enumerate(zip(basis.exponents, basis.blocks))}


@lru_cache(maxsize=None)
def monomial_basis(k, space='k3'):
    """Cached monomial basis of H^0(O(k))"""
    if k < 1:
        raise ConfigError(f"Degree must be positive, got {k}")
    if space == 'cp1':
        exponents = [(p, 0) for p in range(k + 1)]
        blocks = [BIG] * (k + 1)
    elif space == 'k3':
        exponents = [(p, q) for p in range(k + 1) for q in range(k + 1 - p)]
        blocks = [BIG] * len(exponents)
        small = [(p, q) for p in range(k - 2) for q in range(k - 2 - p)]
        exponents += small
        blocks += [SMALL] * len(small)
    else:
        raise ConfigError(f"Unknown space: {space}")
    return MonomialBasis(space, k, np.array(exponents, dtype=int).reshape(-1, 2),
                         np.array(blocks, dtype=int))


def section_dimension(k, space='k3'):
    if space == 'cp1':
        return k + 1
    return (k + 1) * (k + 2) // 2 + max(k - 2, 0) * max(k - 1, 0) // 2


@dataclass(frozen=True, eq=False)
class ParamScheme:
    """Placement of invariant parameters in a full Hermitian matrix"""
    name: str
    basis: MonomialBasis
    labels: tuple
    class_index: np.ndarray
    diagonal: np.ndarray
    endpoints: np.ndarray

    @property
    def n_params(self):
        return len(self.labels)

    @property
    def dim(self):
        return self.basis.dim

    @property
    def class_sizes(self):
        idx = self.class_index[self.class_index >= 0]
        return np.bincount(idx, minlength=self.n_params)

    def expand(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_params,):
            raise SchemeMismatch(f"{self.name} expects {self.n_params} parameters, got {values.shape}")
        return np.where(self.class_index >= 0, values[np.maximum(self.class_index, 0)], 0.0)

    def project(self, matrix):
        """Class means of Re(matrix): the orbit average onto invariant matrices"""
        matrix = np.asarray(matrix)
        if matrix.shape != (self.dim, self.dim):
            raise SchemeMismatch(f"{self.name} expects a {self.dim}x{self.dim} matrix, got {matrix.shape}")
        mask = self.class_index >= 0
        sums = np.bincount(self.class_index[mask], weights=matrix.real[mask], minlength=self.n_params)
        return sums / self.class_sizes

    def project_matrix(self, matrix):
        return self.expand(self.project(matrix))

    def invariance_deviation(self, matrix):
        matrix = np.asarray(matrix)
        scale = max(np.max(np.abs(matrix)), np.finfo(float).tiny)
        return np.max(np.abs(matrix - self.project_matrix(matrix))) / scale

    def indicator(self, c):
        return (self.class_index == c).astype(float)


def _orbit_key(s, t):
    return min(tuple(sorted(((s[i], s[j], s[l]), (t[i], t[j], t[l]))))
               for i, j, l in permutations(range(3)))


@lru_cache(maxsize=None)
def k3_scheme(k):
    if k not in K3_CLASS_TABLE:
        raise SchemeMismatch(f"No invariant scheme for K3 degree {k}; use one of {SCHEME_DEGREES}")
    basis = monomial_basis(k, 'k3')
    table = K3_CLASS_TABLE[k]
    class_of_key = {(block, _orbit_key(s, t)): c for c, (_, block, s, t) in enumerate(table)}

    homog = [basis.homogeneous(i) for i in range(basis.dim)]
    class_index = np.full((basis.dim, basis.dim), -1, dtype=int)
    for a in range(basis.dim):
        for b in range(basis.dim):
            if basis.blocks[a] != basis.blocks[b]:
                continue
            if (homog[a][0] - homog[b][0]) % 6 or (homog[a][1] - homog[b][1]) % 6:
                continue
            key = (int(basis.blocks[a]), _orbit_key(homog[a], homog[b]))
            if key not in class_of_key:
                raise ConfigError(f"Unlabelled orbit {key} in degree {k}")
            class_index[a, b] = class_of_key[key]

    diagonal = np.array([s == t for _, _, s, t in table])
    endpoints = np.array([
        [class_index[basis.index(block, *s[:2]), basis.index(block, *s[:2])],
         class_index[basis.index(block, *t[:2]), basis.index(block, *t[:2])]]
        for _, block, s, t in table
    ])
    scheme = ParamScheme(f"K3k{k}", basis, tuple(row[0] for row in table), class_index,
                         diagonal, endpoints)
    missing = [label for label, size in zip(scheme.labels, scheme.class_sizes) if size == 0]
    if missing:
        raise ConfigError(f"Empty classes in degree {k}: {missing}")
    logger.debug(f"Built scheme {scheme.name}: dim={basis.dim}, params={scheme.n_params}")
    return scheme


@lru_cache(maxsize=None)
def cp1_scheme(k):
    basis = monomial_basis(k, 'cp1')
    class_index = np.full((k + 1, k + 1), -1, dtype=int)
    class_index[np.arange(k + 1), np.arange(k + 1)] = np.arange(k + 1)
    return ParamScheme(f"CP1Diag({k})", basis, tuple(f"a_{p}" for p in range(k + 1)),
                       class_index, np.ones(k + 1, dtype=bool),
                       np.repeat(np.arange(k + 1)[:, None], 2, axis=1))


def get_scheme(name):
    """Resolve 'K3k6' or 'CP1Diag(6)' style names"""
    if name.startswith('K3k'):
        return k3_scheme(int(name[3:]))
    if name.startswith('CP1Diag(') and name.endswith(')'):
        return cp1_scheme(int(name[8:-1]))
    raise SchemeMismatch(f"Unknown scheme: {name}")


def scheme_for(space, k):
    return k3_scheme(k) if space == 'k3' else cp1_scheme(k)


def gamma_generators(basis):
    """Matrices U with z(g.pt) proportional to U z(pt) for each symmetry generator"""
    dim = basis.dim
    p, q = basis.exponents[:, 0], basis.exponents[:, 1]
    if basis.space == 'cp1':
        return {'rotation': np.diag(np.exp(0.7j * p))}

    def permutation(image):
        matrix = np.zeros((dim, dim))
        for i in range(dim):
            matrix[image(i), i] = 1.0
        return matrix

    def swap_xy(i):
        return basis.index(basis.blocks[i], int(q[i]), int(p[i]))

    def swap_xz(i):
        r = basis.homogeneous(i)[2]
        return basis.index(basis.blocks[i], r, int(q[i]))

    return {
        'x_phase': np.diag(ZETA ** p),
        'y_phase': np.diag(ZETA ** q),
        'swap_xy': permutation(swap_xy),
        'swap_xz': permutation(swap_xz),
        'involution': np.diag(np.where(basis.blocks == SMALL, -1.0, 1.0)),
    }
