from .errors import (
    KahlerError, ConfigError, NumericalError, SchemeMismatch, ExponentMismatch, DegreeOverflow,
    NotPositiveDefinite, NotSelfAdjoint, NotInvariant, NotPositive, QuadratureFailure,
    InsufficientDecay, RankDeficient, OutsideDomain, NearBranchSingularity, MaxStepsExceeded
)
from .monomial_basis import monomial_basis, section_dimension, k3_scheme, cp1_scheme, get_scheme, gamma_generators
from .core_linalg import (
    HermitianForm, InvariantParams, expand_params, contract_params, project_invariant,
    eval_D, symmetric_eigen, projective_distance
)
from .quadrature import QuadratureRule, round_sphere_rule, integrate_scalar, integrate_hermitian, integrate_outer
from .cp1_toy import (
    DiagMetric, t_step_fs, t_nu_step, t_canonical_step, tau_closed_form, tau_iterates,
    q_matrix_cp1, chi, lambda_mk, toy_trace, toy_sigma
)
from .k3_geometry import (
    ChartParams, SurfacePoint, big_chart_point, small_chart_point, theta_density, cutoff_weight,
    partition_weights, build_k3_rule, analytic_volume, chern_weil_volume, section_jet,
    section_vectors, fs_volume_ratio
)
from .iteration import (
    IterationTrace, EtaReport, EtaCoefficients, t_nu_step_k3, iterate_to_fixed_point, psi_nu,
    eta_report, eta_coefficients, refine_step, refine, fit_sigma
)
from .bergman import (
    ProductMap, InvariantQMatrix, SpectralReport, product_map, square_coefficients, induced_square_metric,
    q_direct, q_tilde, laplacian_estimates, orthonormal_sections
)
from .config import RunConfig, load_config
from .reference import load_reference, compare_rows, symmetric_from_upper
from .rule_cache import RuleCache, export_rule_csv

__all__ = [
    'KahlerError',
    'ConfigError',
    'NumericalError',
    'SchemeMismatch',
    'ExponentMismatch',
    'DegreeOverflow',
    'NotPositiveDefinite',
    'NotSelfAdjoint',
    'NotInvariant',
    'NotPositive',
    'QuadratureFailure',
    'InsufficientDecay',
    'RankDeficient',
    'OutsideDomain',
    'NearBranchSingularity',
    'MaxStepsExceeded',
    'monomial_basis',
    'section_dimension',
    'k3_scheme',
    'cp1_scheme',
    'get_scheme',
    'gamma_generators',
    'HermitianForm',
    'InvariantParams',
    'expand_params',
    'contract_params',
    'project_invariant',
    'eval_D',
    'symmetric_eigen',
    'projective_distance',
    'QuadratureRule',
    'round_sphere_rule',
    'integrate_scalar',
    'integrate_hermitian',
    'integrate_outer',
    'DiagMetric',
    't_step_fs',
    't_nu_step',
    't_canonical_step',
    'tau_closed_form',
    'tau_iterates',
    'q_matrix_cp1',
    'chi',
    'lambda_mk',
    'toy_trace',
    'toy_sigma',
    'ChartParams',
    'SurfacePoint',
    'big_chart_point',
    'small_chart_point',
    'theta_density',
    'cutoff_weight',
    'partition_weights',
    'build_k3_rule',
    'analytic_volume',
    'chern_weil_volume',
    'section_jet',
    'section_vectors',
    'fs_volume_ratio',
    'IterationTrace',
    'EtaReport',
    'EtaCoefficients',
    't_nu_step_k3',
    'iterate_to_fixed_point',
    'psi_nu',
    'eta_report',
    'eta_coefficients',
    'refine_step',
    'refine',
    'fit_sigma',
    'ProductMap',
    'InvariantQMatrix',
    'SpectralReport',
    'product_map',
    'square_coefficients',
    'induced_square_metric',
    'q_direct',
    'q_tilde',
    'laplacian_estimates',
    'orthonormal_sections',
    'RunConfig',
    'load_config',
    'load_reference',
    'compare_rows',
    'symmetric_from_upper',
    'RuleCache',
    'export_rule_csv'
]
