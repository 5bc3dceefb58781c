"""Anchor names carried by every verdict: the property a check exercises"""

PARAMETER_REGION = "admissible-parameter-region"
SPECTRAL_ROUND_TRIP = "spectral-round-trip"
SEMIGROUP_LAW = "heat-semigroup-law"
SEMIGROUP_CONTRACTION = "semigroup-contraction"
SEMIGROUP_MAPPING = "semigroup-mapping-exponent"
POINTWISE_PRODUCT = "pointwise-product"
PRODUCT_BOUND = "pointwise-product-bound"
DRIFT_REGULARITY = "drift-regularity-certificate"
LINEAR_MILD = "linear-mild-solution"
SEMILINEAR_MILD = "semilinear-mild-solution"
PICARD_CONTRACTION = "picard-contraction"
PDE_UNIQUENESS = "mild-solution-uniqueness"
FD_ORACLE = "finite-difference-oracle"
CHAIN_RULE = "chain-rule-representation"
ORTHOGONALITY = "martingale-orthogonality"
CLASSICAL_CONSISTENCY = "occupation-classical-consistency"
EXTENSION_CONTINUITY = "occupation-extension-continuity"
BSDE_TERMINAL = "bsde-terminal-condition"
BSDE_MARTINGALE = "bsde-martingale-property"
BSDE_IDENTITY = "bsde-martingale-representation"
BSDE_SECOND_MOMENT = "bsde-square-integrability"
BSDE_EQUIVALENCE = "bsde-classical-equivalence"
BSDE_UNIQUENESS = "bsde-uniqueness"
FEYNMAN_KAC = "feynman-kac-representation"
HAAR_BASIS = "haar-orthonormal-basis"
HAAR_DENSITY = "haar-density"
MOLLIFIER = "mollifier-contraction"
HEAT_GRADIENT_COMMUTATION = "heat-gradient-commutation"
SOBOLEV_MONOTONICITY = "sobolev-norm-monotonicity"
SOBOLEV_QUADRATURE = "sobolev-norm-quadrature-oracle"
