"""Coninvolutions and conjugate-reversibility in the complex affine group."""

from .certify import InstanceSpec, oracle_consimilar_2x2, oracle_dim1, verify_certificate
from .errors import *  # noqa: F401,F403
from .factorization import (
    FactorizationCertificate,
    adjoint_witness,
    are_consimilar,
    con_sqrt,
    four_factor,
    three_factor_with_witness,
    two_factor,
    two_factor_unipotent,
)
from .linalg_core import (
    DEFAULT_TOL,
    AffineMap,
    Tolerance,
    affine_compose,
    affine_conj,
    affine_inverse,
    consimilarity_transform,
    group_conjugate,
    is_coninvolution,
)
from .reversibility import coninvolutory_reverser, is_c_reversible_affine, is_c_reversible_matrix
from .spectral import are_similar, jordan_structure

__version__ = "0.1.0"
