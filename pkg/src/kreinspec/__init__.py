"""Finite-truncation matrix models of Lorentzian spectral triples.

Three built-in geometries (noncommutative torus, isospectral 3-sphere,
SU_q(2)) with numerical verification of the Krein-space spectral-triple
relations, closed-form spectra, metric reconstruction, and rediscovery of
the equivariant Dirac families from their defining constraints.
"""

from .linalg import (
    AntiLinOp,
    EigResult,
    LinOp,
    adjoint,
    anticommutator,
    commutator,
    compose,
    conj_by_antilinear,
    eig_dense,
    eig_hermitian,
    nullspace,
    op_norm,
)
from .triples import (
    AxiomReport,
    CheckResult,
    SignatureSigns,
    SpectralReport,
    TripleBundle,
    TruncationDescriptor,
    abs_dirac,
    abs_dirac_eigenvalues,
    check_boundedness_ladder,
    check_dirac,
    check_equivariance,
    check_krein,
    check_order_one,
    check_reality,
    check_regularity,
    check_time_orientation,
    compact_resolvent_probe,
    run_suite,
    sign_table,
)
from .torus import TorusParams, build_torus, torus_ellipticity, torus_ladder, torus_metric, torus_spectrum
from .sphere import SphereParams, build_sphere, sphere_blocks, sphere_metric, sphere_spectrum
from .suq2 import SuqParams, build_suq2, suq2_abs_spectrum, suq2_boundedness_probe, suq2_dirac_spectrum
from .solver import (
    DiracAnsatz,
    SolutionFamily,
    assemble_constraints,
    solve_family,
    sphere_ansatz,
    torus_ansatz,
    verify_family,
)

__version__ = "0.1.0"
