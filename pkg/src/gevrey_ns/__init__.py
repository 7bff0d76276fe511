"""Pseudo-spectral Navier-Stokes in Lei-Lin-Gevrey norms."""

from .lattice import (
    FrequencyLattice,
    SpectralScalarField,
    SpectralVectorField,
    build_lattice,
    divergence_residual,
    enforce_hermitian,
    leray_project,
    random_divfree_field,
    read_snapshot,
    write_snapshot,
)
from .norms import GevreyParams, gevrey_weight, lemma4_constant, z_norm
from .nonlinear import bilinear_B, convolve_direct, convolve_fast
from .semigroup import DuhamelSamples, duhamel_quadrature, heat_apply
from .fixedpoint import (
    PicardParams,
    Trajectory,
    choose_parameters,
    contraction_ratio,
    picard_solve,
    psi_apply,
    split_frequencies,
)
from .evolve import SimConfig, TimeSeries, simulate, step
from .verify import MarginReport, check_lemma1, check_lemma4, check_lemma23, cross_validate

__version__ = "0.1.0"
