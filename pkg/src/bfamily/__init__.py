"""Numerical laboratory for the b-family of peakon equations."""

from .spectral import (Field, SpectralGrid, convolve_phi, dealiased_product, derivative,
                       helmholtz, helmholtz_inverse, make_grid)
from .exact import (BFamilyParams, LeftonParams, MultipeakonState, gaussian_ic, lefton_eval,
                    multipeakon_eval, peakon_eval, steady_residual)
from .evolution import (EvolutionConfig, SnapshotSeries, Termination, detect_peaks, evolve,
                        fit_leftons, m_rhs, positivity_monitor)
from .stability import (LinearizedOperator, SpectrumResult, build_linearization,
                        compute_spectrum, derivative_correlation)

__version__ = "0.1.0"
