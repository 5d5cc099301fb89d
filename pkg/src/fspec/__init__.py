"""Fourier spectra of fractal measures and exceptional projection bounds."""
from ._kernels import BACKEND
from .bounds import SetProfile, best_spectrum_bound, bound_profile, classical_bounds, emptiness_threshold
from .constructions import Lemma31Params, build_example, cantor_measure, figure3_rows, lemma31_sets
from .measures import (
    AffineImage,
    AtomicMeasure,
    ConvPower,
    Mixture,
    Product,
    Projected,
    SelfSimilarMeasure1D,
    discretize,
    ft_eval,
    mass,
)
from .projection import Frame, box_dimension, marstrand_trials, sample_grassmannian
from .spectrum import SamplingPlan, estimate_spectrum, estimate_via_convolution, shell_energy

__version__ = "0.1.0"
