"""Planar photoacoustic tomography toolkit.

Fourier-domain reconstruction on planar detection geometries with
non-uniform FFTs, non-equispaced sensor mask generation, an independent
forward simulator, and image-quality metrics, plus a batch CLI
(``patfft``).
"""

from .errors import DataValidationError, NumericalError, ParameterError
from .nufft import (
    NedPlan,
    NerPlan,
    WindowSpec,
    fft_centered,
    nudft_ned_direct,
    nudft_ner_direct,
    nufft_ned,
    nufft_ner,
    window_eval,
    window_ft_eval,
)

__version__ = "0.1.0"

__all__ = [
    "DataValidationError",
    "NumericalError",
    "ParameterError",
    "NedPlan",
    "NerPlan",
    "WindowSpec",
    "fft_centered",
    "nudft_ned_direct",
    "nudft_ner_direct",
    "nufft_ned",
    "nufft_ner",
    "window_eval",
    "window_ft_eval",
    "__version__",
]
