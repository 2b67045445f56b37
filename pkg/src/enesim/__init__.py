"""Electron-on-neon device modeling: cross-section electrostatics, resonator
coupling, surface morphology, trapped-state spectra and spectroscopy fits."""

from ._kernels import BACKEND
from .errors import ConfigError, EneError, NumericalError

__version__ = "0.1.0"

__all__ = ["BACKEND", "ConfigError", "EneError", "NumericalError", "__version__"]
