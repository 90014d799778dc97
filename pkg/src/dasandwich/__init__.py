"""Data-augmentation and sandwich MCMC, with a finite-state spectral laboratory."""

__version__ = "0.1.0"
