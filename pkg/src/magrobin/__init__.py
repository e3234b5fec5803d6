"""Edge-state spectra of the two-dimensional magnetic Robin Laplacian."""

__version__ = "0.1.0"
