"""Gap-corrected shifted-boundary finite elements on unfitted 2D grids."""

__version__ = "0.1.0"
