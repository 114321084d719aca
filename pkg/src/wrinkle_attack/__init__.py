"""Black-box structural adversarial attack via wrinkle-like image warping."""

__version__ = "0.1.0"
