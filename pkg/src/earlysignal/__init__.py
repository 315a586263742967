"""Early-warning detection of symptom-mention surges in social-media archives."""

__version__ = "0.1.0"
