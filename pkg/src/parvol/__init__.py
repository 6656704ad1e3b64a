"""parvol: exact and numerical outer parallel volumes with concavity diagnostics."""

__version__ = "0.1.0"
