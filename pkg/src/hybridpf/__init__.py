"""Allen-Cahn and hybrid phase-field models for stress-driven phase interfaces."""

__version__ = "0.1.0"
