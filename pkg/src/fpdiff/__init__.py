"""Differential testing of floating-point programs across compilers."""

__version__ = "0.1.0"
