"""Numerical laboratory for Hamilton-Jacobi equations driven by mixing temporal noise."""

from __future__ import annotations

__version__ = "0.1.0"
