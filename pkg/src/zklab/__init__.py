"""Numerical laboratory for the Zakharov-Kuznetsov equation."""

__version__ = "0.1.0"
