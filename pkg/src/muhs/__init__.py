"""Pseudospectral simulation and verification tools for the periodic
two-component mu-Hunter-Saxton system."""

__version__ = "0.1.0"
