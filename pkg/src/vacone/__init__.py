"""Variational analysis toolkit for disjunctive nonlinear programs."""

__version__ = "0.1.0"
