"""Symbolic-numeric workbench for second-order delay ODEs with Lagrangians."""

__version__ = "0.1.0"
