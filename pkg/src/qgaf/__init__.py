"""Quasi graph-additive functions: construction and residual verification."""
