"""Symbolic stack-calculator environment and deep-Q agents for exact
step-by-step linear-equation solving."""

__version__ = "0.1.0"
