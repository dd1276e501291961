"""Pseudodifferential symbol calculus: symbols, parametrices, connection jets,
gauge-field propagators and the Hawking spectral density."""

__version__ = "0.1.0"
