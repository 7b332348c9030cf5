"""Market-efficiency toolkit: scaling, chaos, volatility and entropy diagnostics."""

__version__ = "0.1.0"
