"""gr1kit: explicit-state GR(1) synthesis, scenario generation and checking."""

__version__ = "0.1.0"
