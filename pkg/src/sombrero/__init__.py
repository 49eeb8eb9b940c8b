"""Split-operator simulator for a trapped spin-orbit coupled two-component condensate."""

__version__ = "0.1.0"
