"""Life-cycle model of a married couple's time allocation around childbirth."""

__version__ = "0.1.0"
