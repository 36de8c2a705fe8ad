"""Grammar-guided evolutionary computation: GE, CFG-GP and random search."""

__version__ = "0.1.0"
