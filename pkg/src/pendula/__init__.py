"""Coupled pendula as a classical analogue of a driven two-level system."""
__version__ = "0.1.0"
