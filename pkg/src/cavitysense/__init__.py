"""Atom-light cat-state displacement metrology in optical cavities."""

__version__ = "0.1.0"
