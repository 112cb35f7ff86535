"""LZS spectroscopy: interference maps of a driven flux qubit and their inversion."""

__version__ = "0.1.0"
