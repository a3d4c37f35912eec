"""Cavity-enhanced atomic frequency comb memory with DC Stark shift control."""

__version__ = "0.1.0"
