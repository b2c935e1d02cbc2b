"""Diffusion-limit laboratory for the randomly driven kinetic BGK equation."""

__version__ = "0.1.0"
