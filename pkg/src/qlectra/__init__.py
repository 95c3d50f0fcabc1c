"""Desk-scale simulation of quantum states, circuits, algorithms and open-system dynamics."""

__version__ = "0.1.0"
