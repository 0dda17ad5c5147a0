"""Gate scheduling via graph-coloring Hamiltonians and a simulated VQE."""

__version__ = "0.1.0"
