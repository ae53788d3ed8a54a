"""Quantum Zeno dynamics of the multimode quantum Rabi model."""
