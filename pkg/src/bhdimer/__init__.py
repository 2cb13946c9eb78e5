"""Driven-dissipative Bose-Hubbard dimer: Lindblad evolution in a truncated
two-mode Fock space, detuning-sweep protocol and Josephson-oscillation analysis."""

__version__ = "0.1.0"
