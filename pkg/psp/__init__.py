"""
psp-safety - Probabilistic Safety Programs

Compiles loop-bounded, branch-free probabilistic programs to a graphical
model and answers Pr(program returns True) against a threshold.
"""

__version__ = "0.4.0"
