"""Numerical mirror symmetry for principally polarized abelian varieties.

Modules: siegel (moduli and modular actions), theta (theta functions), bside
(sections and their products), aside (Floer theory of affine branes), mirror
(the mirror functor and the checks), cli (command line).
"""

__version__ = "0.1.0"
