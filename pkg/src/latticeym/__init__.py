"""Numerical laboratory for lattice gauge bounds and free-field formulas.

Subpackage map: ``groups`` (unitary ensembles and plaquette algebra),
``quadrature`` (Weyl-reduced class-function integration), ``single_bond``
(one-bond partition functions and their two-sided bounds), ``factorized``
(the exactly solvable product model and its continuum limits), ``lattice``
(gauge-fixed lattice geometry), ``mc`` (Metropolis verification of the
bounds), ``scalar`` (free scalar covariances), ``reporting``/``cli``
(suite runner and bit-stable report files).
"""

__version__ = "0.1.0"
