"""Exact lattice models of algebraic quantum field theory with anomalies.

Modules: ``lattice`` (causal orders), ``functionals`` (local functionals and
Lagrangians), ``symmetry`` (compactly supported symmetries), ``algebra``
(dynamical algebra words and rewriting), ``rg`` (renormalization group),
``cocycles``, ``anomaly`` (continuum numerics), ``metrics`` (metric
interpolation), ``scenario``, ``suites`` and ``cli``.
"""

__version__ = "0.1.0"
