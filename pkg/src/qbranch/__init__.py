"""Exact tunneling solutions and their Madelung / classical-action decompositions.

Submodules
----------
gridfield
    Uniform grids, sampled fields and finite-difference operators.
scattering1d
    Potential step and rectangular barrier stationary states.
madelung
    Density, phase, velocity and quantum potential of a sampled field.
branches
    Multi-branch classical-action superpositions and their diagnostics.
coulomb
    Coulomb wave functions and the decay / fusion Madelung fields.
ksmap
    Kustaanheimo-Stiefel oscillator actions and branch integrals.
phases
    Berry holonomy, flux quantization, Josephson and SQUID relations.
oracle
    Independent brute-force solvers used for cross-validation.
"""

from qbranch.errors import QBranchError

__all__ = ["QBranchError", "__version__"]

__version__ = "0.1.0"
