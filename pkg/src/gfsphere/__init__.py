"""Generating functions for contactomorphisms of the standard sphere.

Modules: :mod:`contact_core` (sphere, Reeb flow, contactomorphisms),
:mod:`symplectization` (lifts, tau, Cayley forms), :mod:`genfun`
(generating functions and the composition product), :mod:`homology`
(sublevel Betti numbers), :mod:`sweep` (the parametric Morse sweep),
:mod:`hamlang` (Hamiltonian expressions) and :mod:`cli`.
"""

from .contact_core import Contactomorphism, HamSpec, reeb_flow
from .genfun import QuadForm, action_genfun, compose, genfun_for_isotopy, reeb_family
from .homology import BettiVector, SublevelType, brute_force_betti, quad_sublevel_type
from .symplectization import cayley_genfun, tau, tau_inv
from .sweep import SweepLedger, numeric_sweep, quadratic_sweep, translated_points_from_ledger

__version__ = "0.1.0"

__all__ = [
    "BettiVector",
    "Contactomorphism",
    "HamSpec",
    "QuadForm",
    "SublevelType",
    "SweepLedger",
    "action_genfun",
    "brute_force_betti",
    "cayley_genfun",
    "compose",
    "genfun_for_isotopy",
    "numeric_sweep",
    "quad_sublevel_type",
    "quadratic_sweep",
    "reeb_family",
    "reeb_flow",
    "tau",
    "tau_inv",
    "translated_points_from_ledger",
]
