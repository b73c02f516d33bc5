"""flexchain: screw-theoretic dynamics of serial chains of flexible links.

The package decomposes each link's motion into a floating body frame plus an
assumed-modes deformation field, assembles the chain's constrained equations
of motion into one linear system per time step (twist rates, joint wrenches,
modal accelerations), and integrates the result with fixed-step explicit
schemes.  A small CLI drives simulations from YAML scenario files and writes
CSV trajectories, JSON summaries, and PNG figures.
"""

__version__ = "0.1.0"

from .beam import LinkParameters, LinkState
from .modes import LinkBasis, ModalField
from .joints import JointSpec
from .assembly import (Chain, ChainLink, SingularSystem, assemble, solve,
                       extract, schur_check, system_energy, system_momentum)
from .integrator import IntegrationError, derivative, simulate

__all__ = [
    "LinkParameters", "LinkState", "LinkBasis", "ModalField", "JointSpec",
    "Chain", "ChainLink", "SingularSystem", "assemble", "solve", "extract",
    "schur_check", "system_energy", "system_momentum", "IntegrationError",
    "derivative", "simulate", "__version__",
]
