"""Online approximate feedback-Nash equilibrium learning for N-player
control-affine differential games.

The package simulates simultaneous critic/actor weight adaptation driven by
instantaneous and grid-extrapolated Bellman errors, provides a pre-run gain
condition checker, and verifies linear-quadratic instances against a coupled
Riccati solver.
"""

__version__ = "0.1.0"

from .game_model import GameDefinition, LinearQuadraticGame
from .basis import BasisSet, PlayerBasis, quadratic_basis, polynomial_basis
from .bellman import ExtrapolationGrid, RegressorSample
from .update_laws import ActorConfig, CriticConfig, LearnerState
from .simulator import RunRecord, SimulationConfig
from .lq_oracle import RiccatiSolution

__all__ = [
    "__version__",
    "GameDefinition",
    "LinearQuadraticGame",
    "BasisSet",
    "PlayerBasis",
    "quadratic_basis",
    "polynomial_basis",
    "ExtrapolationGrid",
    "RegressorSample",
    "ActorConfig",
    "CriticConfig",
    "LearnerState",
    "RunRecord",
    "SimulationConfig",
    "RiccatiSolution",
]
