"""psabot: a text-command dialogue interface to a simulated shuttle robot.

Utterances run through linguistic, discourse, and resolved
representations into executable scripts; every stage also emits
meta-outputs (presupposition failures, resolution notes, costs) that
the dialogue manager uses to pick an interpretation and a dialogue
move.  One interpreter both dry-runs scripts against a threaded state
vector and executes them against the simulated world.
"""

from .dm import DialogueManager
from .service import Pacing, SessionEngine, SessionManager
from .world import WorldModel, load_config, load_default

__version__ = "0.1.0"

__all__ = [
    "DialogueManager",
    "Pacing",
    "SessionEngine",
    "SessionManager",
    "WorldModel",
    "load_config",
    "load_default",
    "__version__",
]
