from .equivalence import EquivalenceRow, agreement_rate, equivalence_experiment
from .falsify import FalsifierResult, falsification_search
from .output import write_report

__all__ = [
    "EquivalenceRow",
    "FalsifierResult",
    "agreement_rate",
    "equivalence_experiment",
    "falsification_search",
    "write_report",
]
