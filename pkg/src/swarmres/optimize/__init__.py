from .nsga3 import das_dennis, fast_nondominated_sort, nondominated, nsga3
from .topology import (InfeasibleError, ObjectiveVector, ParetoSolution, ReconfigConfig, ReconfigResult,
                       Selection, TopologyProblem, attack_auc, evaluate_static, feasibility_pool, optimize,
                       reconfiguration_cost, reconfigure, score_front, select_by_attack,
                       subsequent_vulnerability)
from .topsis import TopsisResult, simplex_grid, topsis

__all__ = [
    "das_dennis", "fast_nondominated_sort", "nondominated", "nsga3",
    "InfeasibleError", "ObjectiveVector", "ParetoSolution", "ReconfigConfig", "ReconfigResult",
    "Selection", "TopologyProblem", "attack_auc", "evaluate_static", "feasibility_pool", "optimize",
    "reconfiguration_cost", "reconfigure", "score_front", "select_by_attack", "subsequent_vulnerability",
    "TopsisResult", "simplex_grid", "topsis",
]
