"""Influence-guided edge-perturbation attacks on graph node classifiers."""

from .attack import AttackPlan, CandidateSets, build_candidates, plan_attack, resolve_labels
from .data import (
    ExperimentSplit,
    generate_sbm,
    load_bundle,
    pick_target_label,
    sample_split,
    save_bundle,
)
from .errors import DataError, EdgeflipError, MissingLabelError, UsageError
from .graph import (
    EdgeOverlay,
    Graph,
    WalkSet,
    enumerate_walks,
    k_hop,
    norm_adj_power_row,
    power_row_weights,
)
from .harness import ExperimentConfig, bench_influence, run_sweep
from .influence import (
    InfluenceBreakdown,
    InfluenceQuery,
    approx_constant,
    approx_delta,
    approx_delta_parts,
    gain,
    label_influence_dfs,
    label_influence_exact,
    objective_exact,
)
from .victim import (
    LpState,
    SgcModel,
    attack_margin,
    label_propagation,
    sgc_propagate,
    sgc_train,
    theorem1_check,
    train_on_graph,
)

__version__ = "0.1.0"
