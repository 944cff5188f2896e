"""Network-guided feature selection for high-dimensional phenotype data.

Feature relevance scoring, gene-module search, exact min-cut based
selection (single- and multi-task), network-regularized sparse
regression, and cross-validated model selection, with TSV/JSON file
interfaces and a command-line front end.
"""

from .datamodel import (
    CoefficientVector,
    DuplicateIdError,
    FeatureGeneMap,
    FeatureMatrix,
    ParseError,
    Phenotype,
    SelectionSet,
    ValidationError,
    WeightedNetwork,
    align,
    load_feature_gene_map,
    load_feature_matrix,
    load_network,
    load_phenotype,
    write_feature_matrix,
    write_network,
    write_phenotype,
    write_report,
)
from .netgraph import (
    GeneIntervals,
    GenomicPositions,
    build_feature_network,
    connected_components,
    cut_value,
    laplacian_quadratic,
    load_gene_intervals,
    load_positions,
)
from .relevance import (
    GeneScores,
    RelevanceVector,
    skat_linear_score,
    summarize_gene_pvalues,
    z_from_p,
)
from .modsearch import Module, greedy_module_search, module_score
from .scones import (
    SconesParams,
    STGraph,
    build_st_graph,
    max_flow_min_cut,
    multi_scones_objective,
    multi_scones_select,
    scones_select,
)
from .netreg import (
    PenaltySpec,
    SolverConfig,
    fit_gfl,
    fit_gggl,
    fit_grace,
    fit_lasso,
    fit_mtlasso,
    fit_ogl,
    lambda_max,
    lambda_path,
    objective,
    smooth_gradient,
    smooth_value,
    subgradient_residual,
)
from .selectpipe import (
    CvResult,
    GridPointResult,
    GridSpec,
    cv_grid_search,
    default_grid,
    generate_synthetic,
    kuncheva_index,
    stability_across_folds,
)

__version__ = "0.1.0"
