"""Identification, transport and recoverability of causal queries."""
from .estimand import (EXPERIMENT, SOURCE, TARGET, EvalTable, ProbTerm, Product, Quotient, Sum, evaluate_estimand,
                       free_symbols, from_json, has_do, rename_bound, retag, simplify, to_json, to_text, worlds)
from .identify import (IDENTIFIED, NOT_IDENTIFIED, ADMG, CausalQuery, Hedge, IdentificationResult, backdoor_set,
                       id_effect, latent_projection, rule2_applies)
from .query_file import QuerySpec, parse_assignment, parse_query
from .recover import RecoverabilityReport, recoverability_report, s_recoverable
from .transport import (SOURCE_EXPERIMENTS, SOURCE_OBSERVATIONAL, TARGET_OBSERVATIONAL, TransportQuery,
                        build_selection_diagram, s_admissible_adjustment, s_nodes_of, shared_graph,
                        trivially_transportable)

__all__ = [
    "SOURCE", "TARGET", "EXPERIMENT", "ProbTerm", "Sum", "Product", "Quotient", "EvalTable",
    "evaluate_estimand", "free_symbols", "from_json", "has_do", "rename_bound", "retag", "simplify", "to_json",
    "to_text", "worlds",
    "IDENTIFIED", "NOT_IDENTIFIED", "ADMG", "CausalQuery", "Hedge", "IdentificationResult", "backdoor_set",
    "id_effect", "latent_projection", "rule2_applies",
    "QuerySpec", "parse_assignment", "parse_query",
    "RecoverabilityReport", "recoverability_report", "s_recoverable",
    "SOURCE_EXPERIMENTS", "SOURCE_OBSERVATIONAL", "TARGET_OBSERVATIONAL", "TransportQuery",
    "build_selection_diagram", "s_admissible_adjustment", "s_nodes_of", "shared_graph", "trivially_transportable",
]
