from .metrics import ndcg_at_k, recall_at_k
from .generator import CorpusSpec, QueryCounts, generate_corpus, generate_queries
from .dilution import DilutionRow, run_dilution_experiment, dilution_csv
from .harness import EvalConfig, evaluate, build_linearized_index, linearize_markdown

__all__ = [
    "ndcg_at_k",
    "recall_at_k",
    "CorpusSpec",
    "QueryCounts",
    "generate_corpus",
    "generate_queries",
    "DilutionRow",
    "run_dilution_experiment",
    "dilution_csv",
    "EvalConfig",
    "evaluate",
    "build_linearized_index",
    "linearize_markdown",
]
