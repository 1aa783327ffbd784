"""Dual-path retrieval over mixed narrative and tabular corpora."""

from .model import Block, Cell, Document, Query, Table, extract_cells, parse_corpus, serialize_corpus
from .router import RouterConfig, RoutedBlock, segment, sds, tokenize
from .embedder import EmbedderConfig, embed_query_tokens, embed_text, read_embeddings_file, write_embeddings_file
from .dense_index import DenseIndex, build_dense_index, search_dense
from .cell_index import (
    CellIndex,
    CellVector,
    PQCodebook,
    build_cell_index,
    decode_pq,
    dedup_centroids,
    encode_pq,
    maxsim_score,
    prune_cells,
    search_tables,
    serialize_cell,
    train_pq,
)
from .fusion import Candidate, fuse_candidates, lexical_cross_score, minmax_normalize, rerank
from .pipeline import BuiltIndex, PipelineConfig, SearchConfig, build_indexes, search_pipeline
from .store import Manifest, load_index, save_index

__version__ = "0.1.0"

__all__ = [
    "Block", "Cell", "Document", "Query", "Table", "extract_cells", "parse_corpus", "serialize_corpus",
    "RouterConfig", "RoutedBlock", "segment", "sds", "tokenize",
    "EmbedderConfig", "embed_query_tokens", "embed_text", "read_embeddings_file", "write_embeddings_file",
    "DenseIndex", "build_dense_index", "search_dense",
    "CellIndex", "CellVector", "PQCodebook", "build_cell_index", "decode_pq", "dedup_centroids",
    "encode_pq", "maxsim_score", "prune_cells", "search_tables", "serialize_cell", "train_pq",
    "Candidate", "fuse_candidates", "lexical_cross_score", "minmax_normalize", "rerank",
    "BuiltIndex", "PipelineConfig", "SearchConfig", "build_indexes", "search_pipeline",
    "Manifest", "load_index", "save_index",
    "__version__",
]
