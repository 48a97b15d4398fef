"""Word embeddings from lexical knowledge graphs (SWOW, WordNet) and their
evaluation on word similarity and fMRI activation prediction."""

from ._core import (
    Embeddings,
    EmbeddingFormat,
    FmriDataset,
    Graph,
    KatzMode,
    LexembError,
    SimResult,
    SwowMode,
    TwoVsTwoResult,
    cli,
    cosine,
    embed_katz,
    embed_pmi,
    embed_sme,
    embed_walk,
    evaluate_similarity,
    ingest_edge_list,
    ingest_swow,
    load_fmri,
    load_graph,
    read_embeddings,
    save_graph,
    select_subgraph,
    spearman,
    two_vs_two,
    write_embeddings,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
