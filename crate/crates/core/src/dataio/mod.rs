//! Data ingestion and the structures every later stage reads from.

mod adjacency;
mod embedding_file;
mod interactions;
mod mask;
mod prepared;
mod records;

pub use adjacency::{build_adjacency, NormalizedAdjacency};
pub use embedding_file::{
    decode_embedding_file, encode_embedding_file, read_embedding_file, write_embedding_file,
    EMBEDDING_FILE_HEADER_LEN, EMBEDDING_FILE_MAGIC, EMBEDDING_FILE_VERSION,
};
pub use interactions::{
    temporal_split, train_count, InteractionSet, TestInteraction, TrainInteraction,
    TrainPartition, UserHistory,
};
pub use mask::{build_negative_mask, NegativeMask};
pub use prepared::{
    load_prepared, sha256_file, sha256_hex, write_prepared, DatasetManifest, EmbeddingInfo,
    PreparedDataset, EMBEDDINGS_FILE, GROUND_TRUTH_FILE, MANIFEST_FILE,
};
pub use records::{k_core_filter, load_interactions, InteractionRecord, LoadReport};
