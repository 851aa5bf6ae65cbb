//! Embedding stores, SGNS training, and question-field encoders.

mod encoder;
mod sgns;
mod store;

pub use encoder::{
    body_key, encode_field, title_key, FieldVectors, MeanPoolEncoder, PrecomputedEncoder,
    QuestionEncoder,
};
pub use sgns::{
    build_vocab, pair_gradient, pair_objective, train_sgns, PairGradient, SgnsConfig,
    TrainedSgns, TrainingMode, Vocabulary,
};
pub use store::EmbeddingStore;
