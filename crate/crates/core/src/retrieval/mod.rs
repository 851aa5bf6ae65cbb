//! Siamese duplicate retrieval: buckets, hard negatives, the shared head,
//! triplet training, candidate generation and ranking.

pub mod buckets;
pub mod candidates;
pub mod head;
pub mod negatives;
pub mod rank;
pub mod train;

pub use buckets::{bucket_similarity, build_buckets, duplicate_clusters, Bucket, SimilarityMatrix};
pub use candidates::{Candidate, CandidateFilter, CandidateGenerator, CandidateSet, EvalAnchor};
pub use head::{pnorm_distance, triplet_loss, SiameseHead};
pub use negatives::{tag_jaccard, NegativeChoice, NegativeSampler};
pub use rank::{ids_needed, project_all, rank_candidates, rank_projected, Projections, ScoreFunction};
pub use train::{train_head, HeadHyper, TrainingReport, Triplet, TripletSource};
