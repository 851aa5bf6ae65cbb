//! Retrieval metrics, regression error, and rank statistics.

mod metrics;
mod stats;

pub use metrics::{
    mae, mrr, random_order_mrr, recall_at, rmse, upper_bound, RetrievalReport, REPORT_KS,
};
pub use stats::{average_ranks, mann_whitney_u, spearman_rho, MannWhitney, EXACT_MWU_MAX_N};
