//! Evaluation for multi-label ranking models: auROC, auPR, recall at fixed
//! false discovery rate, one-tailed paired significance tests, Table-style
//! aggregation, and hierarchical clustering of prototype vectors.

mod cluster;
mod error;
mod metrics;
mod report;
mod ttest;

pub use cluster::{cluster_prototypes, pair_recovery_score, Dendrogram, Merge};
pub use error::EvalError;
pub use metrics::{aupr, auroc, recall_at_fdr};
pub use report::{label_metrics, summarize, LabelMetrics, MetricReport, MetricSummary};
pub use ttest::{
    paired_t_test_one_tailed, regularized_incomplete_beta, student_t_upper_tail, TTestResult,
};
