//! TREC-style evaluation: qrels and run files, P@n, nDCG@n, AP/MAP, Bpref,
//! Judged@n and per-topic reports.

mod metrics;
mod report;
mod trec;

pub use metrics::{
    average_precision, bpref, judged_at_n, mean_average_precision, ndcg_at_n, precision_at_n, BprefVariant,
    Judgements, NdcgVariant,
};
pub use report::{evaluate_run, evaluate_topic, EvalConfig, MetricReport, TopicMetrics};
pub use trec::{
    parse_qrels, parse_run, read_qrels, read_run, save_run, write_qrels, write_run, Qrels, RunEntry, RunFile,
    MAX_RUN_DEPTH,
};
