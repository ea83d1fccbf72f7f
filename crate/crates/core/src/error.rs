use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("cost parameter q must be a finite nonnegative number, got {0}")]
    InvalidQ(f64),

    #[error("partial bijection is invalid: {0}")]
    InvalidBijection(String),

    #[error("brute-force enumeration limited to trains of at most {limit} spikes (got {n} and {m})")]
    TooLarge { n: usize, m: usize, limit: usize },

    #[error("diagram degrees differ: {0} vs {1}")]
    DegreeMismatch(usize, usize),

    #[error("bottleneck distance between diagrams {0} and {1} is infinite (unequal essential bar counts)")]
    InfiniteDistance(usize, usize),

    #[error("stimulus {stimulus:?} has {available} trials, {required} required")]
    InsufficientTrials {
        stimulus: String,
        available: usize,
        required: usize,
    },

    #[error("dataset has {} violation(s): {}", .0.len(), summarize(.0))]
    InvalidDataset(Vec<crate::types::Violation>),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

fn summarize(v: &[crate::types::Violation]) -> String {
    let shown: Vec<String> = v.iter().take(5).map(|x| x.to_string()).collect();
    let mut s = shown.join("; ");
    if v.len() > 5 {
        s.push_str("; ...");
    }
    s
}
