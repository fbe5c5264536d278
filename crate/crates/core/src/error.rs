use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(String),

    /// `row` is 1-based and counts data rows (the header is row 0).
    #[error("row {row}, column '{column}': cannot parse '{value}' as a finite number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("column '{0}' has no observed values")]
    EmptyColumn(String),

    #[error("no complete columns: at least one fully observed column is required")]
    NoCompleteColumns,

    #[error("no incomplete columns: nothing to test")]
    NoIncompleteColumns,

    #[error("invalid column roles: {0}")]
    Roles(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error(
        "singular matrix{context}: eigenvalue {eigenvalue:e} is at or below the threshold {threshold:e} \
         (constant column, response indicator without variation, or perfectly correlated columns)"
    )]
    SingularMatrix {
        eigenvalue: f64,
        threshold: f64,
        context: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Spec(String),

    #[error("test undefined for one pattern: Little's test needs at least two missingness patterns")]
    SinglePattern,

    #[error("all {0} replications were degenerate")]
    AllDegenerate(usize),
}

impl Error {
    /// Errors caused by the particular data draw rather than by invalid
    /// arguments. The harness counts these as degenerate replications.
    pub fn is_degenerate_data(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix { .. }
                | Error::ZeroVariance(_)
                | Error::SinglePattern
                | Error::EmptyColumn(_)
        )
    }

    pub(crate) fn singular_in(self, where_: &str) -> Self {
        match self {
            Error::SingularMatrix {
                eigenvalue,
                threshold,
                ..
            } => Error::SingularMatrix {
                eigenvalue,
                threshold,
                context: format!(" in {where_}"),
            },
            other => other,
        }
    }
}
