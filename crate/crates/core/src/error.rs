use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The Sylvester operator is singular or numerically close to it.
    #[error("Sylvester operator is (near-)singular: separation {separation:.3e}, condition estimate {condition:.3e}")]
    Solvability { separation: f64, condition: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    /// Substepping of the linearized Riccati flow could not keep the
    /// denominator block well conditioned; the solution most likely blows up.
    #[error("finite escape time suspected before t = {t}: conditioning failed after {halvings} halvings")]
    FiniteEscape { t: f64, halvings: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
