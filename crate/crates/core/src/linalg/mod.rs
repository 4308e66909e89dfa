//! Dense linear algebra and moment computation shared by the other modules.

mod chol;
mod cov;
pub mod csv_io;
mod distance;
mod lstsq;
mod matrix;
mod moments;

pub use chol::{cholesky, CholFactor, PIVOT_TOLERANCE};
pub use cov::{CovSpec, CovStructure};
pub use distance::{
    mahalanobis_all, mahalanobis_all_blocked, simplified_distance_all, DistanceKernel,
    DEFAULT_BLOCK_ROWS,
};
pub use lstsq::{information_matrix, solve_least_squares, LeastSquaresFit};
pub use matrix::{DataMatrix, SquareMatrix};
pub use moments::{streaming_moments, streaming_moments_chunked, MomentAccumulator};
