//! Distribution tails and the bivariate tests used for screening and
//! descriptive tables.

mod chi_square;
pub mod dist;
mod mann_whitney;
mod quantile;
mod shapiro;

pub use chi_square::{chi_square_test, pearson_statistic, ChiSquare};
pub use mann_whitney::{mann_whitney, MannWhitney, TestMethod};
pub use quantile::{median, quartiles};
pub use shapiro::{shapiro_wilk, shapiro_wilk_subsampled, ShapiroWilk};
