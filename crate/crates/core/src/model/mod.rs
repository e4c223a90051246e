//! Regression functions, datasets, simulation under `P_f`, cell counting and
//! the thinning transform.

mod dataset;
mod function;

pub use dataset::{
    cell_counts, poisson_count, poisson_count_with, sample_dataset, sample_dataset_with, sample_poisson_dataset_with,
    thin_dataset, CellCounts, DataSet,
};
pub use function::{
    average_onto, cell_mean, integral, l1_distance, l2_squared, sorted_splits, Function, GridFunction,
    RegressionFunction, StepFunction,
};
