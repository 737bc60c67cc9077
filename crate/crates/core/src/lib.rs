//! Compression-based 1-nearest-neighbor classification over metric spaces.
//!
//! A farthest-first traversal of the sample yields a nested hierarchy of
//! γ-nets. Each net, labeled by the majority vote of its Voronoi cells,
//! is a compression scheme of size `2k`; [`model::fit`] keeps the one that
//! minimizes a high-probability error bound and predicts by 1-NN over it.
//!
//! ```
//! use optinet::metric::{Dataset, Metric};
//!
//! let ds = Dataset::from_line(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 1, 1]).unwrap();
//! let model = optinet::model::fit(&ds, &Metric::L2, Some(1.0 / 16.0)).unwrap();
//! assert_eq!(model.m_star(), 4);
//! ```

pub mod bound;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod io;
pub mod knn;
pub mod metric;
pub mod model;
pub mod net;
pub mod par;

pub use error::{Error, Result};
pub use metric::{Dataset, Label, Metric, Point, PointRef, PointSet};
pub use model::{fit, fit_holdout, OptiNetModel, SelectionMode};
pub use par::Parallelism;
