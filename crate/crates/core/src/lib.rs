//! Reference-free image quality assessment.
//!
//! Volumes are segmented slice by slice, described by texture and transform
//! features, standardized and reduced by PCA, and classified into five
//! Likert quality classes by a one-vs-one RBF SVM or a feedforward network.
//! A pool-based active-learning loop picks the datasets whose class is most
//! uncertain for the next round of labeling.

pub mod active;
pub mod corpus;
pub mod cv;
pub mod error;
pub mod eval;
pub mod features;
pub mod mlp;
pub mod pipeline;
pub mod reduction;
pub mod fft;
pub mod segmentation;
pub mod svm;

pub use corpus::{ImageVolume, LikertClass, TestCaseDatabase, NUM_CLASSES};
pub use error::{AlqaError, Result};
