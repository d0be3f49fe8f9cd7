//! Grayscale image segmentation by K-Means, Fuzzy C-Means (FCM) and
//! Spatial Fuzzy C-Means (SFCM).
//!
//! The crate is organised bottom-up:
//!
//! * [`fcm`] holds the domain types and the pure FCM mathematics
//!   (distances, membership and centroid updates, the objective).
//! * [`spatial`] holds neighbourhood windows and the spatial re-weighting
//!   that turns FCM into SFCM.
//! * [`engines`] drives the iterations for all three algorithms.
//! * [`phantom`] generates synthetic images with known ground truth and
//!   scores segmentations against them.
//! * [`imageio`] reads and writes netpbm rasters, PNG input and CSV traces.
//! * [`cli`] is the batch command-line front end.

pub mod cli;
pub mod engines;
pub mod error;
pub mod fcm;
pub mod imageio;
pub mod phantom;
pub mod spatial;

pub use engines::{LabelMap, SegmentationResult, defuzzify, run_fcm, run_kmeans, run_sfcm};
pub use error::{Error, Result};
pub use fcm::{
    BitDepth, Centroids, ClusterParams, DistanceMatrix, FeatureVector, ImageGrid, InitSpec,
    MembershipMatrix, ObjectiveTrace, TraceRecord,
};
