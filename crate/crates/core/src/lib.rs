//! Metadata-driven scene mosaics: spatio-temporal indexing, FOV geometry,
//! heuristic pair selection, composability classifiers and mosaic layout.
//!
//! The numeric core is generic over the scalar type (`f32`/`f64`) through
//! [`scalar::Real`]; the `*64` aliases below fix `f64`, which is what the
//! CLI and file formats use.

pub mod composition;
pub mod coverage;
pub mod error;
pub mod features;
pub mod geo;
pub mod heuristics;
pub mod index;
pub mod metrics;
pub mod overlap;
pub mod relevance;
pub mod scalar;

pub mod classifiers;

pub use coverage::{ServiceId, SocSenService};
pub use error::{Error, Result};
pub use scalar::Real;

/// Concrete `f64` aliases for the common types.
pub type GeoPoint64 = geo::GeoPoint<f64>;
pub type SceneQuery64 = geo::SceneQuery<f64>;
pub type Coverage64 = coverage::Coverage<f64>;
pub type SocSenService64 = coverage::SocSenService<f64>;
pub type FovTriangle64 = coverage::FovTriangle<f64>;
pub type RTree3D64 = index::RTree3D<f64>;
pub type ScoredPair64 = heuristics::ScoredPair<f64>;
pub type PairFeatureRow64 = features::PairFeatureRow<f64>;
pub type TrainedModel64 = classifiers::TrainedModel<f64>;
pub type MosaicManifest64 = composition::MosaicManifest<f64>;
