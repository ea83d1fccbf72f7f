//! Topological analysis of simultaneously recorded spike trains.
//!
//! Each trial's ensemble of trains becomes a finite metric space under the
//! Victor-Purpura distance; its Vietoris-Rips persistence diagram is compared
//! across trials with the bottleneck distance and classified by
//! leave-one-out 1-nearest-neighbour.
//!
//! ```
//! use spiketopo::{metrics::vp_distance, SpikeTrain, TimeDomain};
//!
//! let dom = TimeDomain::new(10);
//! let a = SpikeTrain::new(vec![1], dom).unwrap();
//! let b = SpikeTrain::new(vec![3], dom).unwrap();
//! assert_eq!(vp_distance(&a, &b, 0.5).unwrap(), 1.0);
//! ```

pub mod diagram_distance;
pub mod embed;
pub mod error;
pub mod io;
pub mod matching;
pub mod metrics;
pub mod oracle;
pub mod persistence;
pub mod pipeline;
pub mod selfcheck;
pub mod single_neuron;
pub mod stability;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    canonicalize, validate_dataset, Bar, Dataset, DistanceMatrix, LabeledTrial,
    PersistenceDiagram, RasterFile, RawTrial, Rule, SpikeTrain, Tick, TimeDomain, TrainEnsemble,
    Violation,
};
