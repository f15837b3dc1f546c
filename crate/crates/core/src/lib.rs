//! Greedy layer-wise neural architecture search.
//!
//! The search grows a network one hidden layer at a time. At each depth it
//! runs a random search over the newest layer only, keeps the best candidate
//! and freezes its layers for the next depth. Models are trained with a
//! from-scratch dense/convolutional kernel and Adam.

pub mod activation;
pub mod adam;
pub mod conv;
pub mod data;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod mlp;
pub mod model;
pub mod network;
pub mod oracle;
pub mod search;
pub mod space;
pub mod tensor;
pub mod train;

pub use activation::Activation;
pub use conv::{CnnArchitecture, ConvLayerSpec};
pub use data::{Dataset, SplitData, SplitSpec, Standardizer, Targets};
pub use error::{DataError, MetricError, ShapeError, TrainError};
pub use loss::Task;
pub use mlp::{param_count, ArchitectureSpec, LayerSpec};
pub use model::{AnyModel, Architecture, SavedModel};
pub use network::{ModelParams, Network};
pub use search::{gsnna_search, random_search, SearchConfig, SearchError, SearchOutcome, SearchReport, TrialResult};
pub use space::{Family, LayerSample, SearchSpace, TrialSpec};
pub use tensor::Tensor;
pub use train::{predict, train, TrainConfig, TrainedModel};
