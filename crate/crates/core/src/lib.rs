//! Graph clustering driven by regular-equivalence similarity: similarity
//! computation, structural metrics, feature assembly, a GCN encoder,
//! contrastive/KL fine-tuning, and clustering evaluation.

pub mod cluster_eval;
pub mod features;
pub mod gcn;
pub mod gradcheck;
pub mod graph;
pub mod pipeline;
pub mod resim;
pub mod structmetrics;
pub mod synthetic;
pub mod trainer;

pub use cluster_eval::{evaluate, kmeans, ClusteringResult, EvalError, EvalReport};
pub use features::{build_features, FeatureCombo, FeatureError, FeatureMatrix, Representatives};
pub use gcn::{init_model, GcnError, GcnModel, NormalizedAdjacency};
pub use graph::{parse_edge_list, parse_labels, Graph, GraphError, LabelVector};
pub use resim::{compute_re_similarity, re_eigenfeatures, ReEigFeatures, ReSimConfig, ReSimMatrix, ResimError};
pub use structmetrics::{MetricName, MetricVector, MetricsError};
pub use trainer::{ContrastiveSamples, LossMask, TrainConfig, TrainError, TrainHistory};
pub use pipeline::{run_on_graph, PipelineError, RunConfig, RunOutcome};
pub use pipeline::StageTimings;
