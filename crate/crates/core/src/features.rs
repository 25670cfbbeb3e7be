//! Node feature matrices: RE eigenvectors, structural metrics, or both.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::resim::ReEigFeatures;
use crate::structmetrics::{self, MetricName, MetricsError};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("feature combo {0} needs RE eigenvectors but none were supplied")]
    MissingReEig(FeatureCombo),
    #[error("feature combo {0} selects no columns")]
    NoColumns(FeatureCombo),
    #[error("RE eigenvectors have {got} rows, graph has {want} nodes")]
    RowMismatch { got: usize, want: usize },
    #[error("unknown feature combo `{0}`")]
    UnknownCombo(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureCombo {
    ReEigDegree,
    Degree,
    ReEigAll,
    All,
    ReEigLocal,
    Local,
    ReEig,
}

impl FeatureCombo {
    pub const ALL: [FeatureCombo; 7] = [
        Self::ReEigDegree,
        Self::Degree,
        Self::ReEigAll,
        Self::All,
        Self::ReEigLocal,
        Self::Local,
        Self::ReEig,
    ];

    pub fn uses_reeig(self) -> bool {
        matches!(self, Self::ReEigDegree | Self::ReEigAll | Self::ReEigLocal | Self::ReEig)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ReEigDegree => "reeig+degree",
            Self::Degree => "degree",
            Self::ReEigAll => "reeig+all",
            Self::All => "all",
            Self::ReEigLocal => "reeig+local",
            Self::Local => "local",
            Self::ReEig => "reeig",
        }
    }

    fn metrics(self, reps: &Representatives) -> Vec<MetricName> {
        match self {
            Self::ReEigDegree | Self::Degree => vec![MetricName::Deg],
            Self::ReEigAll | Self::All => reps.global.iter().chain(&reps.local).copied().collect(),
            Self::ReEigLocal | Self::Local => reps.local.clone(),
            Self::ReEig => Vec::new(),
        }
    }
}

impl fmt::Display for FeatureCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureCombo {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace(['_', '-'], "+");
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == key || c.as_str().replace('+', "") == key)
            .ok_or_else(|| FeatureError::UnknownCombo(s.to_string()))
    }
}

/// Metric subsets standing in for the global and local metric families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representatives {
    pub global: Vec<MetricName>,
    pub local: Vec<MetricName>,
}

impl Default for Representatives {
    fn default() -> Self {
        use MetricName::*;
        Self { global: vec![EC, PR], local: vec![Deg, EXTD, DE, CE, LCC, CoreDP] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub x: DMatrix<f64>,
    pub schema: Vec<String>,
    pub standardized: bool,
}

impl FeatureMatrix {
    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn to_csv(&self, node_ids: &[String]) -> String {
        let mut out = String::from("node");
        for s in &self.schema {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for (i, id) in node_ids.iter().enumerate() {
            out.push_str(id);
            for j in 0..self.x.ncols() {
                out.push(',');
                out.push_str(&format!("{:e}", self.x[(i, j)]));
            }
            out.push('\n');
        }
        out
    }
}

pub fn column_label(metric: MetricName) -> &'static str {
    match metric {
        MetricName::Deg => "degree",
        MetricName::EC => "eigenvector",
        MetricName::PR => "pagerank",
        MetricName::CC => "closeness",
        MetricName::BC => "betweenness",
        MetricName::EXTD => "extended_degree",
        MetricName::ACCD => "accumulated_degree",
        MetricName::NM => "node_mass",
        MetricName::CE => "egonet_conductance",
        MetricName::DE => "egonet_density",
        MetricName::LCC => "local_clustering",
        MetricName::CoreDC => "core_dominance_cosine",
        MetricName::CoreDJ => "core_dominance_jaccard",
        MetricName::CoreDP => "core_dominance_pearson",
        MetricName::SPA => "core_dominance_pa",
    }
}

/// Population z-score of every column; constant columns become zero.
pub fn standardize_columns(x: &mut DMatrix<f64>) {
    let n = x.nrows() as f64;
    for mut col in x.column_iter_mut() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std <= 1e-12 * mean.abs().max(1.0) {
            col.fill(0.0);
        } else {
            col.iter_mut().for_each(|v| *v = (*v - mean) / std);
        }
    }
}

/// Assembles `[ReEig | metrics]` for `combo` and z-scores every column.
pub fn build_features(
    g: &Graph,
    re: Option<&ReEigFeatures>,
    combo: FeatureCombo,
    reps: &Representatives,
) -> Result<FeatureMatrix, FeatureError> {
    let n = g.n_nodes();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut schema = Vec::new();
    if combo.uses_reeig() {
        let re = re.ok_or(FeatureError::MissingReEig(combo))?;
        if re.vectors.nrows() != n {
            return Err(FeatureError::RowMismatch { got: re.vectors.nrows(), want: n });
        }
        for (c, col) in re.vectors.column_iter().enumerate() {
            columns.push(col.iter().copied().collect());
            schema.push(format!("reeig_{c}"));
        }
    }
    for metric in combo.metrics(reps) {
        columns.push(structmetrics::compute_metric(g, metric)?.values);
        schema.push(column_label(metric).to_string());
    }
    if columns.is_empty() {
        return Err(FeatureError::NoColumns(combo));
    }
    let mut x = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    standardize_columns(&mut x);
    Ok(FeatureMatrix { x, schema, standardized: true })
}
