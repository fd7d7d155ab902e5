//! Nearest-centroid classification in the projected space.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::Projection;

/// Which class representation the centroids come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentroidSource {
    /// Plain class mean `μ_c`.
    Mean,
    /// Saliency-weighted representation `X_c p_c`.
    Weighted,
}

impl std::fmt::Display for CentroidSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CentroidSource::Mean => "mean",
            CentroidSource::Weighted => "weighted",
        })
    }
}

impl std::str::FromStr for CentroidSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(CentroidSource::Mean),
            "weighted" => Ok(CentroidSource::Weighted),
            other => Err(Error::InvalidArgument(format!("unknown centroid source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CentroidModel {
    /// `C × d`, one projected centroid per class.
    pub projected_centroids: DMatrix<f64>,
    pub source: CentroidSource,
    pub projection: Projection,
}

/// Projects one representation per class.
pub fn fit_centroids(
    projection: Projection,
    representations: &[DVector<f64>],
    source: CentroidSource,
) -> Result<CentroidModel> {
    if representations.is_empty() {
        return Err(Error::InvalidArgument("no class representations".into()));
    }
    let mut centroids = DMatrix::zeros(representations.len(), projection.dims);
    for (c, rep) in representations.iter().enumerate() {
        let z = projection.project_vector(rep)?;
        centroids.set_row(c, &z.transpose());
    }
    Ok(CentroidModel {
        projected_centroids: centroids,
        source,
        projection,
    })
}

impl CentroidModel {
    pub fn n_classes(&self) -> usize {
        self.projected_centroids.nrows()
    }

    /// Nearest centroid by squared Euclidean distance; ties go to the lower class id.
    pub fn predict(&self, samples: &DMatrix<f64>) -> Result<Vec<usize>> {
        let z = self.projection.project(samples)?;
        Ok(nearest_rows(&z, &self.projected_centroids))
    }
}

/// Free-function form of [`CentroidModel::predict`].
pub fn predict(model: &CentroidModel, samples: &DMatrix<f64>) -> Result<Vec<usize>> {
    model.predict(samples)
}

/// For each row of `points`, the index of the nearest row of `centroids`
/// (squared Euclidean, lowest index on ties).
pub fn nearest_rows(points: &DMatrix<f64>, centroids: &DMatrix<f64>) -> Vec<usize> {
    points
        .row_iter()
        .map(|z| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.row_iter().enumerate() {
                let d = (z - centroid).norm_squared();
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

/// Fraction of matching labels; `NaN` for empty input.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}
