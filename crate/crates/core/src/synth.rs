//! Seeded synthetic Gaussian class data.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Isotropic Gaussian classes around explicit means.
#[derive(Debug, Clone)]
pub struct GaussianClasses {
    pub means: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub sigma: f64,
    pub seed: u64,
}

impl GaussianClasses {
    /// `n_classes` means on scaled coordinate axes, every pair `separation · σ` apart.
    pub fn separated(n_classes: usize, dim: usize, per_class: usize, separation: f64, sigma: f64, seed: u64) -> Result<Self> {
        if n_classes > dim {
            return Err(Error::InvalidArgument(format!(
                "{n_classes} axis-separated classes need at least {n_classes} dimensions, got {dim}"
            )));
        }
        let scale = separation * sigma / std::f64::consts::SQRT_2;
        let means = (0..n_classes)
            .map(|c| {
                let mut m = vec![0.0; dim];
                m[c] = scale;
                m
            })
            .collect();
        Ok(GaussianClasses {
            means,
            sizes: vec![per_class; n_classes],
            sigma,
            seed,
        })
    }

    /// Two classes `close · σ` apart plus a third class `far · σ` from both.
    pub fn with_outlier_class(dim: usize, per_class: usize, close: f64, far: f64, sigma: f64, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument("outlier layout needs at least 2 dimensions".into()));
        }
        let mut a = vec![0.0; dim];
        let mut b = vec![0.0; dim];
        let mut o = vec![0.0; dim];
        a[0] = -0.5 * close * sigma;
        b[0] = 0.5 * close * sigma;
        o[1] = far * sigma;
        Ok(GaussianClasses {
            means: vec![a, b, o],
            sizes: vec![per_class; 3],
            sigma,
            seed,
        })
    }

    pub fn generate(&self) -> Result<Dataset> {
        if self.means.len() != self.sizes.len() || self.means.is_empty() {
            return Err(Error::InvalidArgument("one size per class mean required".into()));
        }
        let dim = self.means[0].len();
        let normal = Normal::new(0.0, self.sigma)
            .map_err(|e| Error::InvalidArgument(format!("bad sigma: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n: usize = self.sizes.iter().sum();
        let mut values = Vec::with_capacity(n * dim);
        let mut labels = Vec::with_capacity(n);
        for (c, (mean, &size)) in self.means.iter().zip(&self.sizes).enumerate() {
            if mean.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: mean.len(),
                });
            }
            for _ in 0..size {
                values.extend(mean.iter().map(|m| m + normal.sample(&mut rng)));
                labels.push(c);
            }
        }
        let names = (0..self.means.len()).map(|c| format!("{}", c + 1)).collect();
        Dataset::new(DMatrix::from_row_slice(n, dim, &values), labels, names)
    }
}

/// Writes a dataset as CSV with `x1..xD,label` columns.
pub fn write_csv(dataset: &Dataset, writer: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=dataset.n_features()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (row, &label) in dataset.features.row_iter().zip(&dataset.labels) {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(dataset.label_names[label].clone());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
