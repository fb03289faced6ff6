//! Per-coordinate sample statistics over a matrix of Monte Carlo estimates.

use serde::{Deserialize, Serialize};

/// Row-major `n × dim` matrix of single-sample estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        Self {
            dim,
            data: Vec::with_capacity(dim * rows),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim, "row width");
        self.data.extend_from_slice(row);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, v: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        self.data.iter().skip(v).step_by(self.dim).copied()
    }

    pub fn summary(&self) -> Vec<Moments> {
        (0..self.dim).map(|v| Moments::from_iter(self.column(v))).collect()
    }
}

/// Mean, unbiased variance and the standard error of that variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// Standard error of `variance`, from the fourth central moment.
    pub variance_se: f64,
}

impl Moments {
    /// Two-pass moments. Requires at least two values.
    pub fn from_slice(xs: &[f64]) -> Self {
        Self::from_iter(xs.iter().copied())
    }

    pub fn from_iter<I>(xs: I) -> Self
    where
        I: Iterator<Item = f64> + Clone,
    {
        let (n, sum) = xs.clone().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
        assert!(n >= 2, "need at least two samples");
        let nf = n as f64;
        let mean = sum / nf;
        let (m2, m4) = xs.fold((0.0, 0.0), |(m2, m4), x| {
            let d = x - mean;
            let d2 = d * d;
            (m2 + d2, m4 + d2 * d2)
        });
        let variance = m2 / (nf - 1.0);
        let mu4 = m4 / nf;
        let var_of_var = (mu4 - variance * variance * (nf - 3.0) / (nf - 1.0)) / nf;
        Self {
            n,
            mean,
            variance,
            variance_se: var_of_var.max(0.0).sqrt(),
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn std_err(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }

    /// `|mean| / std_dev`; zero when both vanish.
    pub fn snr(&self) -> f64 {
        let sd = self.std_dev();
        if sd > 0.0 {
            self.mean.abs() / sd
        } else if self.mean == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Pearson correlation, or `None` when either side has zero spread.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        saa += dx * dx;
        sbb += dy * dy;
        sab += dx * dy;
    }
    let denom = (saa * sbb).sqrt();
    if denom > 0.0 && denom.is_finite() {
        Some((sab / denom).clamp(-1.0, 1.0))
    } else {
        None
    }
}
