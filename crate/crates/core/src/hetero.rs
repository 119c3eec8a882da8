//! Client heterogeneity: Fréchet distance between Gaussian summaries and the
//! mean leave-one-client-out distance Γ.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{check_psd, psd_sqrt, sym_eigen, Matrix};

/// Sample mean and unbiased covariance of a set of embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    pub mean: Vec<f64>,
    pub covariance: Matrix,
    pub sample_count: usize,
}

impl GaussianSummary {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

pub fn summarize(x: &Matrix) -> Result<GaussianSummary> {
    if x.rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "a Gaussian summary needs at least 2 samples, got {}",
            x.rows()
        )));
    }
    let (mean, covariance) = x.covariance()?;
    Ok(GaussianSummary {
        mean,
        covariance,
        sample_count: x.rows(),
    })
}

/// `‖μ₁ − μ₂‖² + tr Σ₁ + tr Σ₂ − 2 tr (Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2}`, clamped
/// at zero.
pub fn frechet_distance_sq(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64> {
    if a.dim() != b.dim() || a.covariance.shape() != b.covariance.shape() {
        return Err(Error::dim(format!(
            "cannot compare {}-D and {}-D summaries",
            a.dim(),
            b.dim()
        )));
    }
    let mean_term: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x - y).powi(2)).sum();
    let s1 = psd_sqrt(&a.covariance)?;
    check_psd(&sym_eigen(&b.covariance)?)?;
    let middle = s1.matmul(&b.covariance)?.matmul(&s1)?.symmetrized()?;
    let eig = sym_eigen(&middle)?;
    check_psd(&eig)?;
    let cross: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    let d = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
    Ok(d.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaReport {
    pub gamma: f64,
    /// `d²(D_k, D_{∖k})` for each client in ascending id order.
    pub per_client: Vec<f64>,
}

/// Γ over per-client embedding matrices: the mean over clients of the
/// squared Fréchet distance between a client and the pooled other clients.
pub fn gamma(clients: &[Matrix]) -> Result<GammaReport> {
    if clients.len() < 2 {
        return Err(Error::config(format!(
            "heterogeneity needs at least 2 clients, got {}",
            clients.len()
        )));
    }
    let mut per_client = Vec::with_capacity(clients.len());
    for (k, own) in clients.iter().enumerate() {
        let rest: Vec<&Matrix> = clients
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, m)| m)
            .collect();
        let pooled = Matrix::vstack(&rest)?;
        let context = |e: Error| match e {
            Error::InsufficientData(m) => Error::InsufficientData(format!("client {k}: {m}")),
            other => other,
        };
        let own = summarize(own).map_err(context)?;
        let rest = summarize(&pooled).map_err(context)?;
        per_client.push(frechet_distance_sq(&own, &rest)?);
    }
    let gamma = per_client.iter().sum::<f64>() / per_client.len() as f64;
    Ok(GammaReport { gamma, per_client })
}

/// Γ for a dataset split by a client assignment vector.
pub fn gamma_from_assignment(
    features: &Matrix,
    assignment: &[usize],
    num_clients: usize,
) -> Result<GammaReport> {
    if assignment.len() != features.rows() {
        return Err(Error::dim(format!(
            "{} client ids for {} samples",
            assignment.len(),
            features.rows()
        )));
    }
    let mut members = vec![Vec::new(); num_clients];
    for (i, &c) in assignment.iter().enumerate() {
        if c >= num_clients {
            return Err(Error::config(format!(
                "sample {i} assigned to client {c} of {num_clients}"
            )));
        }
        members[c].push(i);
    }
    let parts: Vec<Matrix> = members.iter().map(|m| features.select_rows(m)).collect();
    gamma(&parts)
}
