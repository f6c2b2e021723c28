use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::data::OfflineDataset;
use crate::error::{Error, Result};
use crate::mdp::FeatureMap;

/// `ridge * I + sum_tau phi_tau phi_tau^T`.
pub fn regularized_gram(dataset: &OfflineDataset, features: &FeatureMap, ridge: f64) -> DMatrix<f64> {
    let d = features.dim();
    let mut gram = DMatrix::identity(d, d) * ridge;
    for t in dataset.iter() {
        let phi = features.phi(t.state, t.action);
        gram.ger(1.0, &phi, &phi, 1.0);
    }
    gram
}

pub fn cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or_else(|| Error::Invariant("matrix is not positive definite".into()))
}

/// `sqrt(x^T A^{-1} x)` given the factorization of `A`.
pub fn inverse_norm(chol: &Cholesky<f64, Dyn>, x: &DVector<f64>) -> f64 {
    // ||L^{-1} x||
    let l = chol.l_dirty();
    let y = l
        .solve_lower_triangular(x)
        .expect("cholesky factor has a nonzero diagonal");
    y.norm()
}

/// `sqrt(x^T A x)`.
pub fn weighted_norm(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(a * x)).max(0.0).sqrt()
}
