use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Ordinary least-squares polynomial fit, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    pub coefficients: Vec<f64>,
    /// One-sigma errors from the residual-scaled covariance; `None` when the
    /// fit has no residual degrees of freedom.
    pub standard_errors: Option<Vec<f64>>,
    pub residual_sum_squares: f64,
    pub degrees_of_freedom: usize,
}

impl PolyFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Coefficient divided by its standard error.
    pub fn t_statistic(&self, index: usize) -> Option<f64> {
        let se = self.standard_errors.as_ref()?.get(index).copied()?;
        let c = *self.coefficients.get(index)?;
        if se > 0.0 { Some(c / se) } else { None }
    }
}

pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<PolyFit> {
    let n = x.len();
    let m = degree + 1;
    if y.len() != n {
        return Err(Error::InvalidParameter(format!("x has {n} points but y has {}", y.len())));
    }
    if n < m {
        return Err(Error::InsufficientData(format!(
            "degree {degree} fit needs {m} points, got {n}"
        )));
    }
    let design = DMatrix::from_fn(n, m, |i, j| x[i].powi(j as i32));
    let rhs = DVector::from_column_slice(y);
    let normal = design.transpose() * &design;
    let inverse = normal
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InsufficientData("abscissae do not determine the polynomial".into()))?;
    let beta = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InsufficientData(e.to_string()))?;
    let residual = &rhs - &design * &beta;
    let rss = residual.norm_squared();
    let dof = n - m;
    let standard_errors = (dof > 0).then(|| {
        let s2 = rss / dof as f64;
        (0..m).map(|j| (s2 * inverse[(j, j)]).sqrt()).collect()
    });
    Ok(PolyFit {
        coefficients: beta.iter().copied().collect(),
        standard_errors,
        residual_sum_squares: rss,
        degrees_of_freedom: dof,
    })
}
