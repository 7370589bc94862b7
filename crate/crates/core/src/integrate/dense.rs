use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest dimension accepted by the dense oracle.
pub const DENSE_ORACLE_MAX_DIM: usize = 2000;

/// `exp(dt A) v` with a dense scaling-and-squaring exponential. Test oracle only.
pub fn dense_reference_expm(a: &DMatrix<f64>, v: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n != a.ncols() || n != v.len() {
        return Err(Error::Contract(format!(
            "dense oracle: matrix {}x{} with vector of length {}",
            n,
            a.ncols(),
            v.len()
        )));
    }
    if n > DENSE_ORACLE_MAX_DIM {
        return Err(Error::Contract(format!(
            "dense oracle dimension {n} exceeds {DENSE_ORACLE_MAX_DIM}"
        )));
    }
    let e = (a * dt).exp();
    Ok((e * DVector::from_column_slice(v)).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_generator_is_identity() {
        let v = [0.25, 0.75];
        assert_eq!(dense_reference_expm(&DMatrix::zeros(2, 2), &v, 3.0).unwrap(), v);
    }

    #[test]
    fn nilpotent_series_terminates() {
        let k = 1.7;
        let dt = 0.6;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, k, 0.0]);
        let v = [0.3, 0.2];
        let out = dense_reference_expm(&a, &v, dt).unwrap();
        assert!((out[0] - 0.3).abs() < 1e-15);
        assert!((out[1] - (0.2 + dt * k * 0.3)).abs() < 1e-14);
    }

    #[test]
    fn dimension_cap() {
        let a = DMatrix::zeros(2001, 2001);
        assert!(dense_reference_expm(&a, &vec![0.0; 2001], 1.0).is_err());
    }
}
