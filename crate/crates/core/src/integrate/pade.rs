use nalgebra::DMatrix;

/// `exp(H)` by degree-6 diagonal Padé approximation with scaling and squaring.
pub fn expm_pade(h: &DMatrix<f64>) -> DMatrix<f64> {
    const P: usize = 6;
    let n = h.nrows();
    assert_eq!(n, h.ncols(), "expm of a non-square matrix");
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm = h
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if norm == 0.0 {
        return DMatrix::identity(n, n);
    }
    let squarings = ((norm.log2().floor() as i32) + 2).max(0);
    let hs = h / 2f64.powi(squarings);

    let mut c = [0.0; P + 1];
    c[0] = 1.0;
    for k in 1..=P {
        c[k] = c[k - 1] * (P + 1 - k) as f64 / (k * (2 * P + 1 - k)) as f64;
    }
    let id = DMatrix::<f64>::identity(n, n);
    let h2 = &hs * &hs;
    let h4 = &h2 * &h2;
    let h6 = &h4 * &h2;
    let u = &hs * (&id * c[1] + &h2 * c[3] + &h4 * c[5]);
    let v = &id * c[0] + &h2 * c[2] + &h4 * c[4] + &h6 * c[6];
    let num = &v + &u;
    let den = &v - &u;
    let mut r = den
        .lu()
        .solve(&num)
        .expect("Padé denominator is nonsingular for a scaled argument");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}
