use rand::Rng;

/// Systematic resampling: `n_out` ancestor indices in ascending order with
/// counts within one of `n_out * w_i`.
pub fn resample<R: Rng + ?Sized>(weights: &[f64], n_out: usize, rng: &mut R) -> Vec<usize> {
    assert!(!weights.is_empty(), "cannot resample an empty population");
    let total: f64 = weights.iter().sum();
    let last_positive = weights.iter().rposition(|w| *w > 0.0).expect("some positive weight");
    let u0: f64 = rng.random::<f64>();
    let mut out = Vec::with_capacity(n_out);
    let mut cum = weights[0] / total;
    let mut i = 0;
    for k in 0..n_out {
        let pos = (u0 + k as f64) / n_out as f64;
        while pos >= cum && i < last_positive {
            i += 1;
            cum += weights[i] / total;
        }
        out.push(i);
    }
    out
}
