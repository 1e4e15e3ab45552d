//! Exponential-weights primitives shared by the meta-algorithms.

/// Indices whose value is within `tol` of the minimum.
pub fn argmin_set(values: &[f64], tol: f64) -> Vec<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().enumerate().filter(|(_, v)| **v <= min + tol).map(|(i, _)| i).collect()
}

/// Uniform distribution over `argmin_set(values, tol)`.
pub fn uniform_over_argmin(values: &[f64], tol: f64) -> Vec<f64> {
    let set = argmin_set(values, tol);
    let mass = 1.0 / set.len() as f64;
    let mut p = vec![0.0; values.len()];
    for i in set {
        p[i] = mass;
    }
    p
}

/// `p_i ∝ exp(−λ L_i)` computed with max-subtraction.
pub fn exp_weights(cum_loss: &[f64], lambda: f64) -> Vec<f64> {
    let min = cum_loss.iter().copied().fold(f64::INFINITY, f64::min);
    let unnorm: Vec<f64> = cum_loss.iter().map(|l| (-lambda * (l - min)).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    unnorm.into_iter().map(|w| w / total).collect()
}

/// Mix loss `−(1/λ) log Σ_i p_i exp(−λ ℓ_i)`.
///
/// `λ = ∞` gives the minimum loss over the support of `p`.
pub fn mix_loss(p: &[f64], losses: &[f64], lambda: f64) -> f64 {
    if lambda.is_infinite() {
        return p.iter().zip(losses).filter(|(w, _)| **w > 0.0).map(|(_, l)| *l).fold(f64::INFINITY, f64::min);
    }
    let min = p.iter().zip(losses).filter(|(w, _)| **w > 0.0).map(|(_, l)| *l).fold(f64::INFINITY, f64::min);
    let s: f64 = p.iter().zip(losses).map(|(w, l)| w * (-lambda * (l - min)).exp()).sum();
    min - s.ln() / lambda
}
