//! Fixed-step RK4 for the flow checks.

/// Integrates `x' = f(x)` from `x0` over time `t` in `steps` RK4 steps.
pub fn rk4(f: impl Fn(&[f64]) -> Vec<f64>, x0: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let h = t / steps as f64;
    let mut x = x0.to_vec();
    let axpy = |x: &[f64], a: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(u, v)| u + a * v).collect() };
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&axpy(&x, 0.5 * h, &k1));
        let k3 = f(&axpy(&x, 0.5 * h, &k2));
        let k4 = f(&axpy(&x, h, &k3));
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let x = rk4(|x| vec![-x[0]], &[1.0], 1.0, 100);
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-9);
    }
}
