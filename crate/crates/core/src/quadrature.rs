//! One-dimensional quadrature building blocks and low-discrepancy points.

use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on `[0, 1]`; weights sum to one.
pub fn gauss_legendre<T: Real>(order: usize) -> (Vec<T>, Vec<T>) {
    assert!(order >= 1, "quadrature order must be positive");
    let n = order;
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Newton iteration on P_n starting from the Chebyshev-like guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (
        nodes.into_iter().map(T::lit).collect(),
        weights.into_iter().map(T::lit).collect(),
    )
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre on `[0, 1]`: `panels` equal panels of `order` nodes.
/// Weights sum to one.
pub fn composite_gauss<T: Real>(panels: usize, order: usize) -> (Vec<T>, Vec<T>) {
    composite_gauss_on(panels, order, T::zero(), T::one())
}

/// Composite Gauss–Legendre on `[a, b]`, weights sum to `b - a`.
pub fn composite_gauss_on<T: Real>(panels: usize, order: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let panels = panels.max(1);
    let (x, w) = gauss_legendre::<T>(order);
    let h = (b - a) / T::from_usize_(panels);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + h * T::from_usize_(p);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + h * *xi);
            weights.push(h * *wi);
        }
    }
    (nodes, weights)
}

/// Composite midpoint rule on `[a, b]` with `m` cells.
pub fn midpoint_on<T: Real>(m: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let h = (b - a) / T::from_usize_(m);
    let nodes = (0..m).map(|i| a + h * (T::from_usize_(i) + T::lit(0.5))).collect();
    (nodes, vec![h; m])
}

/// Radical inverse of `index` in `base` (van der Corput).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// `count` Halton points in `[0,1]^dim` (dim ≤ 3 uses bases 2, 3, 5).
pub fn halton<T: Real>(count: usize, dim: usize) -> Vec<Vec<T>> {
    const BASES: [u64; 3] = [2, 3, 5];
    assert!((1..=3).contains(&dim));
    (1..=count as u64)
        .map(|i| BASES[..dim].iter().map(|&b| T::lit(radical_inverse(i, b))).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for order in 1..12 {
            let (x, w) = gauss_legendre::<f64>(order);
            let total: f64 = w.iter().sum();
            assert!((total - 1.0).abs() < 1e-14);
            for deg in 0..(2 * order) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((q - exact).abs() < 1e-13, "order {order} deg {deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn composite_rule_sums_to_interval_length() {
        let (x, w) = composite_gauss_on::<f64>(5, 8, -1.0, 3.0);
        assert_eq!(x.len(), 40);
        assert!((w.iter().sum::<f64>() - 4.0).abs() < 1e-13);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
        assert!((q - (3f64.exp() - (-1f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn halton_points_in_unit_cube() {
        let pts = halton::<f64>(500, 3);
        assert!(pts.iter().flatten().all(|&v| (0.0..1.0).contains(&v)));
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }
}
