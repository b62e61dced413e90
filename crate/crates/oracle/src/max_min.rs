//! Max-min throughput over the received SNRs for fixed gains, solved through
//! its Lagrangian dual over user weights `μ` on the simplex:
//!
//! `g(μ) = max_β Σ_k μ_k r_k(β)  s.t.  Σ β / h ≤ P`
//!
//! `g` is convex with gradient `r(β*(μ))`, and `min_μ g(μ)` equals the max-min
//! value. Every `g(μ)` is an upper bound and every `min_k r_k(β*(μ))` a lower
//! bound, so the returned bracket certifies the oracle's own accuracy.

use std::f64::consts::LN_2;

use uav_core::{GainMatrix, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinBounds {
    /// Best dual value found (bps); never below the optimum.
    pub upper: f64,
    /// Best primal max-min value found (bps); never above the optimum.
    pub lower: f64,
    pub weights: Vec<f64>,
    pub iterations: usize,
}

impl MaxMinBounds {
    pub fn relative_gap(&self) -> f64 {
        (self.upper - self.lower) / self.upper
    }
}

/// Weighted sum-rate water-fill over every user-slot pair under the power
/// budget; returns the per-user average rates.
fn weighted_rates(h: &GainMatrix, s: &Scenario, mu: &[f64]) -> Vec<f64> {
    let k = s.num_users() as f64;
    let n = h.num_slots() as f64;
    let scale = s.bandwidth() / (k * n * LN_2);
    let alloc = |nu: f64| -> Vec<Vec<f64>> {
        h.rows()
            .iter()
            .zip(mu)
            .map(|(row, m)| row.iter().map(|g| (m * scale * g / nu - 1.0).max(0.0)).collect())
            .collect()
    };
    let power = |b: &[Vec<f64>]| -> f64 {
        b.iter()
            .zip(h.rows())
            .map(|(br, hr)| br.iter().zip(hr).map(|(x, g)| x / g).sum::<f64>())
            .sum()
    };
    // Bisection on ln ν; power decreases in ν.
    let (mut lo, mut hi) = (-200.0f64, 200.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if power(&alloc(mid.exp())) > s.p_max() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = alloc(hi.exp());
    beta.iter()
        .map(|row| {
            row.iter()
                .map(|x| s.bandwidth() / k * (1.0 + x).log2())
                .sum::<f64>()
                / n
        })
        .collect()
}

fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Projected gradient descent on the dual with step backtracking, stopped
/// when the certified gap drops below `gap_tol` or after `max_iters`.
pub fn subgradient_max_min(
    h: &GainMatrix,
    s: &Scenario,
    max_iters: usize,
    gap_tol: f64,
) -> MaxMinBounds {
    let k = h.num_users();
    let mut mu = vec![1.0 / k as f64; k];
    let eval = |mu: &[f64]| -> (f64, Vec<f64>) {
        let r = weighted_rates(h, s, mu);
        let g = mu.iter().zip(&r).map(|(m, r)| m * r).sum();
        (g, r)
    };
    let (mut g, mut r) = eval(&mu);
    let mut out = MaxMinBounds {
        upper: g,
        lower: r.iter().copied().fold(f64::INFINITY, f64::min),
        weights: mu.clone(),
        iterations: 0,
    };
    let mut step = 0.1;
    for it in 1..=max_iters {
        out.iterations = it;
        if out.relative_gap() <= gap_tol || step < 1e-18 {
            break;
        }
        let mean = r.iter().sum::<f64>() / k as f64;
        let dir: Vec<f64> = r.iter().map(|x| x - mean).collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let trial = project_simplex(
            &mu.iter().zip(&dir).map(|(m, d)| m - step * d / norm).collect::<Vec<_>>(),
        );
        let (g2, r2) = eval(&trial);
        if g2 < g {
            mu = trial;
            g = g2;
            r = r2;
            step *= 1.5;
            if g < out.upper {
                out.upper = g;
                out.weights = mu.clone();
            }
            let low = r.iter().copied().fold(f64::INFINITY, f64::min);
            out.lower = out.lower.max(low);
        } else {
            step *= 0.5;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use uav_core::ScenarioParams;

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn symmetric_users_split_evenly() {
        let s = uav_core::Scenario::new(ScenarioParams::with_defaults(vec![[0.0, 0.0]; 2], 3)).unwrap();
        let h = GainMatrix::from_rows(vec![vec![1e3, 2e3, 4e3]; 2]).unwrap();
        let b = subgradient_max_min(&h, &s, 1000, 1e-9);
        assert!(b.relative_gap() <= 1e-9);
        assert!((b.weights[0] - 0.5).abs() < 1e-6);
    }
}
