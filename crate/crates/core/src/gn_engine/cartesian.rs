//! Brute-force `(f1, f2)` integration on a uniform Cartesian panel grid,
//! fully coherent. Slow; kept as a reference for the hyperbolic scheme.

use super::integrand::Evaluator;
use super::NliModel;
use crate::gauss::rule;

pub(crate) fn integrate(model: &NliModel, ev: &mut Evaluator<'_>) -> f64 {
    let f = ev.f();
    let (lo, hi) = model.band;
    let n = model.quad.nodes;
    let w = (hi - lo) / n as f64;
    let mut edges: Vec<f64> = (0..=n).map(|i| lo + i as f64 * w).collect();
    edges.extend(model.jumps.iter().copied().filter(|e| *e > lo && *e < hi));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

    let gl = rule(4);
    let mut total = 0.0;
    for p1 in edges.windows(2) {
        for p2 in edges.windows(2) {
            // skip panels whose f1 + f2 - f lies entirely outside the band
            if p1[1] + p2[1] - f <= lo || p1[0] + p2[0] - f >= hi {
                continue;
            }
            let (h1, m1) = (0.5 * (p1[1] - p1[0]), 0.5 * (p1[1] + p1[0]));
            let (h2, m2) = (0.5 * (p2[1] - p2[0]), 0.5 * (p2[1] + p2[0]));
            let mut acc = 0.0;
            for (x1, w1) in gl.nodes.iter().zip(&gl.weights) {
                let nu1 = m1 + h1 * x1 - f;
                for (x2, w2) in gl.nodes.iter().zip(&gl.weights) {
                    let nu2 = m2 + h2 * x2 - f;
                    acc += w1 * w2 * ev.eval(nu1, nu2, true);
                }
            }
            total += h1 * h2 * acc;
        }
    }
    total
}
