use num_complex::Complex64;

use super::NliModel;

/// Point evaluation of `|Σ_k γ_k S_k ∫ρ_k e^{jφ} dζ|²` at offsets
/// `(ν1, ν2) = (f1 - f, f2 - f)`, with scratch buffers reused across calls.
pub(crate) struct Evaluator<'m> {
    model: &'m NliModel,
    f: f64,
    /// `γ_c / sqrt(G_c(f))` per span class; zero if the class is dark at `f`.
    scale: Vec<f64>,
    a: Vec<Complex64>,
    e: Vec<Complex64>,
    rate: Vec<f64>,
    recips: Vec<Vec<Complex64>>,
    recip_ready: Vec<bool>,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m NliModel, f: f64) -> Self {
        let scale = model
            .classes
            .iter()
            .map(|c| {
                let g = model.class_psd(c, f);
                if g > 0.0 {
                    c.gamma / g.sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        let nc = model.classes.len();
        let ng = model.fiber_groups.len();
        Self {
            model,
            f,
            scale,
            a: vec![Complex64::new(0.0, 0.0); nc],
            e: vec![Complex64::new(0.0, 0.0); nc],
            rate: vec![0.0; nc],
            recips: (0..ng).map(|g| Vec::with_capacity(model.fiber_groups[g].order)).collect(),
            recip_ready: vec![false; ng],
        }
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    /// `coherent = false` drops the cross terms between span boundaries,
    /// i.e. averages the integrand over the fast boundary-to-boundary phases.
    pub fn eval(&mut self, nu1: f64, nu2: f64, coherent: bool) -> f64 {
        let m = self.model;
        let f = self.f;
        let grid = &m.grid;
        let (Some(s1), Some(s2), Some(s3)) = (
            grid.slot_of(f + nu1),
            grid.slot_of(f + nu2),
            grid.slot_of(f + (nu1 + nu2)),
        ) else {
            return 0.0;
        };
        let f3 = f + (nu1 + nu2);
        self.recip_ready.iter_mut().for_each(|r| *r = false);
        let mut any = false;
        for (c, class) in m.classes.iter().enumerate() {
            let group = m.class_group[c];
            let rate = class.disp.mismatch_rate_offsets(nu1, nu2, f);
            self.rate[c] = rate;
            let p = class.psd[s1] * class.psd[s2] * class.psd[s3];
            if p == 0.0 || self.scale[c] == 0.0 {
                self.a[c] = Complex64::new(0.0, 0.0);
                self.e[c] = Complex64::new(0.0, 0.0);
                continue;
            }
            any = true;
            if !self.recip_ready[group] {
                let g = &m.fiber_groups[group];
                let buf = &mut self.recips[group];
                buf.clear();
                let b = -rate / g.alpha;
                for n in 0..g.order {
                    let a = (n + 1) as f64;
                    let den = a * a + b * b;
                    buf.push(Complex64::new(a / den, -b / den));
                }
                self.recip_ready[group] = true;
            }
            let s = p.sqrt() * self.scale[c];
            let (start, end) = class.integrals(f3, &self.recips[group]);
            self.a[c] = start * s;
            self.e[c] = end * s;
        }
        if !any {
            return 0.0;
        }

        let seq = &m.seq;
        let n = seq.len();
        if coherent {
            let mut k = self.a[seq[0]];
            if m.uniform {
                let step = Complex64::from_polar(1.0, self.rate[seq[0]] * m.lengths[0]);
                let mut z = Complex64::new(1.0, 0.0);
                for b in 1..=n {
                    z *= step;
                    let mut bb = -self.e[seq[b - 1]];
                    if b < n {
                        bb += self.a[seq[b]];
                    }
                    k += bb * z;
                }
            } else {
                let mut theta = 0.0;
                for b in 1..=n {
                    theta += self.rate[seq[b - 1]] * m.lengths[b - 1];
                    let mut bb = -self.e[seq[b - 1]];
                    if b < n {
                        bb += self.a[seq[b]];
                    }
                    k += bb * Complex64::from_polar(1.0, theta);
                }
            }
            k.norm_sqr()
        } else {
            let mut acc = self.a[seq[0]].norm_sqr();
            for b in 1..=n {
                let mut bb = -self.e[seq[b - 1]];
                if b < n {
                    bb += self.a[seq[b]];
                }
                acc += bb.norm_sqr();
            }
            acc
        }
    }
}
