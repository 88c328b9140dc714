//! Transmitter symbol sources.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gauss::rule;
use crate::units::db_to_lin;

/// Amplitude levels of one 64-QAM quadrature, in lattice units.
const PAM8: [f64; 8] = [-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0];
/// Upper end of the shaping parameter search, in 1/lattice-unit².
const NU_MAX: f64 = 0.25;

fn default_shaping_snr() -> f64 {
    15.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulationKind {
    Gaussian,
    #[serde(rename = "uniform_64qam")]
    Uniform64Qam,
    #[serde(rename = "mb_64qam")]
    Mb64Qam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationSpec {
    pub kind: ModulationKind,
    /// SNR the Maxwell-Boltzmann distribution is optimized for.
    #[serde(default = "default_shaping_snr")]
    pub shaping_snr_db: f64,
}

impl ModulationSpec {
    pub fn gaussian() -> Self {
        Self {
            kind: ModulationKind::Gaussian,
            shaping_snr_db: default_shaping_snr(),
        }
    }

    pub fn uniform_64qam() -> Self {
        Self {
            kind: ModulationKind::Uniform64Qam,
            shaping_snr_db: default_shaping_snr(),
        }
    }

    pub fn mb_64qam(shaping_snr_db: f64) -> Self {
        Self {
            kind: ModulationKind::Mb64Qam,
            shaping_snr_db,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            ModulationKind::Gaussian => "gaussian",
            ModulationKind::Uniform64Qam => "uniform_64qam",
            ModulationKind::Mb64Qam => "mb_64qam",
        }
    }

    /// Discrete constellation, or `None` for Gaussian symbols.
    pub fn constellation(&self) -> Result<Option<Constellation>> {
        match self.kind {
            ModulationKind::Gaussian => Ok(None),
            ModulationKind::Uniform64Qam => Ok(Some(Constellation::maxwell_boltzmann(0.0))),
            ModulationKind::Mb64Qam => {
                if !self.shaping_snr_db.is_finite() {
                    return Err(invalid("shaping_snr_db", "must be finite"));
                }
                Ok(Some(mb_shaping(self.shaping_snr_db).constellation))
            }
        }
    }
}

/// Square 64-QAM with a product Maxwell-Boltzmann distribution,
/// `p(x) ∝ exp(-ν |x|²)` on the odd-integer lattice, scaled to unit power.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub nu: f64,
    /// Quadrature amplitudes after scaling.
    pub levels: Vec<f64>,
    /// Probability of each quadrature level.
    pub probabilities: Vec<f64>,
}

impl Constellation {
    pub fn maxwell_boltzmann(nu: f64) -> Self {
        let w: Vec<f64> = PAM8.iter().map(|a| (-nu * a * a).exp()).collect();
        let z: f64 = w.iter().sum();
        let probabilities: Vec<f64> = w.iter().map(|x| x / z).collect();
        let e2: f64 = PAM8.iter().zip(&probabilities).map(|(a, p)| p * a * a).sum();
        let s = (2.0 * e2).sqrt().recip();
        Self {
            nu,
            levels: PAM8.iter().map(|a| a * s).collect(),
            probabilities,
        }
    }

    /// Source entropy in bit per complex symbol.
    pub fn entropy_bits(&self) -> f64 {
        -2.0 * self
            .probabilities
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.log2())
            .sum::<f64>()
    }

    /// Average energy per complex symbol.
    pub fn energy(&self) -> f64 {
        2.0 * self.levels.iter().zip(&self.probabilities).map(|(a, p)| p * a * a).sum::<f64>()
    }

    /// AWGN mutual information in bit per complex symbol.
    pub fn awgn_mi_bits(&self, snr_db: f64) -> f64 {
        // per-quadrature noise variance for unit symbol energy
        let sigma2 = 0.5 / db_to_lin(snr_db);
        2.0 * pam_mi(&self.levels, &self.probabilities, sigma2)
    }
}

/// `I(X; X + N)` for a PAM source and `N ~ N(0, σ²)`.
fn pam_mi(levels: &[f64], probs: &[f64], sigma2: f64) -> f64 {
    // Noise expectation on t = n / sqrt(2σ²) ∈ [-7, 7], weight exp(-t²)/sqrt(π).
    let gl = rule(96);
    let half = 7.0;
    let s = (2.0 * sigma2).sqrt();
    let mut mi = 0.0;
    for (xi, pi) in levels.iter().zip(probs) {
        let mut acc = 0.0;
        for (node, wt) in gl.nodes.iter().zip(&gl.weights) {
            let t = half * node;
            let n = s * t;
            let sum: f64 = levels
                .iter()
                .zip(probs)
                .map(|(xj, pj)| {
                    let d = xi - xj + n;
                    pj * (-(d * d - n * n) / (2.0 * sigma2)).exp()
                })
                .sum();
            acc += wt * half * (-t * t).exp() * sum.log2();
        }
        mi -= pi * acc / std::f64::consts::PI.sqrt();
    }
    mi
}

#[derive(Debug, Clone, PartialEq)]
pub struct MbShaping {
    pub constellation: Constellation,
    pub entropy_bits: f64,
    pub mutual_information_bits: f64,
}

/// Shaping parameter maximizing the AWGN mutual information of 64-QAM at
/// `snr_db`, found by bisection on the sign of `dI/dν`.
pub fn mb_shaping(snr_db: f64) -> MbShaping {
    let mi = |nu: f64| Constellation::maxwell_boltzmann(nu).awgn_mi_bits(snr_db);
    let slope = |nu: f64| {
        let d = 1e-5;
        mi(nu + d) - mi((nu - d).max(0.0))
    };
    let (mut lo, mut hi) = (0.0, NU_MAX);
    let nu = if slope(lo) <= 0.0 {
        0.0
    } else {
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let constellation = Constellation::maxwell_boltzmann(nu);
    MbShaping {
        entropy_bits: constellation.entropy_bits(),
        mutual_information_bits: constellation.awgn_mi_bits(snr_db),
        constellation,
    }
}

/// `count` unit-power symbols. The block is rescaled so that its empirical
/// mean power is exactly one.
pub(crate) fn draw_symbols<R: Rng>(
    constellation: Option<&Constellation>,
    count: usize,
    rng: &mut R,
) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = match constellation {
        None => (0..count)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect(),
        Some(c) => {
            let pick = WeightedIndex::new(&c.probabilities).expect("probabilities are positive");
            (0..count)
                .map(|_| Complex64::new(c.levels[pick.sample(rng)], c.levels[pick.sample(rng)]))
                .collect()
        }
    };
    let p = out.iter().map(|s| s.norm_sqr()).sum::<f64>() / count as f64;
    if p > 0.0 {
        let s = p.sqrt().recip();
        out.iter_mut().for_each(|x| *x *= s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_constellation_is_unit_power_six_bits() {
        let c = Constellation::maxwell_boltzmann(0.0);
        assert!((c.energy() - 1.0).abs() < 1e-12);
        assert!((c.entropy_bits() - 6.0).abs() < 1e-12);
        // 64-QAM minimum distance at unit energy: 2 / sqrt(42)
        assert!((c.levels[1] - c.levels[0] - 2.0 / 42f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_limits() {
        let c = Constellation::maxwell_boltzmann(0.0);
        assert!((c.awgn_mi_bits(60.0) - 6.0).abs() < 1e-6);
        // low SNR: close to Gaussian capacity log2(1 + snr)
        let snr = db_to_lin(-10.0);
        assert!((c.awgn_mi_bits(-10.0) - (1.0 + snr).log2()).abs() < 2e-3);
        let cap15 = (1.0 + db_to_lin(15.0)).log2();
        assert!(c.awgn_mi_bits(15.0) < cap15);
    }

    #[test]
    fn shaping_gains_over_uniform_at_15_db() {
        let mb = mb_shaping(15.0);
        let uni = Constellation::maxwell_boltzmann(0.0).awgn_mi_bits(15.0);
        assert!(mb.constellation.nu > 0.0);
        assert!(mb.mutual_information_bits > uni + 0.05);
        assert!(mb.entropy_bits > 4.0 && mb.entropy_bits < 6.0, "{}", mb.entropy_bits);
        let sum: f64 = mb.constellation.probabilities.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((mb.constellation.energy() - 1.0).abs() < 1e-12);
        // optimum: neighbours of ν are not better
        for d in [-2e-3, 2e-3] {
            let other = Constellation::maxwell_boltzmann(mb.constellation.nu + d).awgn_mi_bits(15.0);
            assert!(other <= mb.mutual_information_bits + 1e-9);
        }
    }

    #[test]
    fn drawn_blocks_have_unit_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = Constellation::maxwell_boltzmann(0.05);
        for src in [None, Some(&c)] {
            let s = draw_symbols(src, 4096, &mut rng);
            let p = s.iter().map(|x| x.norm_sqr()).sum::<f64>() / 4096.0;
            assert!((p - 1.0).abs() < 1e-12);
        }
    }
}
