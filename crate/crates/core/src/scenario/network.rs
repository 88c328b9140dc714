use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ChannelGrid, SpectralLoad};
use crate::error::{invalid, Error, Result};
use crate::units::{db_to_lin, dbm_to_w};

/// Identifier of the random source recorded in every plan.
///
/// ChaCha8 keyed through `SeedableRng::seed_from_u64`; slot subsets are drawn
/// by a Fisher-Yates shuffle of the sorted candidate list followed by taking
/// a prefix; continuous draws use `Rng::random_range` over closed intervals.
pub const RNG_ALGORITHM: &str = "chacha8-rand0.9-fisher-yates";

/// Largest random power offset of an interferer relative to the signals.
pub const MAX_OFFSET_DB: f64 = 1.0;
/// Largest emulated transmission distance of an interferer before it enters the link.
pub const MAX_PREDISPERSION_KM: f64 = 1000.0;

/// Traffic state at the input of one span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanTraffic {
    pub occupancy: Vec<bool>,
    /// Offset relative to the base power; zero for signal and empty slots.
    pub power_offset_db: Vec<f64>,
    /// Accumulated dispersion of the interferer, as an SSMF distance.
    pub predispersion_km: Vec<f64>,
    /// Lightpath occupying each slot; equal ids across spans are the same signal.
    pub lightpath: Vec<Option<u32>>,
}

impl SpanTraffic {
    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }
}

/// Seeded add/drop history of the emulated network link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkLoadPlan {
    pub rng: String,
    pub seed: u64,
    pub grid: ChannelGrid,
    pub signal_stride: usize,
    pub drop_fraction: f64,
    pub utilization: f64,
    pub signal_channel_indices: Vec<usize>,
    pub spans: Vec<SpanTraffic>,
}

impl NetworkLoadPlan {
    pub fn span_count(&self) -> usize {
        self.spans.len()
    }

    /// Occupied slots required at every span.
    pub fn target_occupancy(&self) -> usize {
        target_slots(self.utilization, self.grid.channel_count())
    }

    pub fn is_signal(&self, i: usize) -> bool {
        i % self.signal_stride == 0
    }
}

fn target_slots(utilization: f64, count: usize) -> usize {
    (utilization * count as f64).round() as usize
}

struct PlanBuilder {
    rng: ChaCha8Rng,
    next_id: u32,
}

impl PlanBuilder {
    fn add_interferers(&mut self, state: &mut SpanTraffic, needed: usize) {
        let mut empty: Vec<usize> = (0..state.occupancy.len())
            .filter(|&i| !state.occupancy[i])
            .collect();
        empty.shuffle(&mut self.rng);
        for &i in empty.iter().take(needed) {
            state.occupancy[i] = true;
            state.power_offset_db[i] = self.rng.random_range(-MAX_OFFSET_DB..=MAX_OFFSET_DB);
            state.predispersion_km[i] = self.rng.random_range(0.0..=MAX_PREDISPERSION_KM);
            state.lightpath[i] = Some(self.next_id);
            self.next_id += 1;
        }
    }

    fn drop_interferers(&mut self, state: &mut SpanTraffic, is_signal: impl Fn(usize) -> bool, fraction: f64) {
        let mut present: Vec<usize> = (0..state.occupancy.len())
            .filter(|&i| state.occupancy[i] && !is_signal(i))
            .collect();
        let count = (fraction * present.len() as f64).floor() as usize;
        present.shuffle(&mut self.rng);
        for &i in present.iter().take(count) {
            state.occupancy[i] = false;
            state.power_offset_db[i] = 0.0;
            state.predispersion_km[i] = 0.0;
            state.lightpath[i] = None;
        }
    }
}

/// Generate the per-span add/drop state of the emulated network link.
///
/// Every `signal_stride`-th slot carries a signal end to end. The first span
/// is filled with random interferers up to `round(utilization * count)`
/// occupied slots. At each following ROADM, `floor(drop_fraction * n)` of the
/// `n` interferers present are dropped uniformly at random and empty slots are
/// refilled uniformly at random until the target is met again.
pub fn build_network_plan(
    grid: &ChannelGrid,
    signal_stride: usize,
    drop_fraction: f64,
    utilization: f64,
    seed: u64,
    span_count: usize,
) -> Result<NetworkLoadPlan> {
    if signal_stride == 0 {
        return Err(invalid("stride", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&drop_fraction) {
        return Err(invalid("drop_fraction", "must lie in [0, 1]"));
    }
    if !(utilization > 0.0 && utilization <= 1.0) {
        return Err(invalid("utilization", "must lie in (0, 1]"));
    }
    if span_count == 0 {
        return Err(Error::EmptyLink);
    }
    let n = grid.channel_count();
    let signals: Vec<usize> = (0..n).step_by(signal_stride).collect();
    let target = target_slots(utilization, n);
    if target < signals.len() {
        return Err(Error::UtilizationBelowSignals {
            target,
            signals: signals.len(),
        });
    }

    let mut builder = PlanBuilder {
        rng: ChaCha8Rng::seed_from_u64(seed),
        next_id: 0,
    };
    let mut state = SpanTraffic {
        occupancy: vec![false; n],
        power_offset_db: vec![0.0; n],
        predispersion_km: vec![0.0; n],
        lightpath: vec![None; n],
    };
    for &i in &signals {
        state.occupancy[i] = true;
        state.lightpath[i] = Some(builder.next_id);
        builder.next_id += 1;
    }
    builder.add_interferers(&mut state, target - signals.len());

    let is_signal = |i: usize| i % signal_stride == 0;
    let mut spans = Vec::with_capacity(span_count);
    spans.push(state.clone());
    for _ in 1..span_count {
        builder.drop_interferers(&mut state, is_signal, drop_fraction);
        let missing = target - state.occupied_count();
        builder.add_interferers(&mut state, missing);
        spans.push(state.clone());
    }

    Ok(NetworkLoadPlan {
        rng: RNG_ALGORITHM.to_string(),
        seed,
        grid: grid.clone(),
        signal_stride,
        drop_fraction,
        utilization,
        signal_channel_indices: signals,
        spans,
    })
}

/// Materialize the plan's state at span `k` into a spectral load.
pub fn load_at_span(plan: &NetworkLoadPlan, k: usize, base_power_dbm: f64) -> Result<SpectralLoad> {
    let traffic = plan.spans.get(k).ok_or(Error::SpanOutOfRange {
        index: k,
        count: plan.spans.len(),
    })?;
    let base = dbm_to_w(base_power_dbm);
    let powers = traffic
        .occupancy
        .iter()
        .zip(&traffic.power_offset_db)
        .map(|(&occ, &off)| if occ { base * db_to_lin(off) } else { 0.0 })
        .collect();
    SpectralLoad::new(plan.grid.clone(), powers)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl_plan(seed: u64) -> NetworkLoadPlan {
        build_network_plan(&ChannelGrid::c_plus_l(), 5, 0.8, 0.8, seed, 6).unwrap()
    }

    #[test]
    fn fifty_one_signals_on_cl_grid() {
        let plan = cl_plan(1);
        assert_eq!(plan.signal_channel_indices.len(), 51);
        assert_eq!(plan.signal_channel_indices[0], 0);
        assert_eq!(*plan.signal_channel_indices.last().unwrap(), 250);
        assert_eq!(251 - plan.signal_channel_indices.len(), 200);
    }

    #[test]
    fn utilization_target_is_rounded() {
        let plan = cl_plan(3);
        assert_eq!(plan.target_occupancy(), 201);
        for s in &plan.spans {
            assert_eq!(s.occupied_count(), 201);
        }
    }

    #[test]
    fn full_utilization_without_drops_is_static() {
        let plan = build_network_plan(&ChannelGrid::c_plus_l(), 5, 0.0, 1.0, 9, 4).unwrap();
        for s in &plan.spans[1..] {
            assert_eq!(s, &plan.spans[0]);
        }
    }

    #[test]
    fn drop_count_is_floor_of_fraction() {
        let plan = cl_plan(5);
        for w in plan.spans.windows(2) {
            let kept = (0..251)
                .filter(|&i| !plan.is_signal(i))
                .filter(|&i| w[0].lightpath[i].is_some() && w[0].lightpath[i] == w[1].lightpath[i])
                .count();
            // 150 interferers, floor(0.8 * 150) = 120 dropped
            assert_eq!(kept, 30);
        }
    }

    #[test]
    fn utilization_below_signal_fraction_is_rejected() {
        let err = build_network_plan(&ChannelGrid::c_plus_l(), 5, 0.8, 0.1, 0, 2).unwrap_err();
        assert!(matches!(err, Error::UtilizationBelowSignals { .. }));
    }

    #[test]
    fn materialized_offsets() {
        let plan = cl_plan(42);
        let load = load_at_span(&plan, 2, 0.0).unwrap();
        for i in 0..251 {
            let p = load.power_w(i);
            if plan.is_signal(i) {
                assert_eq!(p, 1e-3);
            } else if plan.spans[2].occupancy[i] {
                let off = plan.spans[2].power_offset_db[i];
                assert!((p - 1e-3 * 10f64.powf(off / 10.0)).abs() < 1e-15);
            } else {
                assert_eq!(p, 0.0);
            }
        }
        assert!(load_at_span(&plan, 6, 0.0).is_err());
    }

    #[test]
    fn plus_one_db_interferer_power() {
        assert!((dbm_to_w(0.0) * db_to_lin(1.0) - 1.258_925e-3).abs() < 1e-9);
    }

    #[test]
    fn same_seed_same_loads() {
        let a = load_at_span(&cl_plan(42), 3, 0.0).unwrap();
        let b = load_at_span(&cl_plan(42), 3, 0.0).unwrap();
        assert_eq!(a, b);
        let c = load_at_span(&cl_plan(43), 3, 0.0).unwrap();
        assert_ne!(a, c);
    }
}
