use serde::{Deserialize, Serialize};

use super::{build_network_plan, build_ptp_scenario, load_at_span, ChannelGrid, FiberSpec, Link, NetworkLoadPlan, Span};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadMode {
    Full,
    Network,
}

fn default_stride() -> usize {
    5
}

fn default_fraction() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadConfig {
    pub mode: LoadMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_fraction")]
    pub drop_fraction: f64,
    #[serde(default = "default_fraction")]
    pub utilization: f64,
    #[serde(default)]
    pub power_dbm: f64,
}

/// Scenario file contents. A generated network plan is embedded under
/// `plan` so the exact loads can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub fiber: FiberSpec,
    pub grid: ChannelGrid,
    /// Span lengths in km.
    pub spans: Vec<f64>,
    pub load: LoadConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<NetworkLoadPlan>,
}

impl ScenarioConfig {
    /// Fully loaded 5 × 10 GBd on a 12.5 GHz grid over 2 × 80 km of SSMF
    /// at 0 dBm per channel; small enough for the split-step oracle.
    pub fn desk_scale() -> Self {
        Self {
            fiber: FiberSpec::ssmf(),
            grid: ChannelGrid::new(5, 0.0125, 10.0).expect("static grid is valid"),
            spans: vec![80.0, 80.0],
            load: LoadConfig {
                mode: LoadMode::Full,
                seed: 0,
                stride: default_stride(),
                drop_fraction: default_fraction(),
                utilization: default_fraction(),
                power_dbm: 0.0,
            },
            plan: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.fiber.validate()?;
        if cfg.spans.is_empty() {
            return Err(Error::EmptyLink);
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The stored plan, or a freshly generated one for network mode.
    pub fn network_plan(&self) -> Result<Option<NetworkLoadPlan>> {
        if self.load.mode != LoadMode::Network {
            return Ok(None);
        }
        if let Some(plan) = &self.plan {
            if plan.grid != self.grid || plan.span_count() != self.spans.len() {
                return Err(Error::Config(
                    "embedded plan does not match grid or span count".into(),
                ));
            }
            return Ok(Some(plan.clone()));
        }
        build_network_plan(
            &self.grid,
            self.load.stride,
            self.load.drop_fraction,
            self.load.utilization,
            self.load.seed,
            self.spans.len(),
        )
        .map(Some)
    }

    /// Same scenario with the network plan materialized.
    pub fn with_plan(&self) -> Result<Self> {
        let mut out = self.clone();
        out.plan = self.network_plan()?;
        Ok(out)
    }

    pub fn build_link(&self) -> Result<Link> {
        match self.network_plan()? {
            None => build_ptp_scenario(&self.grid, self.load.power_dbm, &self.spans, self.fiber),
            Some(plan) => Link::new(
                self.spans
                    .iter()
                    .enumerate()
                    .map(|(k, &length_km)| {
                        Ok(Span {
                            length_km,
                            fiber: self.fiber,
                            load: load_at_span(&plan, k, self.load.power_dbm)?,
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
        }
    }

    /// Channels whose SNR is reported: every slot for a full load, the
    /// end-to-end signals for a network plan.
    pub fn reported_channels(&self) -> Result<Vec<usize>> {
        Ok(match self.network_plan()? {
            None => (0..self.grid.channel_count()).collect(),
            Some(plan) => plan.signal_channel_indices,
        })
    }
}
