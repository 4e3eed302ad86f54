//! Runtime configuration: defaults for every tunable stage, overridable
//! from a JSON file via `--config`. Unknown keys are rejected.

use evpose_core::recon::{MatchCost, ReconConfig};
use evpose_core::registration::RansacConfig;
use evpose_core::tracker::TrackerConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub recon: ReconSection,
    pub tracker: TrackerSection,
    pub ransac: RansacSection,
    pub simulate: SimulateSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            recon: ReconSection::default(),
            tracker: TrackerSection::default(),
            ransac: RansacSection::default(),
            simulate: SimulateSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconSection {
    pub patch: usize,
    pub coarse_radius: usize,
    pub fine_radius: usize,
    pub levels: usize,
    /// "sad" or "ncc".
    pub cost: String,
    pub min_patch_events: usize,
    pub min_total_events: usize,
    pub distinct_margin: f32,
}

impl Default for ReconSection {
    fn default() -> Self {
        let d = ReconConfig::default();
        Self {
            patch: d.patch,
            coarse_radius: d.coarse_radius,
            fine_radius: d.fine_radius,
            levels: d.levels,
            cost: "sad".into(),
            min_patch_events: d.min_patch_events,
            min_total_events: d.min_total_events,
            distinct_margin: d.distinct_margin,
        }
    }
}

impl ReconSection {
    pub fn to_core(&self) -> anyhow::Result<ReconConfig> {
        let cost = match self.cost.as_str() {
            "sad" => MatchCost::Sad,
            "ncc" => MatchCost::Ncc,
            other => anyhow::bail!("unknown matching cost {other:?}; expected sad or ncc"),
        };
        Ok(ReconConfig {
            patch: self.patch,
            coarse_radius: self.coarse_radius,
            fine_radius: self.fine_radius,
            levels: self.levels,
            cost,
            min_patch_events: self.min_patch_events,
            min_total_events: self.min_total_events,
            distinct_margin: self.distinct_margin,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerSection {
    pub surface_samples: usize,
    pub roi_padding: f64,
    pub depth_agreement: f64,
    pub visibility_band: f64,
    pub resample_fraction: f64,
    pub min_live_points: usize,
}

impl Default for TrackerSection {
    fn default() -> Self {
        let d = TrackerConfig::default();
        Self {
            surface_samples: d.surface_samples,
            roi_padding: d.roi_padding,
            depth_agreement: d.depth_agreement,
            visibility_band: d.visibility_band,
            resample_fraction: d.resample_fraction,
            min_live_points: d.min_live_points,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacSection {
    pub threshold_px: f64,
    pub max_iterations: usize,
    pub min_sample_size: usize,
}

impl Default for RansacSection {
    fn default() -> Self {
        let d = RansacConfig::default();
        Self {
            threshold_px: d.threshold,
            max_iterations: d.max_iterations,
            min_sample_size: d.min_sample_size,
        }
    }
}

impl RansacSection {
    pub fn to_core(&self, seed: u64) -> RansacConfig {
        RansacConfig {
            threshold: self.threshold_px,
            max_iterations: self.max_iterations,
            min_sample_size: self.min_sample_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub contrast_low: f64,
    pub contrast_high: f64,
    pub log_intensity_eps: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            contrast_low: evpose_core::simulator::DEFAULT_CONTRAST_RANGE.0,
            contrast_high: evpose_core::simulator::DEFAULT_CONTRAST_RANGE.1,
            log_intensity_eps: evpose_core::simulator::LOG_INTENSITY_EPS,
        }
    }
}

impl Config {
    pub fn load(path: Option<&std::path::Path>) -> anyhow::Result<Config> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| anyhow::anyhow!("reading config {}: {e}", p.display()))?;
                Ok(serde_json::from_str(&text)
                    .map_err(|e| anyhow::anyhow!("parsing config {}: {e}", p.display()))?)
            }
        }
    }

    pub fn tracker_config(&self, seed: u64) -> anyhow::Result<TrackerConfig> {
        Ok(TrackerConfig {
            surface_samples: self.tracker.surface_samples,
            sample_seed: seed,
            roi_padding: self.tracker.roi_padding,
            recon: self.recon.to_core()?,
            ransac: self.ransac.to_core(seed),
            depth_agreement: self.tracker.depth_agreement,
            visibility_band: self.tracker.visibility_band,
            resample_fraction: self.tracker.resample_fraction,
            min_live_points: self.tracker.min_live_points,
        })
    }
}
