//! Run configuration: one JSON file covering every pipeline stage, with
//! per-section defaults taken from the owning modules. A config is
//! validated in full before any command does work, so a bad field fails
//! fast with a config-class exit code instead of surfacing mid-run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mosaic_core::features::DetectorParams;
use mosaic_core::flightsim::{CameraConfig, FlightConfig};
use mosaic_core::matching::MatchParams;
use mosaic_core::stitcher::StitchParams;
use mosaic_core::transform::RansacParams;

/// Why a configuration could not be used.
#[derive(Debug)]
pub enum ConfigError {
    /// The file could not be read at all.
    Io(String),
    /// The file was read but its contents are unusable.
    Invalid(String),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub detector: DetectorSection,
    pub matcher: MatcherSection,
    pub ransac: RansacSection,
    pub stitcher: StitcherSection,
    pub flight: FlightSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub octaves: u32,
    pub layers_per_octave: u32,
    pub initial_filter_size: u32,
    pub response_threshold: f64,
    pub sampling_step: u32,
}

impl Default for DetectorSection {
    fn default() -> Self {
        let d = DetectorParams::default();
        DetectorSection {
            octaves: d.octaves,
            layers_per_octave: d.layers_per_octave,
            initial_filter_size: d.initial_filter_size,
            response_threshold: d.response_threshold,
            sampling_step: d.sampling_step,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatcherSection {
    pub ratio_threshold: f64,
    pub use_laplacian_prefilter: bool,
    pub cross_check: bool,
}

impl Default for MatcherSection {
    fn default() -> Self {
        let m = MatchParams::default();
        MatcherSection {
            ratio_threshold: m.ratio_threshold,
            use_laplacian_prefilter: m.use_laplacian_prefilter,
            cross_check: m.cross_check,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacSection {
    pub iterations: u32,
    pub inlier_tolerance: f64,
    pub min_matches: usize,
    pub min_inlier_fraction: f64,
    pub rng_seed: u64,
}

impl Default for RansacSection {
    fn default() -> Self {
        let r = RansacParams::default();
        RansacSection {
            iterations: r.iterations,
            inlier_tolerance: r.inlier_tolerance,
            min_matches: r.min_matches,
            min_inlier_fraction: r.min_inlier_fraction,
            rng_seed: r.rng_seed,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StitcherSection {
    pub feather: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlightSection {
    pub columns: u32,
    pub rows: u32,
    pub overlap_fraction: f64,
    pub jitter_sigma: f64,
    pub brightness_drift: f64,
    pub rng_seed: u64,
    pub frame_width: u32,
    pub frame_height: u32,
}

impl Default for FlightSection {
    fn default() -> Self {
        let f = FlightConfig::default();
        let c = CameraConfig::default();
        FlightSection {
            columns: f.columns,
            rows: f.rows,
            overlap_fraction: f.overlap_fraction,
            jitter_sigma: f.jitter_sigma,
            brightness_drift: f.brightness_drift,
            rng_seed: f.rng_seed,
            frame_width: c.frame_width,
            frame_height: c.frame_height,
        }
    }
}

impl RunConfig {
    /// Loads a config file, or the built-in defaults when no path is
    /// given. The result is validated either way.
    pub fn load(path: Option<&Path>) -> Result<RunConfig, ConfigError> {
        let config = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| ConfigError::Io(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| {
                    ConfigError::Invalid(format!("config {}: {e}", p.display()))
                })?
            }
        };
        config.validate()?;
        Ok(config)
    }

    /// Routes the single seed flag to every seeded stage.
    pub fn override_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = seed {
            self.ransac.rng_seed = s;
            self.flight.rng_seed = s;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        let d = &self.detector;
        if d.octaves < 1 {
            return bad("detector.octaves must be >= 1".into());
        }
        if d.initial_filter_size < 9 || d.initial_filter_size % 6 != 3 {
            return bad(format!(
                "detector.initial_filter_size {} must be >= 9 and congruent to 3 mod 6",
                d.initial_filter_size
            ));
        }
        if d.layers_per_octave < 3 {
            return bad("detector.layers_per_octave must be >= 3: scale-space maxima need interior layers".into());
        }
        if d.response_threshold < 0.0 || d.response_threshold.is_nan() {
            return bad(format!("detector.response_threshold {} must be >= 0", d.response_threshold));
        }
        if d.sampling_step < 1 {
            return bad("detector.sampling_step must be >= 1".into());
        }

        let m = &self.matcher;
        if !(m.ratio_threshold > 0.0 && m.ratio_threshold <= 1.0) {
            return bad(format!("matcher.ratio_threshold {} must be in (0, 1]", m.ratio_threshold));
        }

        let r = &self.ransac;
        if r.iterations < 1 {
            return bad("ransac.iterations must be >= 1".into());
        }
        if r.inlier_tolerance < 0.0 || r.inlier_tolerance.is_nan() {
            return bad(format!("ransac.inlier_tolerance {} must be >= 0", r.inlier_tolerance));
        }
        if r.min_matches < 1 {
            return bad("ransac.min_matches must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&r.min_inlier_fraction) {
            return bad(format!(
                "ransac.min_inlier_fraction {} must be in [0, 1]",
                r.min_inlier_fraction
            ));
        }

        let f = &self.flight;
        if f.columns < 1 || f.rows < 1 {
            return bad(format!("flight grid {}x{} is empty", f.columns, f.rows));
        }
        if !(f.overlap_fraction > 0.0 && f.overlap_fraction <= 0.9) {
            return bad(format!(
                "flight.overlap_fraction {} must be in (0, 0.9]",
                f.overlap_fraction
            ));
        }
        if f.jitter_sigma < 0.0 || f.jitter_sigma.is_nan() {
            return bad(format!("flight.jitter_sigma {} must be >= 0", f.jitter_sigma));
        }
        if f.frame_width < 1 || f.frame_height < 1 {
            return bad(format!("frame size {}x{} is empty", f.frame_width, f.frame_height));
        }
        Ok(())
    }

    pub fn detector_params(&self) -> DetectorParams {
        DetectorParams {
            octaves: self.detector.octaves,
            layers_per_octave: self.detector.layers_per_octave,
            initial_filter_size: self.detector.initial_filter_size,
            response_threshold: self.detector.response_threshold,
            sampling_step: self.detector.sampling_step,
        }
    }

    pub fn match_params(&self) -> MatchParams {
        MatchParams {
            ratio_threshold: self.matcher.ratio_threshold,
            use_laplacian_prefilter: self.matcher.use_laplacian_prefilter,
            cross_check: self.matcher.cross_check,
        }
    }

    pub fn ransac_params(&self) -> RansacParams {
        RansacParams {
            iterations: self.ransac.iterations,
            inlier_tolerance: self.ransac.inlier_tolerance,
            min_matches: self.ransac.min_matches,
            min_inlier_fraction: self.ransac.min_inlier_fraction,
            rng_seed: self.ransac.rng_seed,
        }
    }

    pub fn stitch_params(&self) -> StitchParams {
        StitchParams {
            detector: self.detector_params(),
            matcher: self.match_params(),
            ransac: self.ransac_params(),
            feather: self.stitcher.feather,
        }
    }

    pub fn flight_config(&self) -> FlightConfig {
        FlightConfig {
            columns: self.flight.columns,
            rows: self.flight.rows,
            overlap_fraction: self.flight.overlap_fraction,
            jitter_sigma: self.flight.jitter_sigma,
            brightness_drift: self.flight.brightness_drift,
            rng_seed: self.flight.rng_seed,
        }
    }

    pub fn camera_config(&self) -> CameraConfig {
        CameraConfig {
            frame_width: self.flight.frame_width,
            frame_height: self.flight.frame_height,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_the_module_defaults() {
        let c = RunConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(c.detector_params(), DetectorParams::default());
        assert_eq!(c.match_params(), MatchParams::default());
        assert_eq!(c.ransac_params(), RansacParams::default());
        assert_eq!(c.stitch_params(), StitchParams::default());
        assert_eq!(c.flight_config(), FlightConfig::default());
        assert_eq!(c.camera_config(), CameraConfig::default());
    }

    #[test]
    fn partial_files_keep_defaults_for_missing_fields() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"matcher": {"ratio_threshold": 0.7}}"#).unwrap();
        assert_eq!(cfg.matcher.ratio_threshold, 0.7);
        assert_eq!(cfg.detector.octaves, DetectorParams::default().octaves);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: Result<RunConfig, _> = serde_json::from_str(r#"{"detector": {"octave": 3}}"#);
        assert!(r.is_err());
    }

    #[test]
    fn invalid_values_are_rejected_with_the_offending_field_named() {
        let mut cfg = RunConfig::default();
        cfg.detector.initial_filter_size = 10;
        let msg = match cfg.validate() {
            Err(ConfigError::Invalid(m)) => m,
            other => panic!("expected invalid-config error, got {other:?}"),
        };
        assert!(msg.contains("initial_filter_size"), "{msg}");

        let mut cfg = RunConfig::default();
        cfg.flight.overlap_fraction = 0.95;
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))));

        let mut cfg = RunConfig::default();
        cfg.matcher.ratio_threshold = 0.0;
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn seed_flag_reaches_both_seeded_stages() {
        let mut cfg = RunConfig::default();
        cfg.override_seed(Some(99));
        assert_eq!(cfg.ransac.rng_seed, 99);
        assert_eq!(cfg.flight.rng_seed, 99);
        cfg.override_seed(None);
        assert_eq!(cfg.ransac.rng_seed, 99);
    }
}
