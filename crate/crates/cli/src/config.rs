//! Layered settings: command-line flags override a TOML config file, which
//! overrides built-in defaults. The merged result is written next to each
//! run's outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Optional `--config` file, one table per subcommand.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub check: CheckSettings,
    #[serde(default)]
    pub filter: FilterSettings,
    #[serde(default)]
    pub fuse: FuseSettings,
    #[serde(default)]
    pub eval: EvalSettings,
    #[serde(default)]
    pub synth: SynthSettings,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = gcmvs::io::read_text(path)?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

/// Field-wise `self.or(lower)`.
pub trait Layer: Sized {
    fn over(self, lower: Self) -> Self;
}

macro_rules! settings {
    ($name:ident { $($field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $(#[serde(skip_serializing_if = "Option::is_none")] pub $field: Option<$ty>,)*
        }

        impl Layer for $name {
            fn over(self, lower: Self) -> Self {
                Self { $($field: self.$field.or(lower.$field),)* }
            }
        }
    };
}

settings!(CheckSettings {
    m: usize,
    d_pixel: f64,
    d_depth: f64,
    range: String,
    stage: String,
    sample: String,
});

settings!(FilterSettings {
    m: usize,
    d_pixel: f64,
    d_depth: f64,
    min_inconsistent_frac: f64,
    sample: String,
});

settings!(FuseSettings {
    mode: String,
    conf: f64,
    consistency_min: usize,
    reproj_px: f64,
    rel_depth: f64,
    dyn_px_slope: f64,
    dyn_rel_slope: f64,
    num_src: usize,
    aggregate: String,
    sample: String,
});

settings!(EvalSettings {
    max_dist: f64,
    e1_thresh: f64,
    e3_thresh: f64,
});

settings!(SynthSettings {
    surface: String,
    views: usize,
    resolution: String,
    seed: u64,
});

impl CheckSettings {
    pub fn defaults() -> Self {
        Self {
            m: Some(8),
            d_pixel: None,
            d_depth: None,
            range: Some("1-2".into()),
            stage: Some("refine".into()),
            sample: Some("bilinear".into()),
        }
    }
}

impl FilterSettings {
    pub fn defaults() -> Self {
        Self {
            m: Some(8),
            d_pixel: Some(2.0),
            d_depth: Some(0.25),
            min_inconsistent_frac: Some(0.5),
            sample: Some("bilinear".into()),
        }
    }
}

impl FuseSettings {
    pub fn defaults() -> Self {
        let p = gcmvs::FusionParams::<f64>::default();
        Self {
            mode: Some("dynamic".into()),
            conf: Some(p.conf_thresh),
            consistency_min: Some(p.consistency_min),
            reproj_px: Some(p.reproj_px_thresh),
            rel_depth: Some(p.rel_depth_thresh),
            dyn_px_slope: Some(p.dynamic_px_slope),
            dyn_rel_slope: Some(p.dynamic_rel_slope),
            num_src: None,
            aggregate: Some("mean".into()),
            sample: Some("bilinear".into()),
        }
    }
}

impl EvalSettings {
    pub fn defaults() -> Self {
        Self {
            max_dist: None,
            e1_thresh: Some(1.0),
            e3_thresh: Some(3.0),
        }
    }
}

impl SynthSettings {
    pub fn defaults() -> Self {
        Self {
            surface: Some("plane".into()),
            views: Some(5),
            resolution: Some("64x48".into()),
            seed: Some(0),
        }
    }
}

/// Unwraps a merged setting that has a built-in default.
pub fn required<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Input(format!("missing required setting `{name}`")))
}

/// Writes the effective settings of a run as `<dir>/<command>.effective.toml`.
pub fn echo<S: Serialize>(dir: &Path, command: &str, settings: &S) -> Result<(), CliError> {
    let text = toml::to_string(settings).map_err(|e| CliError::Input(format!("serialising settings: {e}")))?;
    gcmvs::io::write_atomic(dir.join(format!("{command}.effective.toml")), text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let flags = CheckSettings {
            m: Some(4),
            ..Default::default()
        };
        let file = CheckSettings {
            m: Some(6),
            range: Some("1-3".into()),
            ..Default::default()
        };
        let merged = flags.over(file).over(CheckSettings::defaults());
        assert_eq!(merged.m, Some(4));
        assert_eq!(merged.range.as_deref(), Some("1-3"));
        assert_eq!(merged.stage.as_deref(), Some("refine"));
    }

    #[test]
    fn config_file_parses_tables() {
        let cfg: ConfigFile = toml::from_str("[check]\nm = 4\nd_pixel = 0.5\n[fuse]\nmode = \"static\"\n").unwrap();
        assert_eq!(cfg.check.m, Some(4));
        assert_eq!(cfg.fuse.mode.as_deref(), Some("static"));
        assert!(toml::from_str::<ConfigFile>("[check]\nbogus = 1\n").is_err());
    }
}
