//! Run configuration: one JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use smgauge::diagnostics::VirialWeights;
use smgauge::evolution::EvolutionConfig;
use smgauge::grid::RadialGrid;

use crate::CliError;

/// Smallest grid accepted by the CLI; the stencils need a few cells and
/// the derived fields are meaningless below this.
pub const MIN_NODES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Equivariance index. Negative values are reduced by θ → −θ.
    pub m: i64,
    /// Target selector; only −1 (H²) is accepted.
    pub mu: i64,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub initial_data: InitialData,
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_max: f64,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_cadence: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    PsiProfile(PsiProfile),
    MapProfile(MapProfile),
}

/// ψ⁻ = A (r/r₀)^{min(m−1,2)} e^{−(r−r₀)²/2σ²} e^{icr}; with r₀ = 0 the
/// power uses r/σ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiProfile {
    pub amplitude: f64,
    #[serde(default)]
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub chirp: f64,
    /// Optional declared angular order; must equal m − 1.
    #[serde(default)]
    pub order: Option<u32>,
}

/// ū = (sinh α, 0, cosh α) with α = a (r/σ)^m e^{−r²/2σ²}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapProfile {
    pub amplitude: f64,
    pub width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    /// Steps between field snapshots; 0 disables them. Must be a multiple
    /// of `time.record_cadence`.
    #[serde(default)]
    pub snapshot_cadence: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    #[default]
    Cutoff,
    LocalizedR2,
}

/// Virial weight for the vir1/vir3 columns. The radius defaults to r_max/4.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default)]
    pub virial_weight: WeightKind,
    #[serde(default)]
    pub virial_radius: Option<f64>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// |m| after the θ → −θ reduction.
    pub fn index(&self) -> u32 {
        self.m.unsigned_abs() as u32
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match self.mu {
            -1 => {}
            1 => return Err(invalid("mu = +1 (sphere target) is not supported; only the hyperbolic plane, mu = -1, is")),
            other => return Err(invalid(format!("mu must be -1, got {other}"))),
        }
        if self.m == 0 || self.m.unsigned_abs() > 64 {
            return Err(invalid(format!("m must satisfy 1 <= |m| <= 64, got {}", self.m)));
        }
        let g = self.grid;
        if !(g.r_max.is_finite() && g.r_max > 0.0) {
            return Err(invalid("grid.r_max must be positive and finite"));
        }
        if g.n < MIN_NODES {
            return Err(invalid(format!("grid.n must be at least {MIN_NODES}")));
        }
        let t = self.time;
        if !(t.dt.is_finite() && t.dt > 0.0) {
            return Err(invalid("time.dt must be positive and finite"));
        }
        if !(t.t_end.is_finite() && t.t_end >= 0.0) {
            return Err(invalid("time.t_end must be nonnegative and finite"));
        }
        if t.record_cadence == 0 {
            return Err(invalid("time.record_cadence must be at least 1"));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        match self.initial_data {
            InitialData::PsiProfile(p) => {
                if !p.amplitude.is_finite() || !p.chirp.is_finite() || !(p.center.is_finite() && p.center >= 0.0) {
                    return Err(invalid("psi_profile: amplitude, chirp and center must be finite, center >= 0"));
                }
                if !positive(p.width) {
                    return Err(invalid("psi_profile.width must be positive"));
                }
                if let Some(k) = p.order {
                    if k != self.index() - 1 {
                        return Err(invalid(format!("psi_profile.order must equal m - 1 = {}, got {k}", self.index() - 1)));
                    }
                }
            }
            InitialData::MapProfile(p) => {
                // cosh² − sinh² = 1 to 1e−12 needs cosh α ≲ 1e2.
                if !(p.amplitude.is_finite() && p.amplitude.abs() <= 5.0) {
                    return Err(invalid("map_profile.amplitude must be finite with |a| <= 5"));
                }
                if !positive(p.width) {
                    return Err(invalid("map_profile.width must be positive"));
                }
            }
        }
        let o = &self.outputs;
        if o.formats.is_empty() {
            return Err(invalid("outputs.formats must name at least one of csv, jsonl"));
        }
        if o.snapshot_cadence % t.record_cadence != 0 {
            return Err(invalid("outputs.snapshot_cadence must be a multiple of time.record_cadence"));
        }
        if let Some(r) = self.diagnostics.virial_radius {
            if !positive(r) {
                return Err(invalid("diagnostics.virial_radius must be positive"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, as lowercase hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn radial_grid(&self) -> Result<RadialGrid, CliError> {
        RadialGrid::new(self.grid.r_max, self.grid.n).map_err(|e| invalid(e.to_string()))
    }

    pub fn evolution(&self) -> EvolutionConfig {
        let mut c = EvolutionConfig::new(self.time.dt, self.time.t_end, self.time.record_cadence);
        c.store_states = false;
        c
    }

    pub fn virial_weights(&self) -> VirialWeights {
        let radius = self.diagnostics.virial_radius.unwrap_or(self.grid.r_max / 4.0);
        match self.diagnostics.virial_weight {
            WeightKind::Cutoff => VirialWeights::Cutoff { radius },
            WeightKind::LocalizedR2 => VirialWeights::LocalizedR2 { radius },
        }
    }
}

/// Small valid config shared by unit tests.
#[cfg(test)]
pub(crate) const TEST_CONFIG: &str = r#"{
    "m": 1, "mu": -1,
    "grid": {"r_max": 12.0, "n": 256},
    "time": {"dt": 0.01, "t_end": 0.1, "record_cadence": 2},
    "initial_data": {"kind": "psi_profile", "params": {"amplitude": 0.5, "width": 1.0}},
    "outputs": {"dir": "out", "formats": ["csv"], "snapshot_cadence": 4},
    "seed": 7
}"#;

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = TEST_CONFIG;


    fn edit(f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(BASE).unwrap();
        f(&mut v);
        v.to_string()
    }

    #[test]
    fn base_config_parses() {
        let c = RunConfig::from_json(BASE).unwrap();
        assert_eq!(c.index(), 1);
        assert_eq!(c.virial_weights(), VirialWeights::Cutoff { radius: 3.0 });
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn rejections() {
        let cases = [
            edit(|v| v["mu"] = 1.into()),
            edit(|v| v["mu"] = 0.into()),
            edit(|v| v["m"] = 0.into()),
            edit(|v| v["grid"]["n"] = 4.into()),
            edit(|v| v["grid"]["extra"] = 1.into()),
            edit(|v| v["colour"] = 1.into()),
            edit(|v| v["time"]["dt"] = (-1.0).into()),
            edit(|v| v["time"]["record_cadence"] = 0.into()),
            edit(|v| v["outputs"]["formats"] = serde_json::json!([])),
            edit(|v| v["outputs"]["snapshot_cadence"] = 3.into()),
            edit(|v| v["initial_data"]["params"]["order"] = 1.into()),
            edit(|v| v["initial_data"]["params"]["typo"] = 1.into()),
            edit(|v| v["initial_data"]["kind"] = "noise".into()),
        ];
        for text in &cases {
            assert!(matches!(RunConfig::from_json(text), Err(CliError::Config(_))), "{text}");
        }
        let msg = RunConfig::from_json(&cases[0]).unwrap_err().to_string();
        assert!(msg.contains("sphere"), "{msg}");
    }

    #[test]
    fn negative_m_is_reflected() {
        let c = RunConfig::from_json(&edit(|v| v["m"] = (-2).into())).unwrap();
        assert_eq!(c.index(), 2);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::from_json(BASE).unwrap();
        let b = RunConfig::from_json(&edit(|v| v["seed"] = 8.into())).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), RunConfig::from_json(BASE).unwrap().hash());
    }
}
