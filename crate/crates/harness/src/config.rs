//! TOML run configuration. Unknown keys are rejected; every validation error
//! names the offending key path.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sqg_core::bounds::{admissible_l, compute_determining_q, compute_rinfty, CalibrationConstants};
use sqg_core::error::SqgError;
use sqg_core::experiments::{ForcePerturbation, GronwallConstants, ProjectionKind, TwinConfig};
use sqg_core::littlewood_paley::ShellSystem;
use sqg_core::operators::{ForcingSpec, Modulation};
use sqg_core::spectral::{Domain, RandomSpectrum};
use sqg_core::timestepper::{SimulationConfig, SqgParams};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub params: ParamsConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub constants: CalibrationConstants,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub nu: f64,
    pub alpha: f64,
    pub p: f64,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModulationTag {
    #[default]
    Constant,
    ExpDecay,
    Sinusoid,
}

/// Modes are `[k1, k2, re, im]`; the conjugate mode is implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    #[serde(default)]
    pub modes: Vec<[f64; 4]>,
    #[serde(default)]
    pub modulation: ModulationTag,
    /// Decay rate or angular frequency; ignored for `constant`.
    #[serde(default)]
    pub modulation_param: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default = "default_decay")]
    pub decay: f64,
    /// `[1, min(16, R)]` when unset, `R` the dealiasing radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
}

fn default_decay() -> f64 {
    1.0
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            decay: default_decay(),
            band: None,
            amplitude: Some(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub epsilon: f64,
    #[serde(default)]
    pub gamma: f64,
    /// Profile `g`; defaults to the forcing modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<[f64; 4]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Seed of the second twin member; `seed + 1000` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed2: Option<u64>,
    pub spinup: f64,
    pub horizon: f64,
    pub cadence: usize,
    pub dt_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Slaving shell; the closed-form `Q` at the configured constants when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<i32>,
    pub projection: ProjectionKind,
    /// Sweep shells; `0 ..= q_max` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_list: Option<Vec<i32>>,
    pub initial: InitialConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationConfig>,
    pub gronwall: GronwallConstants,
    /// Gronwall check slack, relative to `max xi`.
    pub gronwall_slack: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            seed2: None,
            spinup: 0.5,
            horizon: 1.0,
            cadence: 10,
            dt_max: 1e-2,
            dt: None,
            q: None,
            projection: ProjectionKind::SmoothLp,
            q_list: None,
            initial: InitialConfig::default(),
            perturbation: None,
            gronwall: GronwallConstants::default(),
            gronwall_slack: 1e-3,
        }
    }
}

/// A validated config with every core object built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub domain: Domain,
    pub params: SqgParams,
    pub twin: TwinConfig,
    pub perturbation: Option<ForcePerturbation>,
    pub q_list: Vec<i32>,
}

impl Resolved {
    pub fn shells(&self) -> ShellSystem {
        ShellSystem::new(self.domain)
    }

    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            dt: self.config.experiment.dt,
            dt_max: self.config.experiment.dt_max,
            cadence: self.config.experiment.cadence,
            cfl_recheck: None,
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| HarnessError::config("<document>", e.message()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let message = e.inner().message().to_string();
        HarnessError::config(if key == "." { "<document>".into() } else { key }, message)
    })
}

fn lift(prefix: &str, err: SqgError) -> HarnessError {
    match err {
        SqgError::InvalidParameter { name, reason } => HarnessError::config(format!("{prefix}.{name}"), reason),
        SqgError::InvalidDomain(reason) => HarnessError::config(prefix, reason),
        other => HarnessError::config(prefix, other.to_string()),
    }
}

fn modes_from(key: &str, raw: &[[f64; 4]]) -> Result<Vec<((i64, i64), Complex64)>> {
    raw.iter()
        .enumerate()
        .map(|(i, [k1, k2, re, im])| {
            let whole = |v: f64| v.fract() == 0.0 && v.abs() < 1e9;
            if !whole(*k1) || !whole(*k2) {
                return Err(HarnessError::config(
                    format!("{key}[{i}]"),
                    format!("wavenumbers must be integers, got ({k1}, {k2})"),
                ));
            }
            if !(re.is_finite() && im.is_finite()) {
                return Err(HarnessError::config(format!("{key}[{i}]"), "coefficient must be finite"));
            }
            Ok(((*k1 as i64, *k2 as i64), Complex64::new(*re, *im)))
        })
        .collect()
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(HarnessError::config(key, format!("must be finite and > 0, got {v}")))
    }
}

impl RunConfig {
    /// Checks every precondition and builds the core objects.
    pub fn resolve(&self) -> Result<Resolved> {
        let domain = Domain::new(self.domain.length, self.domain.n).map_err(|e| {
            let key = if self.domain.length.is_finite() && self.domain.length > 0.0 {
                "domain.N"
            } else {
                "domain.L"
            };
            lift(key, e)
        })?;
        let p = &self.params;
        if !(p.alpha > 1.0 && p.alpha < 2.0) {
            return Err(HarnessError::config(
                "params.alpha",
                format!("dissipation order must lie in (1, 2), got {}", p.alpha),
            ));
        }
        if !admissible_l(p.alpha, p.l).map_err(|e| lift("params", e))? {
            return Err(HarnessError::config(
                "params.l",
                format!(
                    "Besov exponent must satisfy l > alpha/(alpha-1) = {}, got {}",
                    p.alpha / (p.alpha - 1.0),
                    p.l
                ),
            ));
        }
        let forcing = self.forcing_spec(domain)?;
        let params = SqgParams::new(p.nu, p.alpha, p.p, p.l, forcing).map_err(|e| lift("params", e))?;
        self.constants.validate().map_err(|e| lift("constants", e))?;

        let x = &self.experiment;
        let e = "experiment";
        positive("experiment.horizon", x.horizon)?;
        positive("experiment.dt_max", x.dt_max)?;
        if !(x.spinup.is_finite() && x.spinup >= 0.0) {
            return Err(HarnessError::config("experiment.spinup", format!("must be finite and >= 0, got {}", x.spinup)));
        }
        if x.cadence == 0 {
            return Err(HarnessError::config("experiment.cadence", "must be at least one step"));
        }
        if let Some(dt) = x.dt {
            positive("experiment.dt", dt)?;
        }
        if !(x.gronwall_slack.is_finite() && x.gronwall_slack >= 0.0) {
            return Err(HarnessError::config("experiment.gronwall_slack", "must be finite and >= 0"));
        }
        positive("experiment.gronwall.c_decay", x.gronwall.c_decay)?;
        positive("experiment.gronwall.c_source", x.gronwall.c_source)?;

        let init = &x.initial;
        let radius = domain.dealias_radius() as f64;
        let [lo, hi] = init.band.unwrap_or([1.0, radius.min(16.0)]);
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(HarnessError::config("experiment.initial.band", format!("empty band [{lo}, {hi}]")));
        }
        if hi > radius {
            return Err(HarnessError::config(
                "experiment.initial.band",
                format!("upper limit {hi} exceeds the dealiasing radius {radius}"),
            ));
        }
        if lo > radius || domain.magnitudes().iter().all(|m| *m < lo.max(1.0) || *m > hi) {
            return Err(HarnessError::config("experiment.initial.band", "no retained mode lies in the band"));
        }
        if !init.decay.is_finite() {
            return Err(HarnessError::config("experiment.initial.decay", "must be finite"));
        }
        if let Some(a) = init.amplitude {
            positive("experiment.initial.amplitude", a)?;
        }
        let mut spectrum = RandomSpectrum::new(init.decay, (lo, hi));
        spectrum.amplitude = init.amplitude;

        let shells = ShellSystem::new(domain);
        let q = match x.q {
            Some(q) if q < 0 => {
                return Err(HarnessError::config("experiment.q", format!("slaving shell must be >= 0, got {q}")))
            }
            Some(q) => q,
            None => {
                let (rinfty, _) = compute_rinfty(&params.forcing, p.nu, p.alpha, p.p, &self.constants)
                    .map_err(|e| lift("params", e))?;
                compute_determining_q(rinfty, p.nu, p.alpha, p.l, &self.constants, domain.lambda0())
                    .map_err(|e| lift("params", e))?
                    .q
            }
        };
        let q_list = match &x.q_list {
            Some(list) => {
                if list.is_empty() {
                    return Err(HarnessError::config("experiment.q_list", "at least one shell is required"));
                }
                if list.iter().any(|q| *q < 0) || list.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(HarnessError::config(
                        "experiment.q_list",
                        "shells must be >= 0 and strictly ascending",
                    ));
                }
                list.clone()
            }
            None => (0..=shells.q_max()).collect(),
        };

        let twin = TwinConfig {
            params: params.clone(),
            q,
            projection: x.projection,
            seed1: x.seed,
            seed2: x.seed2.unwrap_or(x.seed.wrapping_add(1000)),
            initial: spectrum,
            spinup: x.spinup,
            horizon: x.horizon,
            cadence: x.cadence,
            dt: x.dt,
            dt_max: x.dt_max,
            constants: self.constants,
            gronwall: x.gronwall,
        };
        twin.validate().map_err(|err| lift(e, err))?;

        let perturbation = match &x.perturbation {
            None => None,
            Some(pc) => {
                if !pc.epsilon.is_finite() {
                    return Err(HarnessError::config("experiment.perturbation.epsilon", "must be finite"));
                }
                if !(pc.gamma.is_finite() && pc.gamma >= 0.0) {
                    return Err(HarnessError::config(
                        "experiment.perturbation.gamma",
                        format!("must be finite and >= 0, got {}", pc.gamma),
                    ));
                }
                let profile = match &pc.modes {
                    Some(raw) => {
                        let modes = modes_from("experiment.perturbation.modes", raw)?;
                        ForcingSpec::new(domain, &modes, Modulation::Constant)
                            .map_err(|e| lift("experiment.perturbation.modes", e))?
                    }
                    None => ForcingSpec::new(domain, params.forcing.modes(), Modulation::Constant)
                        .map_err(|e| lift("forcing.modes", e))?,
                };
                Some(ForcePerturbation {
                    epsilon: pc.epsilon,
                    gamma: pc.gamma,
                    profile,
                })
            }
        };

        Ok(Resolved {
            config: self.clone(),
            domain,
            params,
            twin,
            perturbation,
            q_list,
        })
    }

    fn forcing_spec(&self, domain: Domain) -> Result<ForcingSpec> {
        let f = &self.forcing;
        let modes = modes_from("forcing.modes", &f.modes)?;
        let modulation = match f.modulation {
            ModulationTag::Constant => Modulation::Constant,
            ModulationTag::ExpDecay => Modulation::ExpDecay {
                rate: f.modulation_param,
            },
            ModulationTag::Sinusoid => Modulation::Sinusoid {
                frequency: f.modulation_param,
            },
        };
        ForcingSpec::new(domain, &modes, modulation).map_err(|e| match e {
            SqgError::InvalidParameter { reason, .. } => HarnessError::config("forcing.modulation_param", reason),
            other => HarnessError::config("forcing.modes", other.to_string()),
        })
    }

    /// The config with defaults filled in, as TOML.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }
}
