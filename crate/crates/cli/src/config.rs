//! Experiment configuration: parsing, defaults and per-experiment field checks.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use radial_chirp::cutoff::{AnnulusVariant, CenterSplit};
use radial_chirp::exec::Exec;
use radial_chirp::sobolev::Resolution;
use radial_chirp::symbols::{RadialSymbolSpec, Split, SplitPart, SymbolDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    DecayTable,
    Reconstruct,
    OracleCheck,
    ConditionCheck,
    NormProbe,
    LpDemo,
    #[value(name = "sobolev_62")]
    #[serde(rename = "sobolev_62")]
    Sobolev62,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::DecayTable => "decay_table",
            Experiment::Reconstruct => "reconstruct",
            Experiment::OracleCheck => "oracle_check",
            Experiment::ConditionCheck => "condition_check",
            Experiment::NormProbe => "norm_probe",
            Experiment::LpDemo => "lp_demo",
            Experiment::Sobolev62 => "sobolev_62",
        }
    }

    /// Optional fields the experiment reads; anything else is rejected.
    fn fields(self) -> &'static [&'static str] {
        match self {
            Experiment::DecayTable => &["symbol", "K", "k_range", "exec"],
            Experiment::Reconstruct => &["symbol", "K", "eps_tail", "c_sup", "points", "seed", "exec"],
            Experiment::OracleCheck => {
                &["symbol", "K", "eps_tail", "c_sup", "grid", "seed", "fixture", "direct_budget", "tolerance", "exec"]
            }
            Experiment::ConditionCheck => &["symbol", "eps", "j_range", "variant", "resolution", "exec"],
            Experiment::NormProbe => {
                &["symbol", "applier", "K", "eps_tail", "c_sup", "grid", "trials", "seed", "direct_budget", "exec"]
            }
            Experiment::LpDemo => &["grid", "variant", "seed", "exec"],
            Experiment::Sobolev62 => &["symbol", "order", "scales", "intervals"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplierKind {
    Direct,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
    #[serde(rename = "L")]
    pub period: f64,
    /// Random inputs carry modes with `|xi| <= band`.
    pub band: f64,
}

fn one() -> usize {
    1
}

/// Stored inputs (grid stems without extension) and optionally the expected
/// direct output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureConfig {
    pub inputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<PathBuf>,
}

/// Inclusive bounds on one summary metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bound {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Bound {
    pub fn admits(&self, v: f64) -> bool {
        self.min.is_none_or(|lo| v >= lo) && self.max.is_none_or(|hi| v <= hi) && !v.is_nan()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolDocument>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_tail: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_range: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_sup: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<FixtureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applier: Option<ApplierKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct_budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_range: Option<(i32, i32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<AnnulusVariant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<(i32, i32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exec: Option<Exec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<BTreeMap<String, Bound>>,
}

/// A configuration problem; the binary exits with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Parses a config document, reporting the JSON path of the first error.
pub fn parse(text: &str, origin: &Path) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        bad(format!("{}: invalid config at `{path}`: {}", origin.display(), e.into_inner()))
    })
}

fn bochner_riesz_doc(lambda: f64, m: usize) -> SymbolDocument {
    RadialSymbolSpec::bochner_riesz(lambda, m, 1).expect("valid default").to_document()
}

fn set<T>(slot: &mut Option<T>, default: impl FnOnce() -> T) {
    if slot.is_none() {
        *slot = Some(default());
    }
}

impl ExperimentConfig {
    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut mark = |name, on: bool| {
            if on {
                out.push(name)
            }
        };
        mark("symbol", self.symbol.is_some());
        mark("K", self.k_max.is_some());
        mark("eps_tail", self.eps_tail.is_some());
        mark("eps", self.eps.is_some());
        mark("k_range", self.k_range.is_some());
        mark("c_sup", self.c_sup.is_some());
        mark("points", self.points.is_some());
        mark("grid", self.grid.is_some());
        mark("fixture", self.fixture.is_some());
        mark("applier", self.applier.is_some());
        mark("trials", self.trials.is_some());
        mark("direct_budget", self.direct_budget.is_some());
        mark("tolerance", self.tolerance.is_some());
        mark("j_range", self.j_range.is_some());
        mark("variant", self.variant.is_some());
        mark("resolution", self.resolution.is_some());
        mark("order", self.order.is_some());
        mark("scales", self.scales.is_some());
        mark("intervals", self.intervals.is_some());
        mark("seed", self.seed.is_some());
        mark("exec", self.exec.is_some());
        out
    }

    /// Checks the config against `experiment` and fills every default. The
    /// config's own seed wins over `flag_seed`.
    pub fn resolve(mut self, experiment: Experiment, flag_seed: Option<u64>) -> Result<Self, ConfigError> {
        if let Some(e) = self.experiment {
            if e != experiment {
                return Err(bad(format!("config is for `{e}` but `{experiment}` was requested")));
            }
        }
        self.experiment = Some(experiment);
        if self.seed.is_none() {
            self.seed = flag_seed;
        }
        let allowed = experiment.fields();
        if let Some(f) = self.present().into_iter().find(|f| !allowed.contains(f)) {
            return Err(bad(format!("field `{f}` is not used by `{experiment}`")));
        }
        if self.k_max.is_some() && self.eps_tail.is_some() {
            return Err(bad("give either `K` or `eps_tail`, not both"));
        }
        let uses_seed = allowed.contains(&"seed");
        if uses_seed {
            set(&mut self.seed, || 0);
        }
        if allowed.contains(&"exec") {
            set(&mut self.exec, || Exec::Sequential);
        }
        match experiment {
            Experiment::DecayTable => {
                set(&mut self.symbol, || bochner_riesz_doc(1.0, 2));
                set(&mut self.k_max, || 4096);
                set(&mut self.k_range, || (32, 2048));
            }
            Experiment::Reconstruct => {
                set(&mut self.symbol, || bochner_riesz_doc(1.0, 2));
                if self.k_max.is_none() {
                    set(&mut self.eps_tail, || 1e-4);
                }
                set(&mut self.c_sup, || 1.2);
                set(&mut self.points, || 3000);
            }
            Experiment::OracleCheck => {
                set(&mut self.symbol, || bochner_riesz_doc(1.0, 2));
                if self.k_max.is_none() {
                    set(&mut self.eps_tail, || 1e-6);
                }
                set(&mut self.c_sup, || 1.2);
                if self.fixture.is_none() {
                    set(&mut self.grid, || GridConfig { n: 1, size: 32, period: 8.0, band: 1.0 });
                }
                set(&mut self.direct_budget, || 1 << 26);
                set(&mut self.tolerance, || 1e-6);
            }
            Experiment::ConditionCheck => {
                set(&mut self.symbol, || bochner_riesz_doc(1.0, 2));
                set(&mut self.eps, || 0.4);
                set(&mut self.variant, AnnulusVariant::default);
                set(&mut self.resolution, || Resolution::Ladder);
            }
            Experiment::NormProbe => {
                set(&mut self.symbol, || bochner_riesz_doc(1.0, 2));
                set(&mut self.applier, || ApplierKind::Direct);
                if self.applier == Some(ApplierKind::Fast) {
                    if self.k_max.is_none() {
                        set(&mut self.eps_tail, || 1e-4);
                    }
                    set(&mut self.c_sup, || 1.2);
                } else {
                    set(&mut self.direct_budget, || 1 << 26);
                }
                set(&mut self.grid, || GridConfig { n: 1, size: 32, period: 8.0, band: 1.0 });
                set(&mut self.trials, || 100);
            }
            Experiment::LpDemo => {
                set(&mut self.grid, || GridConfig { n: 1, size: 256, period: 1.0, band: 1e9 });
                set(&mut self.variant, AnnulusVariant::default);
            }
            Experiment::Sobolev62 => {
                set(&mut self.symbol, || {
                    let mut doc = bochner_riesz_doc(1.0, 2);
                    doc.split = Some(Split { part: SplitPart::Center, window: CenterSplit::WIDE });
                    doc
                });
                let d = self.symbol.as_ref().map_or(2, |s| s.m * s.n);
                set(&mut self.order, || d);
                set(&mut self.scales, || (-4, 2));
                set(&mut self.intervals, || 4096);
            }
        }
        Ok(self)
    }

    pub fn spec(&self) -> Result<RadialSymbolSpec, ConfigError> {
        let doc = self.symbol.clone().ok_or_else(|| bad("`symbol` is required"))?;
        RadialSymbolSpec::try_from(doc).map_err(|e| bad(format!("invalid config at `symbol`: {e}")))
    }

    /// Validates the symbol up front so a bad one fails before any work.
    pub fn spec_if_present(&self) -> Result<(), ConfigError> {
        if self.symbol.is_some() {
            self.spec()?;
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn exec(&self) -> Exec {
        self.exec.unwrap_or_default()
    }
}
