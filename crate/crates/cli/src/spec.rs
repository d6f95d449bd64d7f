//! Experiment descriptions: presets, sweeps, series and their JSON form.

use anyhow::{bail, ensure, Context, Result};
use grantfree_aoi::asymptotics::optimal_ptx;
use grantfree_aoi::{Config, GenerationModel, Power, Scheme, TxPolicy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    SweepUsers,
    SweepSlots,
    SpecialCase,
    SweepPtx,
    RatioVsUsers,
    GenerationModels,
    ValidateOracle,
    Custom,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::SweepUsers => "sweep-users",
            Preset::SweepSlots => "sweep-slots",
            Preset::SpecialCase => "special-case",
            Preset::SweepPtx => "sweep-ptx",
            Preset::RatioVsUsers => "ratio-vs-users",
            Preset::GenerationModels => "generation-models",
            Preset::ValidateOracle => "validate-oracle",
            Preset::Custom => "custom",
        }
    }

    /// The only sweep variable this preset accepts; `None` for custom and validation runs.
    fn variable(self) -> Option<SweepVariable> {
        match self {
            Preset::SweepUsers | Preset::SpecialCase | Preset::RatioVsUsers | Preset::GenerationModels => {
                Some(SweepVariable::Users)
            }
            Preset::SweepSlots => Some(SweepVariable::Slots),
            Preset::SweepPtx => Some(SweepVariable::Ptx),
            Preset::ValidateOracle | Preset::Custom => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EvaluatorChoice {
    #[default]
    Analytical,
    Simulated,
    Both,
}

impl EvaluatorChoice {
    pub fn analytical(self) -> bool {
        matches!(self, EvaluatorChoice::Analytical | EvaluatorChoice::Both)
    }

    pub fn simulated(self) -> bool {
        matches!(self, EvaluatorChoice::Simulated | EvaluatorChoice::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    Users,
    Slots,
    Levels,
    Ptx,
    /// Linear transmit SNR `P`.
    Power,
}

/// Sweep values, given either explicitly or as `start..=stop` in `step`s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SweepRepr")]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Deserialize)]
struct SweepRepr {
    variable: SweepVariable,
    values: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

impl TryFrom<SweepRepr> for Sweep {
    type Error = String;

    fn try_from(r: SweepRepr) -> Result<Self, String> {
        let values = match (r.values, r.start, r.stop, r.step) {
            (Some(v), None, None, None) => v,
            (None, Some(start), Some(stop), Some(step)) => {
                Sweep::range(r.variable, start, stop, step).map_err(|e| e.to_string())?.values
            }
            _ => return Err("a sweep needs either `values` or all of `start`, `stop`, `step`".into()),
        };
        Ok(Sweep { variable: r.variable, values })
    }
}

impl Sweep {
    pub fn range(variable: SweepVariable, start: f64, stop: f64, step: f64) -> Result<Self> {
        ensure!(step > 0.0 && step.is_finite(), "sweep step must be positive");
        ensure!(stop >= start, "sweep stop {stop} is below start {start}");
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        let values = (0..=n).map(|i| start + i as f64 * step).collect();
        Ok(Sweep { variable, values })
    }

    fn check(&self) -> Result<()> {
        ensure!(!self.values.is_empty(), "sweep has no values");
        for &v in &self.values {
            let integral = v.fract() == 0.0 && v >= 1.0;
            let ok = match self.variable {
                SweepVariable::Users | SweepVariable::Slots | SweepVariable::Levels => integral,
                SweepVariable::Ptx => v > 0.0 && v <= 1.0,
                SweepVariable::Power => v > 0.0 && v.is_finite(),
            };
            ensure!(ok, "sweep value {v} is out of range for {:?}", self.variable);
        }
        Ok(())
    }
}

/// Transmission probability rule of a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesPolicy {
    /// `1/(M-j)` for OMA, `min{1, K/M}` for NOMA.
    Adaptive,
    Fixed(f64),
    /// `1/M` for OMA, `η/M` for NOMA with two levels, `min{1, K/M}` otherwise.
    Optimal,
}

/// One curve of an experiment. Unset fields fall back to the base configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    pub policy: SeriesPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<Power>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<usize>,
}

impl Series {
    pub fn new(label: &str, scheme: Scheme, policy: SeriesPolicy) -> Self {
        Series { label: label.into(), scheme, levels: None, policy, generation: None, power: None, slots: None }
    }

    pub fn levels(mut self, k: usize) -> Self {
        self.levels = Some(k);
        self
    }

    pub fn generation(mut self, g: GenerationModel) -> Self {
        self.generation = Some(g);
        self
    }

    pub fn power(mut self, p: Power) -> Self {
        self.power = Some(p);
        self
    }

    pub fn slots(mut self, n: usize) -> Self {
        self.slots = Some(n);
        self
    }

    /// Configuration of this series at one sweep point.
    ///
    /// When the sweep runs over `ptx`, every series except `optimal` ones
    /// transmits with the swept probability.
    pub fn config_at(&self, base: &Config, variable: SweepVariable, value: f64) -> Result<Config> {
        let mut cfg = base.clone();
        cfg.scheme = self.scheme;
        if let Some(k) = self.levels {
            cfg.num_levels = k;
        }
        if let Some(g) = self.generation {
            cfg.generation = g;
        }
        if let Some(p) = self.power {
            cfg.tx_power = p;
        }
        if let Some(n) = self.slots {
            cfg.slots_per_frame = n;
        }
        let mut policy = self.policy;
        match variable {
            SweepVariable::Users => cfg.num_users = value as usize,
            SweepVariable::Slots => cfg.slots_per_frame = value as usize,
            SweepVariable::Levels => cfg.num_levels = value as usize,
            SweepVariable::Power => cfg.tx_power = Power::Finite(value),
            SweepVariable::Ptx => {
                if policy != SeriesPolicy::Optimal {
                    policy = SeriesPolicy::Fixed(value);
                }
            }
        }
        if cfg.scheme == Scheme::Oma {
            cfg.num_levels = 1;
        }
        cfg.tx_policy = match policy {
            SeriesPolicy::Adaptive => TxPolicy::adaptive_for(cfg.scheme),
            SeriesPolicy::Fixed(p) => TxPolicy::Fixed(p),
            SeriesPolicy::Optimal => TxPolicy::Fixed(optimal_probability(&cfg)),
        };
        cfg.validate().with_context(|| format!("series {} at {value}", self.label))?;
        Ok(cfg)
    }
}

pub fn optimal_probability(cfg: &Config) -> f64 {
    match (cfg.scheme, cfg.num_levels) {
        (Scheme::Noma, k) if k != 2 => (k as f64 / cfg.num_users as f64).min(1.0),
        (scheme, _) => optimal_ptx::<f64>(scheme, cfg.num_users).min(1.0),
    }
}

/// `numerator / denominator`, both series labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPair {
    pub label: String,
    pub numerator: String,
    pub denominator: String,
}

fn default_frames() -> u64 {
    200_000
}

fn default_seed() -> u64 {
    1
}

/// A complete experiment; the JSON config file holds exactly one of these.
/// Fields left out of a preset's config are filled from the preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub preset: Preset,
    #[serde(default)]
    pub base: Option<Config>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub series: Vec<Series>,
    #[serde(default)]
    pub ratios: Vec<RatioPair>,
    #[serde(default)]
    pub evaluator: EvaluatorChoice,
    #[serde(default = "default_frames")]
    pub frames: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output path prefix; files are named `{out}-{series}-{evaluator}.csv`.
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub svg: bool,
}

/// Sweep defaults: `T = 6`, `R = 0.5`, 20 dB read as `P = 100`.
fn figure_base(users: usize, slots: usize) -> Config {
    Config::oma(users, slots).with_power(Power::Finite(100.0))
}

impl ExperimentSpec {
    pub fn preset(preset: Preset) -> Self {
        use Scheme::{Noma, Oma};
        use SeriesPolicy::{Adaptive, Fixed, Optimal};
        let mut spec = ExperimentSpec {
            preset,
            base: None,
            sweep: None,
            series: Vec::new(),
            ratios: Vec::new(),
            evaluator: EvaluatorChoice::Analytical,
            frames: default_frames(),
            seed: default_seed(),
            out: None,
            svg: false,
        };
        let users = |start, stop, step| Sweep::range(SweepVariable::Users, start, stop, step).ok();
        match preset {
            Preset::SweepUsers => {
                spec.base = Some(figure_base(8, 8));
                spec.sweep = users(4.0, 32.0, 4.0);
                for k in [2, 4] {
                    spec.series.push(Series::new(&format!("noma-k{k}-adaptive"), Noma, Adaptive).levels(k));
                    spec.series.push(Series::new(&format!("noma-k{k}-fixed"), Noma, Fixed(0.05)).levels(k));
                }
                spec.series.push(Series::new("oma-adaptive", Oma, Adaptive));
                spec.series.push(Series::new("oma-fixed", Oma, Fixed(0.05)));
            }
            Preset::SweepSlots => {
                spec.base = Some(figure_base(8, 1));
                spec.sweep = Sweep::range(SweepVariable::Slots, 1.0, 30.0, 1.0).ok();
                spec.series.push(Series::new("noma-k4-adaptive", Noma, Adaptive).levels(4));
                spec.series.push(Series::new("oma-adaptive", Oma, Adaptive));
            }
            Preset::SpecialCase => {
                spec.base = Some(figure_base(8, 1));
                spec.sweep = users(5.0, 50.0, 5.0);
                for (db, p) in [(20, 100.0), (0, 1.0)] {
                    let power = Power::Finite(p);
                    spec.series.push(Series::new(&format!("noma-k2-{db}db"), Noma, Optimal).levels(2).power(power));
                    spec.series.push(Series::new(&format!("oma-{db}db"), Oma, Optimal).power(power));
                }
            }
            Preset::SweepPtx => {
                spec.base = Some(figure_base(8, 1));
                spec.sweep = Sweep::range(SweepVariable::Ptx, 0.005, 1.0, 0.005).ok();
                spec.series.push(Series::new("noma-k2-fixed", Noma, Fixed(0.0)).levels(2));
                spec.series.push(Series::new("oma-fixed", Oma, Fixed(0.0)));
                spec.series.push(Series::new("noma-k2-optimal", Noma, Optimal).levels(2));
                spec.series.push(Series::new("oma-optimal", Oma, Optimal));
            }
            Preset::RatioVsUsers => {
                spec.base = Some(figure_base(8, 1));
                spec.sweep = users(10.0, 200.0, 10.0);
                for (k, n) in [(2, 1), (2, 4), (4, 1)] {
                    let noma = format!("noma-k{k}-n{n}");
                    let oma = format!("oma-n{n}");
                    spec.series.push(Series::new(&noma, Noma, Optimal).levels(k).slots(n));
                    if !spec.series.iter().any(|s| s.label == oma) {
                        spec.series.push(Series::new(&oma, Oma, Optimal).slots(n));
                    }
                    spec.ratios.push(RatioPair { label: format!("k{k}-n{n}"), numerator: noma, denominator: oma });
                }
            }
            Preset::GenerationModels => {
                spec.base = Some(figure_base(8, 8));
                spec.sweep = users(4.0, 32.0, 4.0);
                for scheme in [Noma, Oma] {
                    for g in [GenerationModel::Gar, GenerationModel::Gaw] {
                        let label = format!("{scheme}-{}", if g == GenerationModel::Gar { "gar" } else { "gaw" });
                        spec.series.push(Series::new(&label, scheme, Adaptive).levels(4).generation(g));
                    }
                }
            }
            Preset::ValidateOracle | Preset::Custom => {}
        }
        spec
    }

    /// Fills unset fields from the preset and checks consistency.
    pub fn resolve(mut self) -> Result<Self> {
        let defaults = ExperimentSpec::preset(self.preset);
        if self.base.is_none() {
            self.base = defaults.base;
        }
        if self.sweep.is_none() {
            self.sweep = defaults.sweep;
        }
        if self.series.is_empty() {
            self.series = defaults.series;
        }
        if self.ratios.is_empty() {
            self.ratios = defaults.ratios;
        }
        if self.preset == Preset::ValidateOracle {
            return Ok(self);
        }
        let Some(base) = &self.base else { bail!("a custom experiment needs a `base` configuration") };
        let Some(sweep) = &self.sweep else { bail!("a custom experiment needs a `sweep`") };
        if let Some(expected) = self.preset.variable() {
            ensure!(
                sweep.variable == expected,
                "preset {} sweeps {expected:?}, not {:?}",
                self.preset.name(),
                sweep.variable
            );
        }
        sweep.check()?;
        if self.series.is_empty() {
            let policy = match base.tx_policy {
                TxPolicy::Fixed(p) => SeriesPolicy::Fixed(p),
                _ => SeriesPolicy::Adaptive,
            };
            let mut s = Series::new(&base.scheme.to_string(), base.scheme, policy);
            s.levels = Some(base.num_levels);
            self.series.push(s);
        }
        let mut labels: Vec<&str> = self.series.iter().map(|s| s.label.as_str()).collect();
        labels.sort_unstable();
        ensure!(labels.windows(2).all(|w| w[0] != w[1]), "series labels must be unique");
        for s in &self.series {
            ensure!(
                !s.label.is_empty() && s.label.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'),
                "series label {:?} must be non-empty and use only [A-Za-z0-9_-]",
                s.label
            );
            if let SeriesPolicy::Fixed(p) = s.policy {
                ensure!((0.0..=1.0).contains(&p), "series {} has ptx {p} outside [0, 1]", s.label);
            }
        }
        for r in &self.ratios {
            for side in [&r.numerator, &r.denominator] {
                ensure!(labels.contains(&side.as_str()), "ratio {} refers to unknown series {side}", r.label);
            }
        }
        ensure!(!self.evaluator.simulated() || self.frames > 0, "simulation needs at least one frame");
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for p in [
            Preset::SweepUsers,
            Preset::SweepSlots,
            Preset::SpecialCase,
            Preset::SweepPtx,
            Preset::RatioVsUsers,
            Preset::GenerationModels,
            Preset::ValidateOracle,
        ] {
            ExperimentSpec::preset(p).resolve().unwrap();
        }
        assert!(ExperimentSpec::preset(Preset::Custom).resolve().is_err());
    }

    #[test]
    fn range_sweeps() {
        let s = Sweep::range(SweepVariable::Users, 4.0, 32.0, 4.0).unwrap();
        assert_eq!(s.values, vec![4.0, 8.0, 12.0, 16.0, 20.0, 24.0, 28.0, 32.0]);
        assert_eq!(Sweep::range(SweepVariable::Ptx, 0.005, 1.0, 0.005).unwrap().values.len(), 200);
        assert!(Sweep::range(SweepVariable::Users, 4.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn json_forms() {
        let spec: ExperimentSpec = serde_json::from_str(
            r#"{"preset":"sweep-users","sweep":{"variable":"users","start":2,"stop":6,"step":2},"evaluator":"both"}"#,
        )
        .unwrap();
        let spec = spec.resolve().unwrap();
        assert_eq!(spec.sweep.unwrap().values, vec![2.0, 4.0, 6.0]);
        assert_eq!(spec.series.len(), 6);
        assert_eq!(spec.frames, 200_000);

        let bad = r#"{"preset":"sweep-users","sweep":{"variable":"slots","values":[1,2]}}"#;
        let spec: ExperimentSpec = serde_json::from_str(bad).unwrap();
        assert!(spec.resolve().is_err());
        let partial = r#"{"preset":"custom","sweep":{"variable":"users","values":[3]}}"#;
        assert!(serde_json::from_str::<ExperimentSpec>(partial).unwrap().resolve().is_err());
        assert!(serde_json::from_str::<ExperimentSpec>(r#"{"preset":"custom","sweep":{"variable":"users"}}"#).is_err());
    }

    #[test]
    fn out_of_domain_values() {
        let mut spec = ExperimentSpec::preset(Preset::SweepPtx);
        spec.sweep = Some(Sweep { variable: SweepVariable::Ptx, values: vec![0.5, 1.5] });
        assert!(spec.resolve().is_err());
        let mut spec = ExperimentSpec::preset(Preset::SweepUsers);
        spec.sweep = Some(Sweep { variable: SweepVariable::Users, values: vec![2.5] });
        assert!(spec.resolve().is_err());
    }

    #[test]
    fn series_configs() {
        let base = figure_base(8, 1);
        let noma = Series::new("n", Scheme::Noma, SeriesPolicy::Optimal).levels(2);
        let cfg = noma.config_at(&base, SweepVariable::Users, 100.0).unwrap();
        assert_eq!(cfg.num_users, 100);
        let TxPolicy::Fixed(p) = cfg.tx_policy else { panic!() };
        assert!((p * 100.0 - 1.6646).abs() < 1e-3);
        let oma = Series::new("o", Scheme::Oma, SeriesPolicy::Adaptive);
        let cfg = oma.config_at(&base, SweepVariable::Ptx, 0.3).unwrap();
        assert_eq!(cfg.tx_policy, TxPolicy::Fixed(0.3));
        assert_eq!(cfg.num_levels, 1);
        let k4 = Series::new("k", Scheme::Noma, SeriesPolicy::Optimal).levels(4);
        assert_eq!(k4.config_at(&base, SweepVariable::Users, 2.0).unwrap().tx_policy, TxPolicy::Fixed(1.0));
    }
}
