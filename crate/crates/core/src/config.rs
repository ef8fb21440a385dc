//! Flat dotted-key configuration text.
//!
//! ```text
//! # comment
//! model.gamma = 0.3
//! protocol.elements = dd,ft
//! agents.default = greedy
//! agents.3 = fixed:9
//! ```
//!
//! Every key has a default; unknown keys and repeated keys are errors.
//! [`Config::render`] writes a fully resolved file that parses back to the
//! same configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::agents::PolicySpec;
use crate::engine::{Roster, SimConfig};
use crate::error::{Error, Result};
use crate::model::{ClimateState, ModelConstants, RegionState};
use crate::roster::RosterSpec;
use crate::trade::TariffLevel;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    pub permutations: usize,
    pub permutation_seed: u64,
    /// Annual rate used for the discounted output column.
    pub discount_rate: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self { permutations: 10_000, permutation_seed: 0, discount_rate: 0.015 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub sim: SimConfig,
    /// Episodes per ensemble.
    pub runs: usize,
    pub analysis: AnalysisSettings,
}

impl Default for Config {
    fn default() -> Self {
        Self { sim: SimConfig::default(), runs: 5, analysis: AnalysisSettings::default() }
    }
}

fn err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("line {line}: {msg}"))
}

struct Entry {
    line: usize,
    value: String,
}

fn number<T: std::str::FromStr>(key: &str, e: &Entry) -> Result<T> {
    e.value
        .parse()
        .map_err(|_| err(e.line, format!("{key}: cannot parse `{}`", e.value)))
}

fn list(key: &str, e: &Entry) -> Result<Vec<f64>> {
    e.value
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| err(e.line, format!("{key}: cannot parse `{}` as a number", v.trim())))
        })
        .collect()
}

const REGION_KEYS: [&str; 5] = [
    "regions.capital",
    "regions.tfp",
    "regions.labor",
    "regions.carbon_intensity",
    "regions.abatement_scale",
];

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, found `{content}`")))?;
            let key = k.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(err(line, format!("malformed key `{key}`")));
            }
            if let Some(prev) = entries.get(key) {
                return Err(err(line, format!("{key} already set on line {}", prev.line)));
            }
            entries.insert(key.to_string(), Entry { line, value: v.trim().to_string() });
        }

        let mut cfg = Config::default();
        let mut roster = RosterSpec::default();
        let mut regions: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        let mut default_policy = PolicySpec::default();
        let mut overrides: BTreeMap<usize, (usize, PolicySpec)> = BTreeMap::new();
        let c = &mut cfg.sim.constants;
        let cl = &mut cfg.sim.initial_climate;

        for (key, e) in &entries {
            let f = || number::<f64>(key, e);
            match key.as_str() {
                "model.dt_years" => c.dt_years = f()?,
                "model.horizon_steps" => c.horizon_steps = number(key, e)?,
                "model.gamma" => c.capital_elasticity = f()?,
                "model.delta" => c.depreciation = f()?,
                "model.savings_rate" => c.savings_rate = f()?,
                "model.damage_coeff" => c.damage_coeff = f()?,
                "model.abatement_exponent" => c.abatement_exponent = f()?,
                "model.abatement_scale_decline" => c.abatement_scale_decline = f()?,
                "model.sigma_decline" => c.sigma_decline = f()?,
                "model.tfp_growth" => c.tfp_growth = f()?,
                "model.forcing_per_doubling" => c.forcing_per_doubling = f()?,
                "model.climate_sensitivity" => c.climate_sensitivity = f()?,
                "model.c1" => c.c1 = f()?,
                "model.c3" => c.c3 = f()?,
                "model.c4" => c.c4 = f()?,
                "model.preindustrial_atmos_carbon" => c.preindustrial_atmos_carbon = f()?,
                "model.carbon_transfer" => {
                    let v = list(key, e)?;
                    if v.len() != 9 {
                        return Err(err(e.line, format!("{key} needs 9 entries (row-major, [to][from]), got {}", v.len())));
                    }
                    for (i, x) in v.into_iter().enumerate() {
                        c.carbon_transfer[i / 3][i % 3] = x;
                    }
                }
                "climate.m_at" => cl.m_at = f()?,
                "climate.m_up" => cl.m_up = f()?,
                "climate.m_lo" => cl.m_lo = f()?,
                "climate.t_at" => cl.t_at = f()?,
                "climate.t_lo" => cl.t_lo = f()?,
                "roster.count" => roster.count = number(key, e)?,
                "roster.seed" => roster.seed = number(key, e)?,
                "roster.abatement_scale" => roster.abatement_scale = f()?,
                k if REGION_KEYS.contains(&k) => {
                    let name = REGION_KEYS.iter().find(|r| **r == k).expect("matched");
                    regions.insert(name, list(key, e)?);
                }
                "protocol.elements" => {
                    cfg.sim.variant = e.value.parse().map_err(|x| err(e.line, format!("protocol.elements: {x}")))?
                }
                "agents.default" => {
                    default_policy = e.value.parse().map_err(|x| err(e.line, format!("agents.default: {x}")))?
                }
                k if k.starts_with("agents.") => {
                    let idx: usize = k["agents.".len()..]
                        .parse()
                        .map_err(|_| err(e.line, format!("unknown key `{k}`")))?;
                    let p = e.value.parse().map_err(|x| err(e.line, format!("{k}: {x}")))?;
                    overrides.insert(idx, (e.line, p));
                }
                "trade.openness" => cfg.sim.openness = f()?,
                "trade.default_tariff" => {
                    let v: u8 = number(key, e)?;
                    cfg.sim.default_tariff = TariffLevel::new(v).map_err(|_| err(e.line, format!("{key} must be 0..=10")))?;
                }
                "sim.seed" => cfg.sim.seed = number(key, e)?,
                "sim.runs" => cfg.runs = number(key, e)?,
                "analysis.permutations" => cfg.analysis.permutations = number(key, e)?,
                "analysis.permutation_seed" => cfg.analysis.permutation_seed = number(key, e)?,
                "analysis.discount_rate" => cfg.analysis.discount_rate = f()?,
                other => return Err(err(e.line, format!("unknown key `{other}`"))),
            }
        }

        cfg.sim.roster = if regions.is_empty() {
            Roster::Generated(roster)
        } else {
            if let Some(k) = ["roster.count", "roster.seed", "roster.abatement_scale"].iter().find(|k| entries.contains_key(**k)) {
                return Err(err(entries[*k].line, format!("{k} conflicts with an explicit regions.* roster")));
            }
            for k in REGION_KEYS {
                if !regions.contains_key(k) {
                    return Err(Error::InvalidConfig(format!("{k} is required when any regions.* key is given")));
                }
            }
            let n = regions[REGION_KEYS[0]].len();
            for k in REGION_KEYS {
                if regions[k].len() != n {
                    return Err(err(entries[k].line, format!("{k} has {} entries, expected {n}", regions[k].len())));
                }
            }
            Roster::Explicit(
                (0..n)
                    .map(|i| RegionState {
                        capital: regions[REGION_KEYS[0]][i],
                        tfp: regions[REGION_KEYS[1]][i],
                        labor: regions[REGION_KEYS[2]][i],
                        carbon_intensity: regions[REGION_KEYS[3]][i],
                        abatement_scale: regions[REGION_KEYS[4]][i],
                    })
                    .collect(),
            )
        };
        let n = cfg.sim.roster.count();
        cfg.sim.policies = vec![default_policy; n];
        for (idx, (line, p)) in overrides {
            if idx >= n {
                return Err(err(line, format!("agents.{idx}: only {n} regions")));
            }
            cfg.sim.policies[idx] = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.runs < 1 {
            return Err(Error::InvalidConfig("sim.runs must be >= 1".into()));
        }
        if self.analysis.permutations < 1 {
            return Err(Error::InvalidConfig("analysis.permutations must be >= 1".into()));
        }
        if !(self.analysis.discount_rate > -1.0 && self.analysis.discount_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "analysis.discount_rate must be finite and > -1, got {}",
                self.analysis.discount_rate
            )));
        }
        Ok(())
    }

    /// Fully resolved text form; parses back to an equal configuration.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let join = |v: &mut dyn Iterator<Item = f64>| v.map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let c: &ModelConstants = &self.sim.constants;
        kv("model.dt_years", format!("{:?}", c.dt_years));
        kv("model.horizon_steps", c.horizon_steps.to_string());
        for (k, v) in [
            ("model.gamma", c.capital_elasticity),
            ("model.delta", c.depreciation),
            ("model.savings_rate", c.savings_rate),
            ("model.damage_coeff", c.damage_coeff),
            ("model.abatement_exponent", c.abatement_exponent),
            ("model.abatement_scale_decline", c.abatement_scale_decline),
            ("model.sigma_decline", c.sigma_decline),
            ("model.tfp_growth", c.tfp_growth),
            ("model.forcing_per_doubling", c.forcing_per_doubling),
            ("model.climate_sensitivity", c.climate_sensitivity),
            ("model.c1", c.c1),
            ("model.c3", c.c3),
            ("model.c4", c.c4),
            ("model.preindustrial_atmos_carbon", c.preindustrial_atmos_carbon),
        ] {
            kv(k, format!("{v:?}"));
        }
        kv("model.carbon_transfer", join(&mut c.carbon_transfer.iter().flatten().copied()));
        let cl: &ClimateState = &self.sim.initial_climate;
        for (k, v) in [
            ("climate.m_at", cl.m_at),
            ("climate.m_up", cl.m_up),
            ("climate.m_lo", cl.m_lo),
            ("climate.t_at", cl.t_at),
            ("climate.t_lo", cl.t_lo),
        ] {
            kv(k, format!("{v:?}"));
        }
        match &self.sim.roster {
            Roster::Generated(r) => {
                kv("roster.count", r.count.to_string());
                kv("roster.seed", r.seed.to_string());
                kv("roster.abatement_scale", format!("{:?}", r.abatement_scale));
            }
            Roster::Explicit(r) => {
                kv("regions.capital", join(&mut r.iter().map(|x| x.capital)));
                kv("regions.tfp", join(&mut r.iter().map(|x| x.tfp)));
                kv("regions.labor", join(&mut r.iter().map(|x| x.labor)));
                kv("regions.carbon_intensity", join(&mut r.iter().map(|x| x.carbon_intensity)));
                kv("regions.abatement_scale", join(&mut r.iter().map(|x| x.abatement_scale)));
            }
        }
        kv("protocol.elements", self.sim.variant.to_string());
        let default = self.sim.policies.first().copied().unwrap_or_default();
        kv("agents.default", default.to_string());
        for (i, p) in self.sim.policies.iter().enumerate().filter(|(_, p)| **p != default) {
            kv(&format!("agents.{i}"), p.to_string());
        }
        kv("trade.openness", format!("{:?}", self.sim.openness));
        kv("trade.default_tariff", self.sim.default_tariff.to_string());
        kv("sim.seed", self.sim.seed.to_string());
        kv("sim.runs", self.runs.to_string());
        kv("analysis.permutations", self.analysis.permutations.to_string());
        kv("analysis.permutation_seed", self.analysis.permutation_seed.to_string());
        kv("analysis.discount_rate", format!("{:?}", self.analysis.discount_rate));
        s
    }
}
