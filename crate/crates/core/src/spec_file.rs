//! JSON system specs and built system files.
//!
//! A system file stores the spec it came from next to the full block
//! geometry. Loading rebuilds the system from the spec and insists that the
//! stored geometry matches, so a file cannot describe a map its spec does not
//! produce.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::constructions::{
    build_stacked, build_two_block, solve_rate, ActiveSet, BuildOptions, Half, LegSchedule,
    Placement, Schedule, StackedSystem, System, TwoBlockSystem,
};
use crate::error::{Error, Result};
use crate::exact::{format_rational, int, parse_rational, Rational};
use crate::map::AffinePiece;

pub const SYSTEM_FORMAT: &str = "mmdim-system/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Geometric,
    Quadratic,
    Sparse,
    TwoBlock,
    Identity,
}

/// `"pow3"` or `{"constant": L}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LegOverride {
    Named(String),
    Constant { constant: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct SystemSpecFile {
    pub n: usize,
    pub kind: Kind,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leg_schedule_override: Option<LegOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
}

fn field(name: &str, value: &Option<String>) -> Result<Option<Rational>> {
    value
        .as_deref()
        .map(|t| parse_rational(t).map_err(|e| Error::param(name, e.to_string())))
        .transpose()
}

fn require(name: &str, value: &Option<String>, kind: &str) -> Result<Rational> {
    field(name, value)?.ok_or_else(|| Error::param(name, format!("required for kind {kind}")))
}

fn forbid<T>(name: &str, value: &Option<T>, kind: &str) -> Result<()> {
    match value {
        Some(_) => Err(Error::param(name, format!("not allowed for kind {kind}"))),
        None => Ok(()),
    }
}

impl SystemSpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: SystemSpecFile = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            // serde names the offending key in unknown/missing field errors.
            Error::Format(msg)
        })?;
        spec.check()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn k_max(&self) -> u64 {
        self.k_max.unwrap_or(match self.kind {
            Kind::Sparse | Kind::TwoBlock => 3125,
            _ => 24,
        })
    }

    fn legs(&self) -> Result<LegSchedule> {
        match &self.leg_schedule_override {
            None => Ok(LegSchedule::Pow3),
            Some(LegOverride::Named(s)) if s == "pow3" => Ok(LegSchedule::Pow3),
            Some(LegOverride::Named(s)) => Err(Error::param(
                "legScheduleOverride",
                format!("expected \"pow3\" or {{\"constant\": L}}, got {s:?}"),
            )),
            Some(LegOverride::Constant { constant }) => Ok(LegSchedule::Constant(*constant)),
        }
    }

    /// Field consistency, without building anything.
    pub fn check(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param("n", format!("n must be at least 2, got {}", self.n)));
        }
        if self.k_max == Some(0) {
            return Err(Error::param("kMax", "kMax must be at least 1"));
        }
        self.schedule().map(|_| ())
    }

    /// The stacked schedule, for stacked kinds.
    pub fn schedule(&self) -> Result<Option<Schedule>> {
        let kind = format!("{:?}", self.kind).to_lowercase();
        let b = field("B", &self.b)?.unwrap_or_else(|| int(1));
        match self.kind {
            Kind::Geometric => {
                forbid("alpha", &self.alpha, &kind)?;
                forbid("beta", &self.beta, &kind)?;
                let r = require("r", &self.r, &kind)?;
                Ok(Some(Schedule::geometric(b, r)?.with_legs(self.legs()?)?))
            }
            Kind::Quadratic => {
                forbid("r", &self.r, &kind)?;
                forbid("alpha", &self.alpha, &kind)?;
                forbid("beta", &self.beta, &kind)?;
                Ok(Some(Schedule::quadratic(b)?.with_legs(self.legs()?)?))
            }
            Kind::Sparse => {
                forbid("alpha", &self.alpha, &kind)?;
                let s = match (field("r", &self.r)?, field("beta", &self.beta)?) {
                    (Some(r), None) => Schedule::geometric(b, r)?,
                    (None, Some(beta)) => {
                        forbid("B", &self.b, "sparse with beta")?;
                        solve_rate(&beta, self.n).map_err(|e| rename(e, "beta"))?
                    }
                    (Some(_), Some(_)) => {
                        return Err(Error::param("beta", "give either r or beta, not both"))
                    }
                    (None, None) => {
                        return Err(Error::param("r", "sparse needs r or beta"))
                    }
                };
                Ok(Some(s.with_legs(self.legs()?)?.with_active(ActiveSet::SelfPowers)))
            }
            Kind::TwoBlock => {
                forbid("r", &self.r, "two_block")?;
                forbid("B", &self.b, "two_block")?;
                forbid("legScheduleOverride", &self.leg_schedule_override, "two_block")?;
                let alpha = require("alpha", &self.alpha, "two_block")?;
                let beta = require("beta", &self.beta, "two_block")?;
                // Validated by a dry run of the parameter checks.
                build_two_block_params(&alpha, &beta, self.n)?;
                Ok(None)
            }
            Kind::Identity => {
                for (name, v) in [("B", &self.b), ("r", &self.r), ("alpha", &self.alpha), ("beta", &self.beta)] {
                    forbid(name, v, "identity")?;
                }
                forbid("legScheduleOverride", &self.leg_schedule_override, "identity")?;
                Ok(None)
            }
        }
    }

    pub fn build(&self, options: BuildOptions) -> Result<System> {
        self.check()?;
        let k_max = self.k_max();
        match self.kind {
            Kind::Identity => Ok(System::Identity { n: self.n, k_max }),
            Kind::TwoBlock => {
                let alpha = require("alpha", &self.alpha, "two_block")?;
                let beta = require("beta", &self.beta, "two_block")?;
                Ok(System::TwoBlock(build_two_block(&alpha, &beta, self.n, k_max, options)?))
            }
            _ => {
                let s = self.schedule()?.expect("stacked kind");
                Ok(System::Stacked(build_stacked(&s, self.n, k_max, options)?))
            }
        }
    }
}

fn rename(e: Error, to: &str) -> Error {
    match e {
        Error::InvalidParameter { reason, .. } => Error::param(to, reason),
        other => other,
    }
}

fn build_two_block_params(alpha: &Rational, beta: &Rational, n: usize) -> Result<()> {
    use num_traits::{Signed, Zero};
    if alpha.is_negative() {
        return Err(Error::param("alpha", "alpha must be >= 0"));
    }
    if *beta > int(n as i64) {
        return Err(Error::param("beta", format!("beta must be <= {n}")));
    }
    if alpha > beta {
        return Err(Error::param("alpha", "alpha exceeds beta"));
    }
    if !beta.is_zero() {
        solve_rate(beta, n).map_err(|e| rename(e, "beta"))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
struct BlockData<'a> {
    placement: &'a Placement,
    active: bool,
    legs: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    assignment: Option<&'a [(u64, Vec<u64>)]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pieces: Option<&'a [AffinePiece]>,
}

fn stacked_value(s: &StackedSystem) -> Value {
    let blocks: Vec<BlockData> = s
        .blocks()
        .iter()
        .map(|b| BlockData {
            placement: &b.placement,
            active: b.active,
            legs: b.legs,
            assignment: b.horseshoe.as_ref().map(|h| h.assignment()),
            pieces: b.horseshoe.as_ref().map(|h| h.pamap().pieces()),
        })
        .collect();
    serde_json::json!({
        "kind": "stacked",
        "n": s.n(),
        "kMax": s.k_max(),
        "schedule": s.schedule(),
        "effectiveSchedule": s.effective_schedule(),
        "maxLegs": s.options().max_legs,
        "tail": format_rational(s.tail_anchor()),
        "blocks": blocks,
    })
}

fn two_block_value(t: &TwoBlockSystem) -> Value {
    serde_json::json!({
        "kind": "two_block",
        "n": t.n(),
        "alpha": format_rational(t.alpha()),
        "beta": format_rational(t.beta()),
        "lower": system_value(t.half(Half::Lower)),
        "upper": system_value(t.half(Half::Upper)),
    })
}

/// JSON form of a built system.
pub fn system_value(system: &System) -> Value {
    match system {
        System::Identity { n, k_max } => serde_json::json!({
            "kind": "identity",
            "n": n,
            "kMax": k_max,
        }),
        System::Stacked(s) => stacked_value(s),
        System::TwoBlock(t) => two_block_value(t),
    }
}

/// The full system file for `spec`, built with `options`.
pub fn system_file(spec: &SystemSpecFile, options: BuildOptions) -> Result<(System, String)> {
    let system = spec.build(options)?;
    let text = render(spec, options, &system);
    Ok((system, text))
}

fn render(spec: &SystemSpecFile, options: BuildOptions, system: &System) -> String {
    let (lower, upper) = system.target();
    let v = serde_json::json!({
        "format": SYSTEM_FORMAT,
        "spec": spec,
        "options": options,
        "target": {
            "lower": format_rational(&lower),
            "upper": format_rational(&upper),
        },
        "system": system_value(system),
    });
    let mut s = serde_json::to_string_pretty(&v).expect("system serializes");
    s.push('\n');
    s
}

/// A loaded system file.
#[derive(Clone, Debug)]
pub struct LoadedSystem {
    pub spec: SystemSpecFile,
    pub options: BuildOptions,
    pub system: System,
}

impl LoadedSystem {
    pub fn to_text(&self) -> String {
        render(&self.spec, self.options, &self.system)
    }
}

/// Parses a system file, rebuilds it from its spec and checks that the stored
/// geometry is exactly what the spec produces.
pub fn load_system(text: &str) -> Result<LoadedSystem> {
    let stored: Value = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    match stored.get("format").and_then(Value::as_str) {
        Some(SYSTEM_FORMAT) => {}
        other => {
            return Err(Error::Format(format!(
                "expected format {SYSTEM_FORMAT:?}, found {other:?}"
            )))
        }
    }
    let get = |key: &str| {
        stored
            .get(key)
            .cloned()
            .ok_or_else(|| Error::Format(format!("missing key {key:?}")))
    };
    let spec: SystemSpecFile =
        serde_json::from_value(get("spec")?).map_err(|e| Error::Format(e.to_string()))?;
    let options: BuildOptions =
        serde_json::from_value(get("options")?).map_err(|e| Error::Format(e.to_string()))?;
    let system = spec.build(options)?;
    let rebuilt: Value =
        serde_json::from_str(&render(&spec, options, &system)).expect("own output parses");
    if rebuilt != stored {
        return Err(Error::Tampered);
    }
    Ok(LoadedSystem {
        spec,
        options,
        system,
    })
}
