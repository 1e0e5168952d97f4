//! Simulation plans: a source family, a test, a grid of parameters and
//! lengths, and a replicate count.
//!
//! Plans are plain `key = value` text with `#` comments:
//!
//! ```text
//! schema = univtest-plan/1
//! source = markov1            # bernoulli | markov1 | parity | coupled-pair
//! params = 0.8, 0.6, 0.55     # one grid row per value
//! p0_given_1 = 0.5            # markov1 only
//! test = serial               # identity | serial | independence | homogeneity
//! m = 0
//! alpha = 0.01
//! code = r:16
//! lengths = 512, 16384, 65536
//! replicates = 20
//! seed = 2024
//! ```
//!
//! Grid parameters by source:
//!
//! * `bernoulli`: probability of symbol 0.
//! * `markov1`: `p(0|0)`, with `p(0|1)` from `p0_given_1` (default 0.5).
//! * `parity`: `p0`, the probability of 0 after an even-parity window.
//! * `coupled-pair`: probability that the second of two fair binary
//!   components copies the first; 0 gives independent components.
//!
//! The identity test compares against the fair coin, or against the
//! Bernoulli source with P(0) = `null_p0` when that key is set. The
//! homogeneity test draws `samples` (default 2) samples of the given length;
//! with `alt_param` set, the last one uses that parameter instead.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::codes::CodeSpec;
use crate::error::{Error, Result};
use crate::hypothesis::TestKind;

pub const PLAN_SCHEMA: &str = "univtest-plan/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceFamily {
    Bernoulli,
    Markov1,
    Parity,
    CoupledPair,
}

impl FromStr for SourceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(Self::Bernoulli),
            "markov1" => Ok(Self::Markov1),
            "parity" => Ok(Self::Parity),
            "coupled-pair" => Ok(Self::CoupledPair),
            other => Err(Error::Spec(format!(
                "unknown source `{other}` (expected bernoulli, markov1, parity or coupled-pair)"
            ))),
        }
    }
}

impl fmt::Display for SourceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bernoulli => "bernoulli",
            Self::Markov1 => "markov1",
            Self::Parity => "parity",
            Self::CoupledPair => "coupled-pair",
        })
    }
}

fn parse_test_kind(s: &str) -> Result<TestKind> {
    match s {
        "identity" => Ok(TestKind::Identity),
        "serial" => Ok(TestKind::Serial),
        "independence" | "indep" => Ok(TestKind::Independence),
        "homogeneity" | "homog" => Ok(TestKind::Homogeneity),
        other => Err(Error::Spec(format!(
            "unknown test `{other}` (expected identity, serial, independence or homogeneity)"
        ))),
    }
}

fn test_kind_name(kind: TestKind) -> &'static str {
    match kind {
        TestKind::Identity => "identity",
        TestKind::Serial => "serial",
        TestKind::Independence => "independence",
        TestKind::Homogeneity => "homogeneity",
        TestKind::Partition => "partition",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub source: SourceFamily,
    pub params: Vec<f64>,
    pub p0_given_1: f64,
    pub test: TestKind,
    pub order: usize,
    pub alpha: f64,
    pub code: CodeSpec,
    pub lengths: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub samples: usize,
    pub alt_param: Option<f64>,
    pub null_p0: Option<f64>,
}

impl SimulationPlan {
    /// A plan with the defaults of every optional key.
    pub fn new(source: SourceFamily, test: TestKind, params: Vec<f64>, lengths: Vec<usize>) -> Self {
        Self {
            source,
            params,
            p0_given_1: 0.5,
            test,
            order: 0,
            alpha: 0.01,
            code: CodeSpec::R(16),
            lengths,
            replicates: 1,
            seed: 0,
            samples: 2,
            alt_param: None,
            null_p0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Spec(m));
        if self.params.is_empty() || self.lengths.is_empty() {
            return fail("plan needs at least one parameter and one length".into());
        }
        if self.lengths.contains(&0) {
            return fail("lengths must be positive".into());
        }
        if self.replicates == 0 {
            return fail("replicates must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        let probabilities = self
            .params
            .iter()
            .chain(self.alt_param.iter())
            .chain(self.null_p0.iter())
            .chain(std::iter::once(&self.p0_given_1));
        for &p in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("probability {p} outside [0, 1]"));
            }
        }
        if self.source == SourceFamily::Parity && self.params.iter().any(|&p| p <= 0.0 || p >= 1.0)
        {
            return fail("parity p0 must lie strictly inside (0, 1)".into());
        }
        match (self.test, self.source) {
            (TestKind::Independence, SourceFamily::CoupledPair) => {}
            (TestKind::Independence, _) | (_, SourceFamily::CoupledPair) => {
                return fail("the independence test goes with the coupled-pair source, and only it".into())
            }
            (TestKind::Partition, _) => return fail("plans cannot run the partition test".into()),
            _ => {}
        }
        if self.test == TestKind::Homogeneity && self.samples < 2 {
            return fail("the homogeneity test needs samples >= 2".into());
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut plan = Self::new(SourceFamily::Bernoulli, TestKind::Serial, vec![], vec![]);
        let (mut schema, mut source, mut test) = (None, None, None);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |what: &str| Error::Spec(format!("plan line {}: {what}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || err(&format!("invalid value `{value}` for `{key}`"));
            match key {
                "schema" => schema = Some(value.to_string()),
                "source" => source = Some(value.parse::<SourceFamily>()?),
                "test" => test = Some(parse_test_kind(value)?),
                "params" => plan.params = parse_list(value).ok_or_else(bad)?,
                "lengths" => plan.lengths = parse_list(value).ok_or_else(bad)?,
                "p0_given_1" => plan.p0_given_1 = value.parse().map_err(|_| bad())?,
                "m" => plan.order = value.parse().map_err(|_| bad())?,
                "alpha" => plan.alpha = value.parse().map_err(|_| bad())?,
                "code" => plan.code = value.parse()?,
                "replicates" => plan.replicates = value.parse().map_err(|_| bad())?,
                "seed" => plan.seed = value.parse().map_err(|_| bad())?,
                "samples" => plan.samples = value.parse().map_err(|_| bad())?,
                "alt_param" => plan.alt_param = Some(value.parse().map_err(|_| bad())?),
                "null_p0" => plan.null_p0 = Some(value.parse().map_err(|_| bad())?),
                _ => return Err(err(&format!("unknown key `{key}`"))),
            }
        }
        match schema.as_deref() {
            Some(PLAN_SCHEMA) => {}
            Some(other) => {
                return Err(Error::Spec(format!(
                    "unsupported plan schema `{other}` (expected {PLAN_SCHEMA})"
                )))
            }
            None => return Err(Error::Spec(format!("missing `schema = {PLAN_SCHEMA}`"))),
        }
        plan.source = source.ok_or_else(|| Error::Spec("missing `source`".into()))?;
        plan.test = test.ok_or_else(|| Error::Spec("missing `test`".into()))?;
        plan.validate()?;
        Ok(plan)
    }
}

fn parse_list<T: FromStr>(s: &str) -> Option<Vec<T>> {
    s.split(',').map(|v| v.trim().parse().ok()).collect()
}

fn join<T: fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl FromStr for SimulationPlan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Writes the plan back in the format [`SimulationPlan::parse`] reads.
impl fmt::Display for SimulationPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "schema = {PLAN_SCHEMA}")?;
        writeln!(f, "source = {}", self.source)?;
        writeln!(f, "params = {}", join(&self.params))?;
        writeln!(f, "p0_given_1 = {}", self.p0_given_1)?;
        writeln!(f, "test = {}", test_kind_name(self.test))?;
        writeln!(f, "m = {}", self.order)?;
        writeln!(f, "alpha = {}", self.alpha)?;
        writeln!(f, "code = {}", self.code)?;
        writeln!(f, "lengths = {}", join(&self.lengths))?;
        writeln!(f, "replicates = {}", self.replicates)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "samples = {}", self.samples)?;
        if let Some(p) = self.alt_param {
            writeln!(f, "alt_param = {p}")?;
        }
        if let Some(p) = self.null_p0 {
            writeln!(f, "null_p0 = {p}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MARKOV_PLAN: &str = "
        schema = univtest-plan/1
        source = markov1
        params = 0.8, 0.6   # p(0|0)
        test = serial
        m = 0
        alpha = 0.01
        code = r:16
        lengths = 512, 16384
        replicates = 20
        seed = 7
    ";

    #[test]
    fn parses_and_round_trips() {
        let plan: SimulationPlan = MARKOV_PLAN.parse().unwrap();
        assert_eq!(plan.source, SourceFamily::Markov1);
        assert_eq!(plan.params, vec![0.8, 0.6]);
        assert_eq!(plan.lengths, vec![512, 16384]);
        assert_eq!(plan.p0_given_1, 0.5);
        assert_eq!(plan.code, CodeSpec::R(16));
        let again: SimulationPlan = plan.to_string().parse().unwrap();
        assert_eq!(again, plan);
    }

    #[test]
    fn rejects_invalid_plans() {
        let without_schema = MARKOV_PLAN.replace("schema = univtest-plan/1", "");
        assert!(SimulationPlan::parse(&without_schema).is_err());
        let wrong_schema = MARKOV_PLAN.replace("univtest-plan/1", "univtest-plan/9");
        assert!(SimulationPlan::parse(&wrong_schema).is_err());
        assert!(SimulationPlan::parse(&MARKOV_PLAN.replace("replicates = 20", "replicates = 0")).is_err());
        assert!(SimulationPlan::parse(&MARKOV_PLAN.replace("lengths = 512", "lengths = 0")).is_err());
        assert!(SimulationPlan::parse(&MARKOV_PLAN.replace("test = serial", "test = independence")).is_err());
        assert!(SimulationPlan::parse(&format!("{MARKOV_PLAN}\ncolour = red")).is_err());
    }
}
