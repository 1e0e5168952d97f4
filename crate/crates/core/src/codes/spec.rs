//! Textual code descriptions, as accepted by `--code` and plan files.
//!
//! ```text
//! laplace:M          Laplace predictor of Markov order M
//! kt:M               Krichevsky-Trofimov predictor of order M
//! r:N | r            R mixture over KT orders 0..=N (default 16)
//! mix:A+B+...        mixture of codes, equal weights unless given as w*CODE
//! mm:0.7*A+0.3*B     the minimal weighted member of the family
//! ext:CMD            external compressor command template
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::{Code, ExternalCompressor, MixMode, MixtureCode, PredictorModel, RCode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum CodeSpec {
    Laplace(usize),
    Krichevsky(usize),
    R(usize),
    Mixture {
        mode: MixMode,
        parts: Vec<(Option<f64>, CodeSpec)>,
    },
    External(String),
}

impl CodeSpec {
    pub fn build(&self, scratch_dir: Option<&Path>) -> Result<Box<dyn Code>> {
        Ok(match self {
            Self::Laplace(m) => Box::new(PredictorModel::laplace(*m)),
            Self::Krichevsky(m) => Box::new(PredictorModel::krichevsky(*m)),
            Self::R(n) => Box::new(RCode::new(*n)),
            Self::External(cmd) => {
                let mut code = ExternalCompressor::new(cmd.clone());
                if let Some(dir) = scratch_dir {
                    code = code.with_scratch_dir(dir);
                }
                Box::new(code)
            }
            Self::Mixture { mode, parts } => {
                let components = parts
                    .iter()
                    .map(|(_, spec)| spec.build(scratch_dir))
                    .collect::<Result<Vec<_>>>()?;
                let weighted = parts.iter().filter(|(w, _)| w.is_some()).count();
                if weighted == 0 {
                    Box::new(MixtureCode::uniform(components, *mode)?)
                } else if weighted == parts.len() {
                    let weights = parts.iter().map(|(w, _)| w.unwrap()).collect();
                    Box::new(MixtureCode::new(components, weights, *mode)?)
                } else {
                    return Err(Error::Usage(
                        "give weights for all mixture components or for none".into(),
                    ));
                }
            }
        })
    }
}

fn parse_order(kind: &str, arg: Option<&str>) -> Result<usize> {
    let arg = arg.ok_or_else(|| Error::Usage(format!("`{kind}` needs an order, e.g. {kind}:1")))?;
    arg.trim()
        .parse()
        .map_err(|_| Error::Usage(format!("`{arg}` is not a valid order for `{kind}`")))
}

impl FromStr for CodeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        match kind {
            "laplace" | "l" => Ok(Self::Laplace(parse_order(kind, arg)?)),
            "kt" | "k" => Ok(Self::Krichevsky(parse_order(kind, arg)?)),
            "r" => match arg {
                None => Ok(Self::R(RCode::DEFAULT_MAX_ORDER)),
                Some(_) => Ok(Self::R(parse_order(kind, arg)?)),
            },
            "ext" => match arg {
                Some(cmd) if !cmd.trim().is_empty() => Ok(Self::External(cmd.to_string())),
                _ => Err(Error::Usage("`ext` needs a command, e.g. ext:gzip -9 -c".into())),
            },
            "mix" | "mm" => {
                let mode = if kind == "mix" { MixMode::Mix } else { MixMode::Mm };
                let body = arg.unwrap_or("");
                let parts = body
                    .split('+')
                    .filter(|p| !p.trim().is_empty())
                    .map(parse_weighted)
                    .collect::<Result<Vec<_>>>()?;
                if parts.is_empty() {
                    return Err(Error::Usage(format!("`{kind}` needs at least one component")));
                }
                if parts
                    .iter()
                    .any(|(_, c)| matches!(c, CodeSpec::Mixture { .. }))
                {
                    return Err(Error::Usage("mixtures cannot be nested".into()));
                }
                Ok(Self::Mixture { mode, parts })
            }
            other => Err(Error::Usage(format!(
                "unknown code `{other}` (expected laplace:M, kt:M, r:N, mix:..., mm:... or ext:CMD)"
            ))),
        }
    }
}

fn parse_weighted(part: &str) -> Result<(Option<f64>, CodeSpec)> {
    let part = part.trim();
    if let Some((w, rest)) = part.split_once('*') {
        if let Ok(weight) = w.trim().parse::<f64>() {
            return Ok((Some(weight), rest.parse()?));
        }
    }
    Ok((None, part.parse()?))
}

impl fmt::Display for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Laplace(m) => write!(f, "laplace:{m}"),
            Self::Krichevsky(m) => write!(f, "kt:{m}"),
            Self::R(n) => write!(f, "r:{n}"),
            Self::External(cmd) => write!(f, "ext:{cmd}"),
            Self::Mixture { mode, parts } => {
                f.write_str(match mode {
                    MixMode::Mix => "mix:",
                    MixMode::Mm => "mm:",
                })?;
                for (i, (w, spec)) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    if let Some(w) = w {
                        write!(f, "{w}*")?;
                    }
                    write!(f, "{spec}")?;
                }
                Ok(())
            }
        }
    }
}
