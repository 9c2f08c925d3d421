//! Plain-text model dumps.
//!
//! ```text
//! distal-model 1
//! arch abel n=2 z=20 k=6
//! params 2158
//! 0.012345678901234567
//! ...
//! ```
//!
//! One parameter per line in flat-vector order. Values are written with the
//! shortest decimal representation that parses back to the same `f64`, so a
//! dump round-trips bit-exactly.

use std::io::{BufRead, Write};

use super::{AnyModel, Architecture, Model};
use crate::error::{Error, Result};

const MAGIC: &str = "distal-model 1";

pub fn write_model<W: Write>(model: &AnyModel, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "arch {}", model.architecture())?;
    writeln!(out, "params {}", model.param_count())?;
    for p in model.params() {
        writeln!(out, "{p:?}")?;
    }
    Ok(())
}

pub fn read_model<R: BufRead>(input: R) -> Result<AnyModel> {
    let mut lines = input.lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Parse(format!("unexpected end of model dump, expected {what}")))?
            .map_err(Error::from)
    };
    if next("header")?.trim() != MAGIC {
        return Err(Error::Parse("not a model dump".into()));
    }
    let arch_line = next("arch line")?;
    let arch: Architecture = arch_line
        .strip_prefix("arch ")
        .ok_or_else(|| Error::Parse("missing arch line".into()))?
        .parse()?;
    let count_line = next("params line")?;
    let count: usize = count_line
        .strip_prefix("params ")
        .and_then(|c| c.trim().parse().ok())
        .ok_or_else(|| Error::Parse("missing params line".into()))?;
    let mut params = Vec::with_capacity(count);
    for i in 0..count {
        let line = next("parameter")?;
        params.push(
            line.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad parameter {i}: {line:?}")))?,
        );
    }
    AnyModel::from_params(&arch, params)
}
