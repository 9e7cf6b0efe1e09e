//! Versioned JSON files holding a complete problem instance.
//!
//! Every matrix and vector is stored explicitly, so a reloaded instance
//! evaluates bit-for-bit like the one that was saved, independent of the
//! generator that produced it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::numerics::Vector;
use crate::operators::{InstanceMeta, VIOperator, VIProblem};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemInstanceFile {
    pub schema: u32,
    pub generator: String,
    pub seed: Option<u64>,
    pub dims: Dims,
    pub operator: VIOperator,
    pub feasible_set: FeasibleSet,
    pub known_solution: Option<Vector>,
}

impl From<&VIProblem> for ProblemInstanceFile {
    fn from(p: &VIProblem) -> Self {
        ProblemInstanceFile {
            schema: SCHEMA_VERSION,
            generator: p.meta.generator.clone(),
            seed: p.meta.seed,
            dims: Dims {
                m: p.meta.m,
                k: p.meta.k,
            },
            operator: p.operator.clone(),
            feasible_set: p.feasible_set.clone(),
            known_solution: p.known_solution.clone(),
        }
    }
}

impl ProblemInstanceFile {
    pub fn into_problem(self) -> Result<VIProblem> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema
                ),
            ));
        }
        if self.dims.m != self.operator.dim() {
            return Err(Error::invalid(
                "dims.m",
                format!(
                    "{} does not match operator dimension {}",
                    self.dims.m,
                    self.operator.dim()
                ),
            ));
        }
        VIProblem::new(
            self.operator,
            self.feasible_set,
            self.known_solution,
            InstanceMeta {
                generator: self.generator,
                seed: self.seed,
                m: self.dims.m,
                k: self.dims.k,
            },
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn save_problem(problem: &VIProblem, path: &Path) -> Result<()> {
    fs::write(path, ProblemInstanceFile::from(problem).to_json()?)?;
    Ok(())
}

pub fn load_problem(path: &Path) -> Result<VIProblem> {
    ProblemInstanceFile::from_json(&fs::read_to_string(path)?)?.into_problem()
}
