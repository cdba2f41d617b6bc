//! Experiment description files (TOML).
//!
//! ```toml
//! model = "../models/pdgf.gcm"
//! times = { start = 0, stop = 20, step = 1 }
//! queries = ["P=? [ F[{t},{t}] SHP2=1 ]"]
//! outputs = ["out/shp2.csv"]
//!
//! [[variant]]
//! name = "SHP2Mutant"
//! remove_reactions = ["7"]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{check_time_grid, Edit, Variant};
use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid::List(Vec::new())
    }
}

impl TimeGrid {
    /// Instants of the grid; a range includes `stop` when it lies on the grid.
    pub fn instants(&self) -> Result<Vec<f64>, Error> {
        let times = match *self {
            TimeGrid::List(ref v) => v.clone(),
            TimeGrid::Range { start, stop, step } => {
                if !(step > 0.0 && step.is_finite() && stop >= start) {
                    return Err(Error::Spec(format!("bad time range {start}..{stop} step {step}")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| start + i as f64 * step).collect()
            }
        };
        check_time_grid(&times)?;
        Ok(times)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub name: String,
    #[serde(default)]
    pub remove_reactions: Vec<String>,
    #[serde(default)]
    pub remove_labels: Vec<String>,
}

impl VariantSpec {
    pub fn to_variant(&self) -> Variant {
        let edits = self
            .remove_reactions
            .iter()
            .map(|r| Edit::RemoveReaction(r.clone()))
            .chain(self.remove_labels.iter().map(|l| Edit::RemoveLabel(l.clone())))
            .collect();
        Variant::new(self.name.clone(), edits)
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub model: PathBuf,
    /// Constant file; defaults to the model's `<stem>_rates.gcm` if present.
    #[serde(default)]
    pub rates: Option<PathBuf>,
    #[serde(default)]
    pub times: TimeGrid,
    /// Property templates; `{t}` is replaced by each time.
    pub queries: Vec<String>,
    /// CSV path per query; queries without one are only returned.
    #[serde(default)]
    pub outputs: Vec<PathBuf>,
    /// Prepend an unedited `wildtype` column.
    #[serde(default = "yes")]
    pub wildtype: bool,
    #[serde(default, rename = "variant")]
    pub variants: Vec<VariantSpec>,
}

impl ExperimentSpec {
    pub fn parse(src: &str) -> Result<Self, Error> {
        toml::from_str(src).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::parse(&super::read_file(path)?).map_err(|e| match e {
            Error::Spec(m) => Error::Spec(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn check(&self) -> Result<(), Error> {
        self.times.instants()?;
        if self.queries.is_empty() {
            return Err(Error::Spec("experiment has no queries".into()));
        }
        if self.outputs.len() > self.queries.len() {
            return Err(Error::Spec(format!(
                "{} outputs for {} queries",
                self.outputs.len(),
                self.queries.len()
            )));
        }
        if self.variants().is_empty() {
            return Err(Error::Spec("experiment has no variants".into()));
        }
        Ok(())
    }

    pub fn variants(&self) -> Vec<Variant> {
        let mut v = Vec::new();
        if self.wildtype {
            v.push(Variant::wildtype());
        }
        v.extend(self.variants.iter().map(VariantSpec::to_variant));
        v
    }
}
