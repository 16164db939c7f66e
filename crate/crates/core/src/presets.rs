//! Predefined experiment grids, numbered 1 to 5.
//!
//! Each table is a list of labelled cells, one [`ExperimentSpec`] per
//! scenario. Cell `i` uses base seed `seed XOR ((i + 1) << 40)`, so trial
//! seeds never collide across cells for `R < 2^40`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::datagen::{BlockSpec, CopulaFamily, CopulaSpec, MarginSpec, ScenarioSpec};
use crate::error::{Error, Result};
use crate::model::{Combiner, Family, Method, StatFamily};
use crate::montecarlo::{format_f64, run_experiment, ExperimentResult, ExperimentSpec};

pub const TABLE_IDS: [u8; 5] = [1, 2, 3, 4, 5];

const SIZES: [usize; 3] = [50, 100, 200];
const FRACTIONS: [f64; 3] = [0.10, 0.25, 0.50];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub label: String,
    pub spec: ExperimentSpec,
}

/// Trial and replicate counts plus base seed for a table run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scale {
    pub trials: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl Scale {
    /// 1000 trials per cell, 1000 replicates per trial.
    pub fn full(seed: u64) -> Self {
        Self {
            trials: 1000,
            replicates: 1000,
            seed,
        }
    }

    /// A setting that finishes in minutes.
    pub fn desk(seed: u64) -> Self {
        Self {
            trials: 100,
            replicates: 200,
            seed,
        }
    }
}

fn univariate_columns() -> Vec<(StatFamily, Method)> {
    let mut out = Vec::new();
    for family in [Family::S, Family::T] {
        for combiner in [Combiner::Max, Combiner::Mean] {
            for method in [Method::Hat, Method::Check, Method::Sim] {
                out.push((StatFamily::new(family, combiner), method));
            }
        }
    }
    out
}

fn bivariate_columns() -> Vec<(StatFamily, Method)> {
    StatFamily::all()
        .into_iter()
        .map(|s| (s, Method::Check))
        .collect()
}

fn exp(rate: f64) -> MarginSpec {
    MarginSpec::exponential(rate).expect("positive rate")
}

fn copula(family: CopulaFamily, tau: f64) -> CopulaSpec {
    CopulaSpec::from_tau(family, tau).expect("tau in range")
}

fn family_tag(family: CopulaFamily) -> &'static str {
    match family {
        CopulaFamily::Clayton => "Cl",
        CopulaFamily::GumbelHougaard => "GH",
        CopulaFamily::Independence => "Ind",
    }
}

struct Builder {
    scale: Scale,
    cells: Vec<TableCell>,
}

impl Builder {
    fn push(
        &mut self,
        label: String,
        n: usize,
        t: f64,
        pre: BlockSpec,
        post: BlockSpec,
        stats: Vec<(StatFamily, Method)>,
    ) -> Result<()> {
        let seed = self.scale.seed ^ ((self.cells.len() as u64 + 1) << 40);
        let scenario = ScenarioSpec::new(n, t, pre, post, seed)?;
        let spec = ExperimentSpec::new(scenario, stats, self.scale.trials, self.scale.replicates, 0.05)?;
        self.cells.push(TableCell { label, spec });
        Ok(())
    }
}

/// Cells of table `id` (1 to 5) at the given scale.
pub fn table_cells(id: u8, scale: Scale) -> Result<Vec<TableCell>> {
    let mut b = Builder {
        scale,
        cells: Vec::new(),
    };
    let normal = |sd: f64| BlockSpec::univariate(MarginSpec::normal(0.0, sd).expect("sd > 0"));
    match id {
        1 => {
            for n in SIZES {
                b.push(format!("n={n}"), n, 0.0, normal(1.0), normal(1.0), univariate_columns())?;
            }
        }
        2 => {
            let shifted = BlockSpec::univariate(MarginSpec::normal(0.5, 1.0).expect("sd > 0"));
            let scenarios = [
                ("N(0,1)->N(0.5,1)", normal(1.0), shifted),
                ("N(0,1)->N(0,2)", normal(1.0), normal(2.0)),
                ("E(1)->E(0.5)", BlockSpec::univariate(exp(1.0)), BlockSpec::univariate(exp(0.5))),
            ];
            for (name, pre, post) in scenarios {
                for n in SIZES {
                    for t in FRACTIONS {
                        b.push(
                            format!("{name} n={n} t={t}"),
                            n,
                            t,
                            pre.clone(),
                            post.clone(),
                            univariate_columns(),
                        )?;
                    }
                }
            }
        }
        3 => {
            let margins = [("N", MarginSpec::standard_normal()), ("E", exp(1.0))];
            for (tag, margin) in margins {
                for n in SIZES {
                    for tau in [0.0, 0.25, 0.5, 0.75] {
                        for family in [CopulaFamily::Clayton, CopulaFamily::GumbelHougaard] {
                            let block = BlockSpec::new(copula(family, tau), vec![margin; 2])?;
                            b.push(
                                format!("{} {tag} n={n} tau={tau}", family_tag(family)),
                                n,
                                0.0,
                                block.clone(),
                                block,
                                bivariate_columns(),
                            )?;
                        }
                    }
                }
            }
        }
        4 => {
            for n in SIZES {
                for tau in [0.0, 0.5] {
                    for t in FRACTIONS {
                        for family in [CopulaFamily::Clayton, CopulaFamily::GumbelHougaard] {
                            let c = copula(family, tau);
                            let pre = BlockSpec::new(c, vec![exp(1.0), exp(1.0)])?;
                            let post = BlockSpec::new(c, vec![exp(0.5), exp(1.0)])?;
                            b.push(
                                format!("{} n={n} tau={tau} t={t}", family_tag(family)),
                                n,
                                t,
                                pre,
                                post,
                                bivariate_columns(),
                            )?;
                        }
                    }
                }
            }
        }
        5 => {
            for n in SIZES {
                for tau in [0.3, 0.7] {
                    for t in FRACTIONS {
                        for family in [CopulaFamily::Clayton, CopulaFamily::GumbelHougaard] {
                            let pre = BlockSpec::new(copula(family, 0.1), vec![exp(1.0); 2])?;
                            let post = BlockSpec::new(copula(family, tau), vec![exp(1.0); 2])?;
                            b.push(
                                format!("{} n={n} tau={tau} t={t}", family_tag(family)),
                                n,
                                t,
                                pre,
                                post,
                                bivariate_columns(),
                            )?;
                        }
                    }
                }
            }
        }
        _ => {
            return Err(Error::InvalidParameter(format!(
                "unknown table {id}; expected one of 1-5"
            )))
        }
    }
    Ok(b.cells)
}

/// Runs every cell in order.
pub fn run_table(cells: &[TableCell]) -> Result<Vec<(String, ExperimentResult)>> {
    cells
        .iter()
        .map(|c| Ok((c.label.clone(), run_experiment(&c.spec)?)))
        .collect()
}

/// CSV with a leading `cell` column, otherwise as [`crate::montecarlo::emit_table`].
pub fn emit_table_results<W: Write>(results: &[(String, ExperimentResult)], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell", "stat", "method", "rejection_pct", "mc_se", "seconds"])?;
    for (label, res) in results {
        for row in &res.rows {
            w.write_record([
                label.clone(),
                row.stat.to_string(),
                row.method.to_string(),
                format_f64(row.rejection_pct),
                format_f64(row.mc_se),
                format_f64(row.seconds),
            ])?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        let s = Scale::desk(1);
        assert_eq!(table_cells(1, s).unwrap().len(), 3);
        assert_eq!(table_cells(2, s).unwrap().len(), 27);
        assert_eq!(table_cells(3, s).unwrap().len(), 48);
        assert_eq!(table_cells(4, s).unwrap().len(), 36);
        assert_eq!(table_cells(5, s).unwrap().len(), 36);
        assert!(table_cells(6, s).is_err());
    }

    #[test]
    fn cells_have_distinct_seeds_and_full_scale() {
        let cells = table_cells(4, Scale::full(9)).unwrap();
        let mut seeds: Vec<u64> = cells.iter().map(|c| c.spec.scenario.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), cells.len());
        assert!(cells.iter().all(|c| c.spec.trials == 1000 && c.spec.replicates == 1000));
        assert!(cells.iter().all(|c| c.spec.m == 8));
    }

    #[test]
    fn univariate_tables_use_twelve_columns() {
        let cells = table_cells(1, Scale::desk(0)).unwrap();
        assert_eq!(cells[0].spec.stats.len(), 12);
        assert_eq!(cells[0].spec.scenario.d(), 1);
    }
}
