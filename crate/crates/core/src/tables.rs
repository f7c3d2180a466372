//! Reproduction of the four reference power tables.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::alternatives::Alternative;
use crate::calibration::Budgets;
use crate::error::{invalid, Result};
use crate::harness::{
    calibrate_for, count_rejections, estimate_level, power_label, CalibratedTest, ExperimentConfig, ModelParams,
    TestKind,
};
use crate::null_models::NullDensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableId {
    T1,
    T2,
    T3,
    T4,
}

impl std::str::FromStr for TableId {
    type Err = crate::error::GofError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T1" | "1" => Ok(TableId::T1),
            "T2" | "2" => Ok(TableId::T2),
            "T3" | "3" => Ok(TableId::T3),
            "T4" | "4" => Ok(TableId::T4),
            _ => Err(invalid(format!("unknown table {s}"))),
        }
    }
}

impl std::fmt::Display for TableId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One alternative row with its published powers, aligned with `Layout::tests`.
#[derive(Debug, Clone)]
pub struct Row {
    pub block: &'static str,
    pub alternative: Alternative,
    pub reference: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NullBlock {
    pub null: NullDensity,
    pub rows: Vec<Row>,
    pub level_reference: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Layout {
    pub id: TableId,
    pub n: usize,
    pub tests: Vec<TestKind>,
    pub params: ModelParams,
    pub blocks: Vec<NullBlock>,
}

fn row(block: &'static str, id: &str, reference: &[f64]) -> Row {
    Row { block, alternative: id.parse().expect("table alternative"), reference: reference.to_vec() }
}

fn uniformity(id: TableId) -> Layout {
    let t1 = id == TableId::T1;
    let r = |a: [f64; 5], b: [f64; 5]| if t1 { a } else { b };
    let rows = vec![
        row("f", "f:0.5,2", &r([0.61, 0.56, 0.56, 0.48, 0.29], [0.87, 0.85, 0.87, 0.84, 0.53])),
        row("f", "f:0.7,4", &r([0.80, 0.77, 0.50, 0.71, 0.16], [0.98, 0.98, 0.83, 0.98, 0.29])),
        row("f", "f:0.7,6", &r([0.69, 0.62, 0.23, 0.60, 0.10], [0.97, 0.96, 0.46, 0.95, 0.19])),
        row("g", "g:3,3,0.5", &r([0.55, 0.49, 0.53, 0.40, 0.14], [0.83, 0.77, 0.88, 0.76, 0.35])),
        row("g", "g:10,20,0.25", &r([0.46, 0.49, 0.36, 0.41, 0.33], [0.77, 0.78, 0.62, 0.75, 0.60])),
        row("g", "g:2,2,0.8", &r([0.62, 0.55, 0.63, 0.44, 0.15], [0.90, 0.86, 0.95, 0.82, 0.36])),
        row("g", "g:2,4,0.5", &r([0.57, 0.60, 0.55, 0.58, 0.64], [0.87, 0.89, 0.88, 0.90, 0.91])),
        row("h", "h:0.4,2", &r([0.69, 0.65, 0.70, 0.59, 0.32], [0.93, 0.91, 0.95, 0.90, 0.60])),
        row("h", "h:0.3,5", &r([0.16, 0.16, 0.13, 0.14, 0.07], [0.33, 0.31, 0.23, 0.33, 0.09])),
    ];
    let level_reference = r([0.051, 0.055, 0.061, 0.031, 0.050], [0.050, 0.048, 0.056, 0.031, 0.054]).to_vec();
    let (n, d_tr, d_ct) = if t1 { (50, 6, 6) } else { (100, 12, 10) };
    Layout {
        id,
        n,
        tests: vec![TestKind::Ttr, TestKind::TtrCt, TestKind::Kl, TestKind::Br, TestKind::Ks],
        params: ModelParams { d_tr, d_ct, ..ModelParams::default() },
        blocks: vec![NullBlock { null: NullDensity::Uniform01, rows, level_reference }],
    }
}

fn normality() -> Layout {
    let s = (2.0 * PI).sqrt();
    let id = |kind: &str, x: f64| format!("norm:{kind}:{x}");
    let unit = vec![
        row("f", &id("f", 2.0), &[0.96, 0.92, 0.62]),
        row("f", &id("f", 1.8), &[0.66, 0.66, 0.36]),
        row("f", &id("f", (PI / 2.0).sqrt()), &[0.71, 1.0, 0.07]),
        row("g", "norm:g:1,1", &[0.80, 0.98, 0.77]),
        row("g", "norm:g:0.5,2", &[0.66, 0.98, 0.70]),
        row("g", "norm:g:1,2", &[0.97, 1.0, 0.97]),
        row("h", &id("h", 2.0 / s), &[0.24, 0.95, 0.42]),
        row("h", &id("h", 1.5 / s), &[0.85, 1.0, 0.96]),
    ];
    let narrow = vec![
        row("f", "norm:f:0.17", &[0.93, 0.64, 0.24]),
        row("f", "norm:f:0.16", &[0.87, 0.71, 0.14]),
        row("f", "norm:f:0.12", &[0.99, 1.0, 0.14]),
        row("g", "norm:g:0.1,0.01", &[1.0, 0.98, 0.77]),
        row("g", "norm:g:0.05,0.015", &[0.91, 0.77, 0.35]),
        row("g", "norm:g:0.05,0.02", &[1.0, 0.97, 0.68]),
        row("h", &id("h", 20.0 / s), &[0.96, 0.95, 0.41]),
        row("h", &id("h", 15.0 / s), &[1.0, 1.0, 0.96]),
    ];
    Layout {
        id: TableId::T3,
        n: 100,
        tests: vec![TestKind::Td, TestKind::TtrCt, TestKind::Ks],
        params: ModelParams { d_tr: 12, d_ct: 10, d_range: (1, 10), ..ModelParams::default() },
        blocks: vec![
            NullBlock { null: NullDensity::standard_gaussian(), rows: unit, level_reference: vec![0.052, 0.051, 0.053] },
            NullBlock {
                null: NullDensity::Gaussian { mean: 0.0, sd: 0.1 },
                rows: narrow,
                level_reference: vec![0.053, 0.055, 0.053],
            },
        ],
    }
}

fn exponentiality() -> Layout {
    let rows = vec![
        row("g", "exp:g:4", &[0.89, 0.74]),
        row("h", "exp:h:4", &[0.71, 0.60]),
        row("h", "exp:h:1", &[1.0, 0.90]),
        row("k", "exp:k:10,20,0.25", &[0.91, 0.65]),
        row("l", "exp:l:2,5,0.5", &[0.53, 0.28]),
        row("l", "exp:l:2,5,0.75", &[0.89, 0.60]),
        row("t", "exp:t", &[0.75, 0.45]),
        row("v", "exp:v", &[0.67, 0.65]),
        row("w", "exp:w", &[0.97, 0.98]),
    ];
    Layout {
        id: TableId::T4,
        n: 100,
        tests: vec![TestKind::Composite, TestKind::KsExp],
        params: ModelParams { d_range: (2, 10), ..ModelParams::default() },
        blocks: vec![NullBlock { null: NullDensity::Exponential, rows, level_reference: vec![0.053, 0.051] }],
    }
}

pub fn layout(id: TableId) -> Layout {
    match id {
        TableId::T1 | TableId::T2 => uniformity(id),
        TableId::T3 => normality(),
        TableId::T4 => exponentiality(),
    }
}

/// Monte Carlo budgets scaled from the full-size defaults, with floors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaledBudgets {
    pub calib: Budgets,
    pub reps_power: usize,
    pub reps_level: usize,
}

impl ScaledBudgets {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(invalid(format!("scale {scale} must lie in (0, 1]")));
        }
        let at = |full: f64, floor: usize| ((full * scale).round() as usize).max(floor);
        let b = at(20_000.0, 1000);
        Ok(ScaledBudgets {
            calib: Budgets { b1: b, b2: b },
            reps_power: at(5000.0, 200),
            reps_level: at(20_000.0, 1000),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub table: String,
    pub null: String,
    pub block: String,
    pub alternative: String,
    pub test: String,
    pub estimate: f64,
    pub std_error: f64,
    pub reps: usize,
    pub reference: f64,
}

pub const CSV_HEADER: &str = "table,null,block,alternative,test,estimate,std_error,reps,reference";

fn config_for(layout: &Layout, test: TestKind, null: NullDensity, seed: u64, budgets: ScaledBudgets) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(test, null, layout.n);
    c.model_params = layout.params.clone();
    c.calib = budgets.calib;
    c.reps_power = budgets.reps_power;
    c.reps_level = budgets.reps_level;
    c.seed = seed;
    c
}

/// Every cell of a table, in layout order (rows, then the levels row, per null).
pub fn run_table(id: TableId, seed: u64, scale: f64) -> Result<Vec<TableCell>> {
    let budgets = ScaledBudgets::new(scale)?;
    let layout = layout(id);
    let mut cache: HashMap<String, CalibratedTest> = HashMap::new();
    let mut cells = Vec::new();
    for block in &layout.blocks {
        let mut tests = Vec::with_capacity(layout.tests.len());
        for &kind in &layout.tests {
            let config = config_for(&layout, kind, block.null, seed, budgets);
            let key = config.calibration_key();
            if !cache.contains_key(&key) {
                cache.insert(key.clone(), calibrate_for(&config)?);
            }
            tests.push((config, cache[&key].clone()));
        }
        let cell = |block_name: &str, alt: String, kind: TestKind, k: usize, reps: usize, reference: f64| {
            let p = k as f64 / reps as f64;
            TableCell {
                table: id.to_string(),
                null: block.null.label(),
                block: block_name.to_string(),
                alternative: alt,
                test: kind.name().to_string(),
                estimate: p,
                std_error: (p * (1.0 - p) / reps as f64).sqrt(),
                reps,
                reference,
            }
        };
        for r in &block.rows {
            for ((config, test), &reference) in tests.iter().zip(&r.reference) {
                let k = count_rejections(
                    test,
                    &r.alternative,
                    layout.n,
                    config.reps_power,
                    seed,
                    &power_label(&r.alternative),
                )?;
                cells.push(cell(r.block, r.alternative.id(), config.test, k, config.reps_power, reference));
            }
        }
        for ((config, test), &reference) in tests.iter().zip(&block.level_reference) {
            let level = estimate_level(config, test)?;
            let k = (level.estimate * level.reps as f64).round() as usize;
            cells.push(cell("levels", "null".into(), config.test, k, level.reps, reference));
        }
    }
    Ok(cells)
}

pub fn cells_to_csv(cells: &[TableCell]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
        w.write_record(CSV_HEADER.split(','))?;
        for c in cells {
            w.write_record([
                c.table.clone(),
                c.null.clone(),
                c.block.clone(),
                c.alternative.clone(),
                c.test.clone(),
                format!("{:.4}", c.estimate),
                format!("{:.4}", c.std_error),
                c.reps.to_string(),
                format!("{:.3}", c.reference),
            ])?;
        }
        w.flush()?;
        Ok(())
    };
    write(&mut w).expect("writing to memory");
    String::from_utf8(w.into_inner().expect("flushed")).expect("utf-8")
}

pub fn reproduce_table(id: TableId, seed: u64, scale: f64) -> Result<String> {
    Ok(cells_to_csv(&run_table(id, seed, scale)?))
}
