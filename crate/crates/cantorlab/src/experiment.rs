//! The batch runner: one row of distances and optimized bound per `N`.

use std::io::Write;

use cantorlab_core::empirical::{
    kolmogorov, star_discrepancy, wasserstein1, Bracket, EmpiricalCdf, ReferenceCdf, Uniform, W1,
};
use cantorlab_core::limitlaw::{limit_cdf_conv, CfProduct, GridCdf};
use cantorlab_core::window::{
    predicted_rate, resolve_regime, Regime, WindowBoundReport, WindowModel,
};
use cantorlab_core::{CantorBase, DigitMap, Error as CoreError};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ReferenceSpec};
use crate::error::LabResult;

pub const CSV_COLUMNS: [&str; 16] = [
    "N",
    "L",
    "h_star",
    "T_star",
    "regime",
    "bridge",
    "tau1",
    "tau2",
    "qf",
    "g",
    "total",
    "dk_lo",
    "dk_hi",
    "w1",
    "dstar",
    "predicted_rate",
];

#[derive(Debug, Clone)]
pub enum Reference {
    Uniform(Uniform),
    Grid(GridCdf),
}

impl Reference {
    pub fn build(
        spec: ReferenceSpec,
        map: &DigitMap,
        base: &CantorBase,
        cfg: &ExperimentConfig,
    ) -> LabResult<Self> {
        Ok(match spec {
            ReferenceSpec::Uniform { a, b } => Reference::Uniform(Uniform::new(a, b)?),
            ReferenceSpec::Grid => Reference::Grid(limit_cdf_conv(map, base, &cfg.grid)?),
        })
    }

    pub fn as_dyn(&self) -> &(dyn ReferenceCdf + Sync) {
        match self {
            Reference::Uniform(u) => u,
            Reference::Grid(g) => g,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub report: WindowBoundReport,
    pub dk: Bracket,
    pub w1: W1,
    /// Star discrepancy of the values, for maps with values in `[0, 1)`.
    pub dstar: Option<f64>,
    pub predicted_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CfPoint {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    /// Truncation bound, when the map has tail metadata.
    pub err: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub regime: Regime,
    /// Knot count and error terms of the grid reference, if one was built.
    pub grid: Option<GridSummary>,
    pub rows: Vec<Row>,
    pub cf_trace: Option<Vec<CfPoint>>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSummary {
    pub knots: usize,
    pub pitch: f64,
    pub eps_x: f64,
    pub eps_p: f64,
    pub levels: usize,
}

impl ExperimentResult {
    /// Some row lacks `tau1` (no tail metadata), so its total is conditional.
    pub fn conditional(&self) -> bool {
        self.rows.iter().any(|r| r.report.conditional)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> LabResult<ExperimentResult> {
    let base = cfg.validate()?;
    let map = &cfg.map;
    let ns = cfg.n.values()?;
    if let Some(&n) = ns.iter().find(|&&n| n > cfg.enumeration_cap) {
        return Err(CoreError::ResourceLimit {
            requested: n,
            cap: cfg.enumeration_cap,
        }
        .into());
    }
    let l_max = ns.iter().map(|&n| base.length(n)).max().unwrap_or(0);
    let model = WindowModel::new(map, &base, l_max)?;
    let regime = resolve_regime(cfg.regime.fixed(), cfg.rho_inf, model.mu3_vanishes(l_max)?);
    info!("regime {regime}, L_max {l_max}, {} sample sizes", ns.len());

    let reference = Reference::build(cfg.reference, map, &base, cfg)?;
    let grid = match &reference {
        Reference::Grid(g) => {
            info!(
                "grid reference: {} knots, eps_x {:e}, eps_p {:e}",
                g.len(),
                g.eps_x,
                g.eps_p
            );
            Some(GridSummary {
                knots: g.len(),
                pitch: g.pitch,
                eps_x: g.eps_x,
                eps_p: g.eps_p,
                levels: g.levels,
            })
        }
        Reference::Uniform(_) => None,
    };
    let r = reference.as_dyn();

    let rows = ns
        .par_iter()
        .map(|&n| -> LabResult<Row> {
            let ecdf = EmpiricalCdf::enumerate(map, &base, n, cfg.enumeration_cap)?;
            let dk = kolmogorov(&ecdf, r);
            let w1 = wasserstein1(&ecdf, r);
            let report = model.optimize_window(n, regime, cfg.rho_inf, r, cfg.shape)?;
            let dstar = match map {
                DigitMap::RadicalInverse => Some(star_discrepancy(ecdf.samples())?),
                _ => None,
            };
            let predicted_rate = cfg.rate.and_then(|f| predicted_rate(f, n).ok());
            info!(
                "N = {n}: h* = {}, total {:e}, d_K <= {:e}",
                report.h, report.total, dk.hi
            );
            Ok(Row {
                report,
                dk,
                w1,
                dstar,
                predicted_rate,
            })
        })
        .collect::<LabResult<Vec<_>>>()?;

    let cf_trace = match &cfg.cf_trace {
        Some(tr) => {
            let cf = CfProduct::new(map, &base, tr.depth)?;
            Some(
                tr.t.iter()
                    .map(|&t| {
                        let (v, err) = cf.eval(t);
                        CfPoint {
                            t,
                            re: v.re,
                            im: v.im,
                            err,
                        }
                    })
                    .collect(),
            )
        }
        None => None,
    };

    Ok(ExperimentResult {
        config: cfg.clone(),
        regime,
        grid,
        rows,
        cf_trace,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Row {
    pub fn csv_record(&self) -> [String; 16] {
        let r = &self.report;
        [
            r.n.to_string(),
            r.l.to_string(),
            r.h.to_string(),
            opt(r.t),
            r.regime.to_string(),
            r.bridge.to_string(),
            opt(r.tau1),
            r.tau2.to_string(),
            opt(r.qf),
            r.g.to_string(),
            r.total.to_string(),
            self.dk.lo.to_string(),
            self.dk.hi.to_string(),
            self.w1.value.to_string(),
            opt(self.dstar),
            opt(self.predicted_rate),
        ]
    }
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> LabResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.write_record(row.csv_record())?;
    }
    w.flush()
        .map_err(|e| crate::error::LabError::io("csv output", e))?;
    Ok(())
}

pub fn write_json<W: Write>(result: &ExperimentResult, mut out: W) -> LabResult<()> {
    serde_json::to_writer_pretty(&mut out, result)?;
    writeln!(out).map_err(|e| crate::error::LabError::io("json output", e))?;
    Ok(())
}
