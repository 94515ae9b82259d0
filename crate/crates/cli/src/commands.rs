use esoc_core::dynamics::{
    curve_peak, marcus_rate, neq_population_with, polarization_of_system, polarization_run, sweep, temp_sweep,
    EqRateCurve, PhaseConvention, SweepSurface,
};
use esoc_core::model::{beta_from_kelvin, kelvin_from_beta, langevin_system, BathConfig, LangevinSpec};
use nalgebra::DVector;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::checks::{run_checks, Bound};
use crate::config::{Model, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{Field, RunOutput, Table};

/// A finished command; `failure` is reported after the outputs are written.
pub struct Completed {
    pub output: RunOutput,
    pub failure: Option<CliError>,
    /// Extra text for the terminal.
    pub report: Option<String>,
}

impl From<RunOutput> for Completed {
    fn from(output: RunOutput) -> Self {
        Self {
            output,
            failure: None,
            report: None,
        }
    }
}

fn require_derived_phase(cfg: &RunConfig, command: &str) -> CliResult<()> {
    if cfg.phase_convention != PhaseConvention::Derived {
        return Err(CliError::Validation(format!(
            "{command} always uses the derived phase convention; drop numerics.phase_convention"
        )));
    }
    Ok(())
}

pub fn eq_rate(cfg: &RunConfig) -> CliResult<Completed> {
    let sys = cfg.model.system()?;
    let beta = cfg.model.beta();
    let curve = EqRateCurve::new(&sys, beta, &cfg.grid)?;
    let trace = curve.population(sys.delta_g);
    let mut table = Table::new("", &["t", "p_g", "c_re", "c_im"]);
    for ((t, p), c) in trace.times.iter().zip(&trace.population).zip(curve.correlation()) {
        table.push(vec![(*t).into(), (*p).into(), c.re.into(), c.im.into()]);
    }
    let reorganization = sys.reorganization_energy();
    let rate = curve.rate(sys.delta_g);
    let summary = json!({
        "delta_g": sys.delta_g,
        "reorganization_energy": reorganization,
        "rate": rate.as_ref().ok(),
        "rate_error": rate.as_ref().err().map(|e| e.to_string()),
        "marcus_rate": marcus_rate(sys.v.norm(), reorganization, sys.delta_g, 1.0 / beta),
        "final_pg": trace.final_value(),
    });
    Ok(Completed {
        output: RunOutput {
            tables: vec![table],
            summary,
        },
        failure: rate.err().map(CliError::from),
        report: None,
    })
}

/// `(label, φ, |W|)` for every requested curve.
fn marcus_curves(cfg: &RunConfig) -> Vec<(String, Option<f64>, f64)> {
    let m = &cfg.marcus;
    let phis: Vec<Option<f64>> = if m.phi_values.is_empty() {
        vec![None]
    } else {
        m.phi_values.iter().copied().map(Some).collect()
    };
    phis.iter()
        .flat_map(|&phi| {
            m.w_values.iter().map(move |&w| {
                let label = match phi {
                    Some(p) => format!("phi_{p:.4}_w_{w}"),
                    None => format!("w_{w}"),
                };
                (label, phi, w)
            })
        })
        .collect()
}

pub fn marcus_curve(cfg: &RunConfig) -> CliResult<Completed> {
    let beta = cfg.model.beta();
    let delta_gs = cfg.marcus.delta_gs();
    let curves = marcus_curves(cfg);
    let mut e_r = None;
    let mut columns: Vec<Vec<esoc_core::Result<f64>>> = Vec::new();
    for (_, phi, w) in &curves {
        let sys = match (&cfg.model, phi) {
            (Model::Langevin(s), Some(phi)) => langevin_system(&LangevinSpec {
                phi: *phi,
                w_mag: *w,
                ..*s
            })?,
            _ => {
                let sys = cfg.model.system()?;
                let norm = sys.w.norm();
                if norm == 0.0 && *w != 0.0 {
                    return Err(CliError::Validation("raw model has W = 0, so |W| cannot be rescaled".into()));
                }
                let w_vec = if norm == 0.0 { DVector::zeros(sys.dim()) } else { &sys.w * (*w / norm) };
                sys.with_w(w_vec)
            }
        };
        e_r.get_or_insert(sys.reorganization_energy());
        let curve = EqRateCurve::new(&sys, beta, &cfg.grid)?;
        columns.push(delta_gs.par_iter().map(|&dg| curve.rate(dg)).collect());
    }
    let e_r = e_r.expect("at least one curve");
    let v = match &cfg.model {
        Model::Langevin(s) => s.v.norm(),
        Model::Raw(r) => r.v.hypot(r.v_im),
    };

    let mut header = vec!["delta_g".to_string(), "marcus_classical".to_string()];
    header.extend(curves.iter().map(|(l, ..)| format!("rate_{l}")));
    header.extend(curves.iter().map(|(l, ..)| format!("error_{l}")));
    let mut table = Table::with_columns("", header);
    for (k, &dg) in delta_gs.iter().enumerate() {
        let mut row: Vec<Field> = vec![dg.into(), marcus_rate(v, e_r, dg, 1.0 / beta).into()];
        row.extend(columns.iter().map(|c| Field::from(c[k].as_ref().ok().copied())));
        row.extend(
            columns
                .iter()
                .map(|c| c[k].as_ref().err().map_or(Field::Empty, |e| e.to_string().into())),
        );
        table.push(row);
    }

    let peaks: Vec<Option<f64>> = columns
        .iter()
        .map(|c| {
            let y: Vec<f64> = c.iter().map(|r| *r.as_ref().unwrap_or(&f64::NAN)).collect();
            curve_peak(&delta_gs, &y)
        })
        .collect();
    let curve_meta: Vec<Value> = curves
        .iter()
        .zip(&peaks)
        .map(|((label, phi, w), peak)| json!({ "label": label, "phi": phi, "w": w, "peak_delta_g": peak }))
        .collect();
    // shift of each coupled curve's peak relative to the uncoupled curve at the same φ
    let mut shifts = Vec::new();
    for (i, (_, phi, w)) in curves.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let base = curves.iter().position(|(_, p, w0)| p == phi && *w0 == 0.0);
        if let (Some(b), Some(peak)) = (base, peaks[i]) {
            if let Some(base_peak) = peaks[b] {
                shifts.push(json!({ "phi": phi, "w": w, "peak_shift": peak - base_peak }));
            }
        }
    }
    let failures: usize = columns.iter().flatten().filter(|r| r.is_err()).count();
    Ok(RunOutput {
        tables: vec![table],
        summary: json!({
            "reorganization_energy": e_r,
            "curves": curve_meta,
            "peak_shifts": shifts,
            "failed_points": failures,
        }),
    }
    .into())
}

pub fn neq_population(cfg: &RunConfig) -> CliResult<Completed> {
    let sys = cfg.model.system()?;
    let trace = neq_population_with(&sys, cfg.model.beta(), &cfg.grid, cfg.phase_convention)?;
    let mut table = Table::new("", &["t", "p_g"]);
    for (t, p) in trace.times.iter().zip(&trace.population) {
        table.push(vec![(*t).into(), (*p).into()]);
    }
    Ok(RunOutput {
        tables: vec![table],
        summary: json!({ "final_pg": trace.final_value() }),
    }
    .into())
}

pub fn polarization(cfg: &RunConfig) -> CliResult<Completed> {
    let sys = cfg.model.system()?;
    let r = polarization_of_system(&sys, cfg.model.beta(), &cfg.grid, cfg.phase_convention)?;
    let mut table = Table::new("", &["t", "p_up", "p_down", "chi", "pg"]);
    for k in 0..r.times().len() {
        table.push(vec![
            r.times()[k].into(),
            r.up.population[k].into(),
            r.down.population[k].into(),
            r.chi[k].into(),
            r.pg[k].into(),
        ]);
    }
    Ok(RunOutput {
        tables: vec![table],
        summary: json!({ "final_chi": r.final_chi(), "final_pg": r.final_pg() }),
    }
    .into())
}

/// Long-format surface table plus its `χ = 0` isolines.
fn surface_tables(surface: &SweepSurface, with_temperature: bool) -> (Vec<Table>, Value) {
    let (rn, cn) = (surface.rows.kind.name(), surface.cols.kind.name());
    let mut header = vec![rn, cn];
    if with_temperature {
        header.push("temperature_k");
    }
    header.extend(["chi", "pg", "error"]);
    let mut table = Table::new("", &header);
    let nc = surface.cols.values.len();
    for (k, cell) in surface.cells.iter().enumerate() {
        let (r, c) = (surface.rows.values[k / nc], surface.cols.values[k % nc]);
        let mut row: Vec<Field> = vec![r.into(), c.into()];
        if with_temperature {
            row.push(kelvin_from_beta(c).into());
        }
        row.push(cell.chi().into());
        row.push(cell.pg().into());
        row.push(match cell {
            esoc_core::dynamics::Cell::Failed(e) => e.clone().into(),
            _ => Field::Empty,
        });
        table.push(row);
    }
    let start = |a: &str| format!("{a}_start");
    let end = |a: &str| format!("{a}_end");
    let mut iso = Table::with_columns("isolines", vec![start(rn), start(cn), end(rn), end(cn)]);
    let segments = surface.chi_isolines();
    for s in &segments {
        iso.push(vec![s.start.0.into(), s.start.1.into(), s.end.0.into(), s.end.1.into()]);
    }
    let chis: Vec<f64> = surface.cells.iter().filter_map(|c| c.chi()).collect();
    let summary = json!({
        "rows": surface.rows.values.len(),
        "cols": nc,
        "failed_cells": surface.failures(),
        "chi_min": chis.iter().copied().reduce(f64::min),
        "chi_max": chis.iter().copied().reduce(f64::max),
        "isoline_segments": segments.len(),
    });
    (vec![table, iso], summary)
}

pub fn sweep_cmd(cfg: &RunConfig) -> CliResult<Completed> {
    require_derived_phase(cfg, "sweep")?;
    let spec = cfg.model.langevin()?;
    let surface = sweep(spec, &cfg.sweep.phi, &cfg.sweep.eta, &cfg.grid);
    let (tables, summary) = surface_tables(&surface, false);
    Ok(RunOutput { tables, summary }.into())
}

pub fn temp_sweep_cmd(cfg: &RunConfig) -> CliResult<Completed> {
    require_derived_phase(cfg, "temp-sweep")?;
    let spec = cfg.model.langevin()?;
    let betas: Vec<f64> = cfg.sweep.temperature_k.iter().map(|&t| beta_from_kelvin(t)).collect();
    let surface = temp_sweep(spec, &cfg.sweep.phi, &betas, &cfg.grid);
    let (tables, mut summary) = surface_tables(&surface, true);
    // temperature of largest |χ| for every φ
    let nc = betas.len();
    let maxima: Vec<Value> = cfg
        .sweep
        .phi
        .iter()
        .enumerate()
        .map(|(i, phi)| {
            let best = (0..nc)
                .filter_map(|j| surface.get(i, j).chi().map(|c| (j, c.abs())))
                .max_by(|a, b| a.1.total_cmp(&b.1));
            json!({
                "phi": phi,
                "temperature_k_of_max_abs_chi": best.map(|(j, _)| cfg.sweep.temperature_k[j]),
                "max_abs_chi": best.map(|(_, c)| c),
            })
        })
        .collect();
    summary["maxima"] = Value::Array(maxima);
    Ok(RunOutput { tables, summary }.into())
}

pub fn converge_bath(cfg: &RunConfig) -> CliResult<Completed> {
    require_derived_phase(cfg, "converge-bath")?;
    let spec = cfg.model.langevin()?;
    let study = &cfg.bath_convergence;
    if study.modes.is_empty() || study.cutoffs.is_empty() {
        return Err(CliError::Validation("bath_convergence needs modes and cutoffs".into()));
    }
    let combos: Vec<BathConfig> = study
        .cutoffs
        .iter()
        .flat_map(|&cutoff| {
            study.modes.iter().map(move |&modes_per_bath| BathConfig {
                modes_per_bath,
                cutoff,
            })
        })
        .collect();
    let results: Vec<esoc_core::Result<(f64, f64)>> = combos
        .par_iter()
        .map(|&bath| {
            let r = polarization_run(&LangevinSpec { bath, ..*spec }, &cfg.grid)?;
            Ok((r.final_chi(), r.final_pg()))
        })
        .collect();
    let mut table = Table::new("", &["modes_per_bath", "cutoff", "chi", "pg", "error"]);
    for (bath, r) in combos.iter().zip(&results) {
        let ok = r.as_ref().ok();
        table.push(vec![
            bath.modes_per_bath.into(),
            bath.cutoff.into(),
            ok.map(|v| v.0).into(),
            ok.map(|v| v.1).into(),
            r.as_ref().err().map_or(Field::Empty, |e| e.to_string().into()),
        ]);
    }
    // relative change of P_g when the mode count is doubled at fixed cutoff
    let mut doublings = Vec::new();
    for (i, a) in combos.iter().enumerate() {
        let twin = combos
            .iter()
            .position(|b| b.cutoff == a.cutoff && b.modes_per_bath == 2 * a.modes_per_bath);
        if let (Some(j), Ok((_, pa)), Some(Ok((_, pb)))) = (twin, &results[i], twin.map(|j| &results[j])) {
            doublings.push(json!({
                "cutoff": a.cutoff,
                "modes_per_bath": a.modes_per_bath,
                "doubled": combos[j].modes_per_bath,
                "relative_pg_change": (pb - pa).abs() / pa.abs(),
            }));
        }
    }
    Ok(RunOutput {
        tables: vec![table],
        summary: json!({
            "failed_runs": results.iter().filter(|r| r.is_err()).count(),
            "mode_doublings": doublings,
        }),
    }
    .into())
}

pub fn oracle_check() -> CliResult<Completed> {
    let outcomes = run_checks();
    let mut table = Table::new("", &["check", "value", "bound", "threshold", "status", "error"]);
    for o in &outcomes {
        table.push(vec![
            o.name.to_string().into(),
            o.value.into(),
            match o.bound {
                Bound::Below => "below",
                Bound::Above => "above",
            }
            .to_string()
            .into(),
            o.threshold.into(),
            if o.passed() { "PASS" } else { "FAIL" }.to_string().into(),
            o.error.clone().map_or(Field::Empty, Field::Text),
        ]);
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    Ok(Completed {
        output: RunOutput {
            tables: vec![table],
            summary: json!({ "checks": outcomes.len(), "failed": failed }),
        },
        failure: (failed > 0).then_some(CliError::ChecksFailed {
            failed,
            total: outcomes.len(),
        }),
        report: Some(crate::checks::render_table(&outcomes)),
    })
}
