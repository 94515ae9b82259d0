use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::polarization::polarization_run;
use super::TimeGrid;
use crate::error::Result;
use crate::model::{BathConfig, LangevinSpec};

/// Which spec field a sweep axis overrides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisKind {
    Phi,
    Eta,
    Beta,
}

impl AxisKind {
    pub fn name(self) -> &'static str {
        match self {
            AxisKind::Phi => "phi",
            AxisKind::Eta => "eta",
            AxisKind::Beta => "beta",
        }
    }

    fn apply(self, spec: &mut LangevinSpec, value: f64) {
        match self {
            AxisKind::Phi => spec.phi = value,
            AxisKind::Eta => spec.eta = value,
            AxisKind::Beta => spec.beta = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub kind: AxisKind,
    pub values: Vec<f64>,
}

/// One sweep cell: either both headline numbers or the reason it failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Value { chi: f64, pg: f64 },
    Failed(String),
}

impl Cell {
    pub fn chi(&self) -> Option<f64> {
        match self {
            Cell::Value { chi, .. } => Some(*chi),
            Cell::Failed(_) => None,
        }
    }

    pub fn pg(&self) -> Option<f64> {
        match self {
            Cell::Value { pg, .. } => Some(*pg),
            Cell::Failed(_) => None,
        }
    }
}

/// Final `χ` and `P_g` over a rectangular parameter grid, row-major in `rows`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSurface {
    pub rows: Axis,
    pub cols: Axis,
    pub cells: Vec<Cell>,
    pub spec: LangevinSpec,
}

/// A straight piece of the `χ = 0` contour, in axis coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: (f64, f64),
    pub end: (f64, f64),
}

impl SweepSurface {
    pub fn get(&self, i: usize, j: usize) -> &Cell {
        &self.cells[i * self.cols.values.len() + j]
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| matches!(c, Cell::Failed(_))).count()
    }

    /// Zero-crossings of `χ` by marching squares; cells touching a failure are skipped.
    pub fn chi_isolines(&self) -> Vec<Segment> {
        let (nr, nc) = (self.rows.values.len(), self.cols.values.len());
        let mut out = Vec::new();
        if nr < 2 || nc < 2 {
            return out;
        }
        for i in 0..nr - 1 {
            for j in 0..nc - 1 {
                let corners = [(i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)];
                let vals: Option<Vec<f64>> = corners.iter().map(|&(a, b)| self.get(a, b).chi()).collect();
                let Some(vals) = vals else { continue };
                let point = |k: usize| (self.rows.values[corners[k].0], self.cols.values[corners[k].1]);
                let mut crossings = Vec::with_capacity(4);
                for k in 0..4 {
                    let l = (k + 1) % 4;
                    let (a, b) = (vals[k], vals[l]);
                    if (a > 0.0) != (b > 0.0) {
                        let s = a / (a - b);
                        let (pa, pb) = (point(k), point(l));
                        crossings.push((pa.0 + s * (pb.0 - pa.0), pa.1 + s * (pb.1 - pa.1)));
                    }
                }
                match crossings.len() {
                    2 => out.push(Segment {
                        start: crossings[0],
                        end: crossings[1],
                    }),
                    4 => {
                        // saddle: resolve with the cell-centre average
                        let centre = vals.iter().sum::<f64>() / 4.0;
                        let (a, b) = if (centre > 0.0) == (vals[0] > 0.0) { (1, 3) } else { (0, 2) };
                        out.push(Segment {
                            start: crossings[a],
                            end: crossings[(a + 1) % 4],
                        });
                        out.push(Segment {
                            start: crossings[b],
                            end: crossings[(b + 1) % 4],
                        });
                    }
                    _ => {}
                }
            }
        }
        out
    }
}

/// Polarization over every `(row, col)` pair; failures are recorded, never propagated.
pub fn sweep_axes(spec: &LangevinSpec, rows: Axis, cols: Axis, grid: &TimeGrid) -> SweepSurface {
    let nc = cols.values.len();
    let cells = (0..rows.values.len() * nc)
        .into_par_iter()
        .map(|k| {
            let mut cell_spec = *spec;
            rows.kind.apply(&mut cell_spec, rows.values[k / nc]);
            cols.kind.apply(&mut cell_spec, cols.values[k % nc]);
            match polarization_run(&cell_spec, grid) {
                Ok(r) => Cell::Value {
                    chi: r.final_chi(),
                    pg: r.final_pg(),
                },
                Err(e) => Cell::Failed(e.to_string()),
            }
        })
        .collect();
    SweepSurface {
        rows,
        cols,
        cells,
        spec: *spec,
    }
}

pub fn sweep(spec: &LangevinSpec, phi_axis: &[f64], eta_axis: &[f64], grid: &TimeGrid) -> SweepSurface {
    sweep_axes(
        spec,
        Axis {
            kind: AxisKind::Phi,
            values: phi_axis.to_vec(),
        },
        Axis {
            kind: AxisKind::Eta,
            values: eta_axis.to_vec(),
        },
        grid,
    )
}

pub fn temp_sweep(spec: &LangevinSpec, phi_axis: &[f64], beta_axis: &[f64], grid: &TimeGrid) -> SweepSurface {
    sweep_axes(
        spec,
        Axis {
            kind: AxisKind::Phi,
            values: phi_axis.to_vec(),
        },
        Axis {
            kind: AxisKind::Beta,
            values: beta_axis.to_vec(),
        },
        grid,
    )
}

/// Headline numbers for one bath discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathPoint {
    pub modes_per_bath: usize,
    pub cutoff: f64,
    pub chi: f64,
    pub pg: f64,
}

pub fn bath_convergence(spec: &LangevinSpec, modes: &[usize], grid: &TimeGrid) -> Result<Vec<BathPoint>> {
    modes
        .iter()
        .map(|&m| {
            let bath = BathConfig {
                modes_per_bath: m,
                ..spec.bath
            };
            let r = polarization_run(&LangevinSpec { bath, ..*spec }, grid)?;
            Ok(BathPoint {
                modes_per_bath: m,
                cutoff: bath.cutoff,
                chi: r.final_chi(),
                pg: r.final_pg(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(values: Vec<f64>, n: usize) -> SweepSurface {
        SweepSurface {
            rows: Axis {
                kind: AxisKind::Phi,
                values: (0..n).map(|k| k as f64).collect(),
            },
            cols: Axis {
                kind: AxisKind::Eta,
                values: (0..n).map(|k| k as f64).collect(),
            },
            cells: values.into_iter().map(|chi| Cell::Value { chi, pg: 0.0 }).collect(),
            spec: LangevinSpec::default(),
        }
    }

    #[test]
    fn isoline_of_a_plane() {
        // χ = x − 1.5: one vertical line at x = 1.5 crossing every column cell
        let n = 4;
        let s = synthetic((0..n * n).map(|k| (k / n) as f64 - 1.5).collect(), n);
        let segs = s.chi_isolines();
        assert_eq!(segs.len(), n - 1);
        for seg in segs {
            assert!((seg.start.0 - 1.5).abs() < 1e-12 && (seg.end.0 - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn failed_cells_are_skipped() {
        let n = 3;
        let mut s = synthetic((0..n * n).map(|k| (k % n) as f64 - 0.5).collect(), n);
        s.cells[4] = Cell::Failed("caustic".into());
        assert!(s.chi_isolines().is_empty());
        assert_eq!(s.failures(), 1);
    }

    #[test]
    fn smoke_sweep() {
        let spec = LangevinSpec {
            bath: BathConfig {
                modes_per_bath: 0,
                cutoff: 0.0,
            },
            ..Default::default()
        };
        let grid = TimeGrid::new(2000.0, 20).unwrap();
        let s = sweep(&spec, &[0.0, 0.5], &[0.3, 1.2], &grid);
        assert_eq!(s.cells.len(), 4);
        assert_eq!(s.failures(), 0);
    }
}
