//! Plain-text output: CSV tables with 17 significant digits and JSON
//! documents for maps and CPTP reports.

use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::error::Result;
use crate::kernels::{CorrelationSet, KernelTable};
use crate::model::Model;
use crate::reduced::{reduced_density, ChoiMatrix, CptpReport, DynamicalMap};
use crate::solvers::{AmplitudeTrajectory, Trajectory};
use crate::spinboson::{constants_of_motion, is_spinboson_shape};

/// A header plus numeric rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Round-trip formatting: 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

impl CsvTable {
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

fn push_complex(header: &mut Vec<String>, name: String) {
    header.push(format!("re_{name}"));
    header.push(format!("im_{name}"));
}

fn push_values(row: &mut Vec<f64>, z: C64) {
    row.push(z.re);
    row.push(z.im);
}

/// `t`, `c_i`, `ρ_ij` (row-major), the norm, and `p0, p1` for
/// spin-boson shaped models.
pub fn trajectory_table(model: &Model, trajectory: &Trajectory) -> Result<CsvTable> {
    let d = model.dim();
    let mut header = vec!["t".to_string()];
    for i in 0..d {
        push_complex(&mut header, format!("c{i}"));
    }
    for i in 0..d {
        for j in 0..d {
            push_complex(&mut header, format!("rho{i}{j}"));
        }
    }
    header.push("norm".into());
    let constants = if is_spinboson_shape(model) {
        header.push("p0".into());
        header.push("p1".into());
        Some(constants_of_motion(model, trajectory)?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(trajectory.states.len());
    for (k, s) in trajectory.states.iter().enumerate() {
        let rho = reduced_density(model, s)?;
        let mut row = vec![s.t];
        s.c.iter().for_each(|&z| push_values(&mut row, z));
        for i in 0..d {
            for j in 0..d {
                push_values(&mut row, rho.rho[(i, j)]);
            }
        }
        row.push(s.norm_sqr(model.weights()));
        if let Some(com) = &constants {
            row.push(com.p0[k]);
            row.push(com.p1[k]);
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

/// `t` and `c_i` only, for runs without mode reconstruction.
pub fn amplitude_table(run: &AmplitudeTrajectory) -> CsvTable {
    let d = run.amplitudes.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    for i in 0..d {
        push_complex(&mut header, format!("c{i}"));
    }
    let rows = run
        .times
        .iter()
        .zip(&run.amplitudes)
        .map(|(&t, c)| {
            let mut row = vec![t];
            c.iter().for_each(|&z| push_values(&mut row, z));
            row
        })
        .collect();
    CsvTable { header, rows }
}

/// `t`, `M_kl` row-major, then `G_k`.
pub fn kernel_table(table: &KernelTable) -> CsvTable {
    let d = table.memory.first().map_or(0, DMatrix::nrows);
    let mut header = vec!["t".to_string()];
    for k in 0..d {
        for l in 0..d {
            push_complex(&mut header, format!("M{k}{l}"));
        }
    }
    for k in 0..d {
        push_complex(&mut header, format!("G{k}"));
    }
    let rows = table
        .times
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let mut row = vec![t];
            let m = &table.memory[ti];
            for k in 0..d {
                for l in 0..d {
                    push_values(&mut row, m[(k, l)]);
                }
            }
            table.inhomogeneity[ti].iter().for_each(|&z| push_values(&mut row, z));
            row
        })
        .collect();
    CsvTable { header, rows }
}

/// `t` and the full correlation matrix row-major; indices `0..d²` are the
/// pairs `(m, n)` with `x = m·d + n`, the remaining `d` are levels.
pub fn correlation_table(corr: &CorrelationSet) -> CsvTable {
    let size = corr.table(0).nrows();
    let mut header = vec!["t".to_string()];
    for x in 0..size {
        for y in 0..size {
            push_complex(&mut header, format!("C{x}_{y}"));
        }
    }
    let rows = corr
        .times()
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let mut row = vec![t];
            let m = corr.table(ti);
            for x in 0..size {
                for y in 0..size {
                    push_values(&mut row, m[(x, y)]);
                }
            }
            row
        })
        .collect();
    CsvTable { header, rows }
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &DMatrix<C64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect()))
            .collect(),
    )
}

/// `S[j][m][i][n]` as nested `[re, im]` pairs, plus `L` and the Choi matrix.
pub fn map_json(map: &DynamicalMap, choi: &ChoiMatrix) -> Value {
    let d = map.dim();
    let s: Vec<Value> = (0..d)
        .map(|j| {
            Value::Array(
                (0..d)
                    .map(|m| {
                        Value::Array(
                            (0..d)
                                .map(|i| {
                                    Value::Array(
                                        (0..d).map(|n| complex_json(map.s.get(j, m, i, n))).collect(),
                                    )
                                })
                                .collect(),
                        )
                    })
                    .collect(),
            )
        })
        .collect();
    json!({
        "t": map.t,
        "l": matrix_json(&map.l),
        "s": s,
        "choi": matrix_json(&choi.matrix),
    })
}

pub fn cptp_json(reports: &[CptpReport], maps: &[(DynamicalMap, ChoiMatrix)]) -> Value {
    json!({
        "all_cptp": reports.iter().all(|r| r.verdict),
        "reports": reports,
        "maps": maps.iter().map(|(m, c)| map_json(m, c)).collect::<Vec<_>>(),
    })
}
