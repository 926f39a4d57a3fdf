//! CSV artifacts. Floats are written with 17 significant digits so that
//! identical runs give identical bytes and every value round-trips.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::curve::CurvePoint;
use crate::dynamics::TrajectorySummary;
use crate::error::{Error, Result};
use crate::fields::{reconstruct_complex, ComplexField, HydroField};

pub const FIELD_HEADER: [&str; 5] = ["x", "eta", "w", "re_u", "im_u"];
pub const CURVE_HEADER: [&str; 6] = ["q", "E", "c_est", "residual", "converged", "iterations"];
pub const TRAJECTORY_HEADER: [&str; 5] = ["t", "E", "p", "min_modulus", "dist"];
pub const DISPERSION_HEADER: [&str; 2] = ["xi", "omega"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(input: R, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    let got: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if got != header {
        return Err(Error::Parse(format!("expected header {}, got {}", header.join(","), got.join(","))));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub x: f64,
    pub eta: f64,
    /// absent where |u| = 0
    pub w: Option<f64>,
    pub re_u: f64,
    pub im_u: f64,
}

pub fn field_rows_hydro(h: &HydroField) -> Result<Vec<FieldRow>> {
    let c = reconstruct_complex(h)?;
    Ok((0..h.eta.len())
        .map(|j| FieldRow {
            x: h.grid.position(j),
            eta: h.eta[j],
            w: Some(h.w[j]),
            re_u: c.values[j].re,
            im_u: c.values[j].im,
        })
        .collect())
}

pub fn field_rows_complex(c: &ComplexField) -> Result<Vec<FieldRow>> {
    let du = c.derivative(1)?;
    Ok(c
        .values
        .iter()
        .zip(&du)
        .enumerate()
        .map(|(j, (u, d))| {
            let m2 = u.norm_sqr();
            FieldRow {
                x: c.grid.position(j),
                eta: 1.0 - m2,
                w: (m2 > 0.0).then(|| (u.conj() * d).im / m2),
                re_u: u.re,
                im_u: u.im,
            }
        })
        .collect())
}

pub fn write_field_csv<W: Write>(out: W, rows: &[FieldRow]) -> Result<()> {
    write_rows(
        out,
        &FIELD_HEADER,
        rows.iter().map(|r| vec![fmt_f64(r.x), fmt_f64(r.eta), fmt_opt(r.w), fmt_f64(r.re_u), fmt_f64(r.im_u)]),
    )
}

pub fn read_field_csv<R: Read>(input: R) -> Result<Vec<FieldRow>> {
    read_rows(input, &FIELD_HEADER)
}

pub fn write_curve_csv<W: Write>(out: W, points: &[CurvePoint]) -> Result<()> {
    write_rows(
        out,
        &CURVE_HEADER,
        points.iter().map(|p| {
            vec![
                fmt_f64(p.q),
                fmt_f64(p.energy),
                fmt_f64(p.c_est),
                fmt_f64(p.residual_norm),
                p.converged.to_string(),
                p.iterations.to_string(),
            ]
        }),
    )
}

pub fn read_curve_csv<R: Read>(input: R) -> Result<Vec<CurvePoint>> {
    read_rows(input, &CURVE_HEADER)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub p: Option<f64>,
    pub min_modulus: f64,
    pub dist: Option<f64>,
}

pub fn trajectory_rows(s: &TrajectorySummary) -> Vec<TrajectoryRow> {
    (0..s.len())
        .map(|i| TrajectoryRow {
            t: s.times[i],
            energy: s.energies[i],
            p: s.momenta[i],
            min_modulus: s.min_modulus[i],
            dist: s.distances[i],
        })
        .collect()
}

pub fn write_trajectory_csv<W: Write>(out: W, s: &TrajectorySummary) -> Result<()> {
    write_rows(
        out,
        &TRAJECTORY_HEADER,
        trajectory_rows(s)
            .into_iter()
            .map(|r| vec![fmt_f64(r.t), fmt_f64(r.energy), fmt_opt(r.p), fmt_f64(r.min_modulus), fmt_opt(r.dist)]),
    )
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<TrajectorySummary> {
    let rows: Vec<TrajectoryRow> = read_rows(input, &TRAJECTORY_HEADER)?;
    Ok(TrajectorySummary {
        times: rows.iter().map(|r| r.t).collect(),
        energies: rows.iter().map(|r| r.energy).collect(),
        momenta: rows.iter().map(|r| r.p).collect(),
        min_modulus: rows.iter().map(|r| r.min_modulus).collect(),
        distances: rows.iter().map(|r| r.dist).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionRow {
    pub xi: f64,
    pub omega: f64,
}

pub fn write_dispersion_csv<W: Write>(out: W, rows: &[DispersionRow]) -> Result<()> {
    write_rows(out, &DISPERSION_HEADER, rows.iter().map(|r| vec![fmt_f64(r.xi), fmt_f64(r.omega)]))
}

pub fn read_dispersion_csv<R: Read>(input: R) -> Result<Vec<DispersionRow>> {
    read_rows(input, &DISPERSION_HEADER)
}
