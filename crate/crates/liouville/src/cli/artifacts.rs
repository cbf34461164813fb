//! Artifact emission. Floats are printed with the shortest round-trip
//! representation, so identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::assembly::FieldTable;
use crate::chiral_ode::WronskianPair;
use crate::verify::ProbeRow;
use crate::zero_tracker::ZeroCurve;

pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    write_text(path, &body)
}

pub fn field_csv(table: &FieldTable<f64>) -> String {
    let mut out = String::from("t,x,F,phi\n");
    for r in &table.rows {
        let _ = writeln!(out, "{},{},{},{}", r.t, r.x, r.f, r.phi);
    }
    out
}

pub fn potentials_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("x,u,w\n");
    for (x, u, w) in rows {
        let _ = writeln!(out, "{x},{u},{w}");
    }
    out
}

/// `s,psi1,psi2,chi1,chi2` over the given abscissae.
pub fn chirals_csv(s_values: &[f64], psi: &WronskianPair<f64>, chi: &WronskianPair<f64>) -> String {
    let mut out = String::from("s,psi1,psi2,chi1,chi2\n");
    for &s in s_values {
        let p = psi.eval(s).expect("s within both ranges");
        let c = chi.eval(s).expect("s within both ranges");
        let _ = writeln!(out, "{s},{},{},{},{}", p.f1, p.f2, c.f1, c.f2);
    }
    out
}

pub fn curve_csv(curve: &ZeroCurve<f64>) -> String {
    let mut out = String::from("t,x,F,dFdx\n");
    for s in &curve.samples {
        let _ = writeln!(out, "{},{},{},{}", s.t, s.x, s.f, s.df_dx);
    }
    out
}

pub fn probe_csv(rows: &[ProbeRow<f64>]) -> String {
    let mut out = String::from("eps,input_distance,output_deviation\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.eps, r.input_distance, r.output_deviation);
    }
    out
}

pub fn join(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
