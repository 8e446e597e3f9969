//! CSV writers. Numbers use Rust's shortest round-trip formatting, so output
//! is byte-identical across runs.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

use dmimo_core::experiment::{AnalyticRow, CafRow, SimulatedRow};

pub fn write(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush()
                .with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush().context("writing stdout")
        }
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

const ANALYTIC_HEADER: [&str; 11] = [
    "sweep_var",
    "sweep_value",
    "sweep_value_normalized",
    "case",
    "detector",
    "gamma",
    "lambda",
    "varsigma",
    "pfa",
    "pd_analytic",
    "note",
];

fn analytic_fields(r: &AnalyticRow) -> Vec<String> {
    let mut f = vec![
        r.sweep_var.to_string(),
        num(r.sweep_value),
        num(r.sweep_value_normalized),
        r.case.to_string(),
        r.detector.to_string(),
    ];
    match &r.point {
        Ok(p) => f.extend([
            num(p.gamma),
            num(p.lambda),
            opt(p.varsigma),
            num(p.pfa.value()),
            num(p.pd.value()),
            String::new(),
        ]),
        Err(e) => {
            f.extend(std::iter::repeat_n(String::new(), 5));
            f.push(e.clone());
        }
    }
    f
}

fn writer(w: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn analyze_csv(w: &mut dyn Write, rows: &[AnalyticRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(ANALYTIC_HEADER)?;
    for r in rows {
        out.write_record(analytic_fields(r))?;
    }
    out.flush()?;
    Ok(())
}

pub fn simulate_csv(w: &mut dyn Write, rows: &[SimulatedRow]) -> Result<()> {
    let mut out = writer(w);
    let mut header: Vec<&str> = ANALYTIC_HEADER.to_vec();
    header.extend(["pd_empirical", "ci_halfwidth", "trials", "seed"]);
    out.write_record(&header)?;
    for r in rows {
        let mut f = analytic_fields(&r.analytic);
        match &r.empirical {
            Some(e) => f.extend([
                num(e.p_hat.value()),
                num(e.ci_halfwidth),
                e.trials.to_string(),
                r.seed.to_string(),
            ]),
            None => f.extend([
                String::new(),
                String::new(),
                String::new(),
                r.seed.to_string(),
            ]),
        }
        out.write_record(&f)?;
    }
    out.flush()?;
    Ok(())
}

pub fn caf_csv(w: &mut dyn Write, rows: &[CafRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["m", "mbar", "nu_over_Tp", "f_Hz", "re", "im", "abs"])?;
    for r in rows {
        out.write_record([
            r.m.to_string(),
            r.mbar.to_string(),
            num(r.nu_over_tp),
            num(r.f_hz),
            num(r.value.re),
            num(r.value.im),
            num(r.value.norm()),
        ])?;
    }
    out.flush()?;
    Ok(())
}
