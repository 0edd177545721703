//! Endowment-ratio sweeps for pair problems, tabulated as CSV.

use std::fs::File;
use std::io::{self, Write};

use anyhow::{bail, Context, Result};
use claimstable::algorithms::{
    case_pair_summary, cea_algorithm, classify_assortativity, thresholds, AssortativityLabel,
};
use claimstable::problems::ThetaProblem;
use claimstable::rational::{approx, format_rational, parse_rational, rat, Rational};
use rayon::prelude::*;
use serde::Serialize;

use crate::problem::{Model, ParsedProblem};

/// One grid point. Blocks and per-step values are joined with `|` so each
/// stays a single CSV cell.
#[derive(Debug, Serialize)]
struct SweepRow {
    alpha: String,
    alpha_float: f64,
    partition: String,
    cases: String,
    assortativity: String,
    all_pairs_positive: bool,
    all_pairs_negative: bool,
    beta_1: String,
    delta_1: String,
    gamma_1: String,
}

fn row_for(claims: &[Rational], alpha: &Rational) -> Result<SweepRow> {
    let problem = ThetaProblem::from_alpha(claims.to_vec(), alpha.clone(), 2)?;
    let run = cea_algorithm(&problem)?;
    let labels = classify_assortativity(&problem, &run.partition, Some(&run.trace))?;
    let pairs = case_pair_summary(&labels, &run.trace);

    let partition = run
        .partition
        .blocks()
        .iter()
        .map(|block| {
            block
                .ids()
                .iter()
                .map(|id| id.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("|");
    let cases = run
        .trace
        .steps
        .iter()
        .filter_map(|step| step.case.map(|c| c.to_string()))
        .collect::<Vec<_>>()
        .join("|");
    let assortativity = labels
        .labels
        .iter()
        .map(|(_, label)| label.to_string())
        .collect::<Vec<_>>()
        .join("|");

    let bundle = thresholds(&problem, problem.everyone())?;
    Ok(SweepRow {
        alpha: format_rational(alpha),
        alpha_float: approx(alpha),
        partition,
        cases,
        assortativity,
        all_pairs_positive: pairs
            .iter()
            .all(|(_, _, label)| *label == AssortativityLabel::Positive),
        all_pairs_negative: pairs
            .iter()
            .all(|(_, _, label)| *label == AssortativityLabel::Negative),
        beta_1: format_rational(&bundle.beta),
        delta_1: format_rational(&bundle.delta),
        gamma_1: format_rational(&bundle.gamma),
    })
}

pub fn sweep(
    parsed: ParsedProblem,
    alpha_from: &str,
    alpha_to: &str,
    steps: usize,
    out: Option<&str>,
) -> Result<i32> {
    let Model::Claims { problem, .. } = &parsed.model else {
        bail!("sweeps run the pair algorithm, which needs a claims problem");
    };
    if problem.theta() != 2 {
        bail!(
            "sweeps run the pair algorithm, which needs a minimal size of 2, got {}",
            problem.theta()
        );
    }
    if steps < 1 {
        bail!("steps must be at least 1");
    }
    let from = parse_rational(alpha_from)?;
    let to = parse_rational(alpha_to)?;
    let claims = problem.claims().to_vec();

    let grid: Vec<Rational> = (0..=steps)
        .map(|i| &from + (&to - &from) * rat(i as i64, steps as i64))
        .collect();
    // Rows are computed in parallel but written in grid order, so the file
    // never depends on scheduling.
    let rows = grid
        .par_iter()
        .map(|alpha| row_for(&claims, alpha))
        .collect::<Result<Vec<_>>>()?;

    let sink: Box<dyn Write> = match out {
        Some(path) => {
            Box::new(File::create(path).with_context(|| format!("creating {path}"))?)
        }
        None => Box::new(io::stdout()),
    };
    let mut writer = csv::Writer::from_writer(sink);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(0)
}
