//! `serkit metrics` — metric blocks from (id, pred, target) CSV files.

use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde::Serialize;
use serkit::error::{Error, Result};
use serkit::metrics::{
    acc_from_scores, balanced_accuracy, ccc, mae, mse, pcc, precision_recall_f1,
    unweighted_accuracy, weighted_accuracy_paper, ConfusionCounts, PrfReport, ScoreAccuracy,
};

use crate::out;

#[derive(Subcommand)]
pub enum MetricsCmd {
    /// Classification metrics over label pairs.
    Classify(InputArgs),
    /// Regression metrics over numeric pairs.
    Regress(InputArgs),
    /// Sentiment-score accuracy (acc2/acc7) over numeric pairs in [-3, 3].
    Scores(InputArgs),
}

#[derive(Args, Serialize)]
pub struct InputArgs {
    /// CSV with header `id,pred,target`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn read_pairs(path: &PathBuf) -> Result<Vec<(String, String, String)>> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if idx == 0 && cells == ["id", "pred", "target"] {
            continue;
        }
        if cells.len() != 3 {
            return Err(Error::format_at(
                "CSV",
                idx + 1,
                format!("expected id,pred,target; got {} cells", cells.len()),
            ));
        }
        rows.push((cells[0].to_string(), cells[1].to_string(), cells[2].to_string()));
    }
    if rows.is_empty() {
        return Err(Error::contract("no data rows"));
    }
    Ok(rows)
}

fn numeric_pairs(rows: &[(String, String, String)]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut preds = Vec::with_capacity(rows.len());
    let mut targets = Vec::with_capacity(rows.len());
    for (id, p, t) in rows {
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::contract(format!("row {id:?}: non-numeric value {s:?}")))
        };
        preds.push(parse(p)?);
        targets.push(parse(t)?);
    }
    Ok((preds, targets))
}

#[derive(Serialize)]
struct ClassifyReport {
    n: usize,
    unweighted_accuracy: f64,
    /// The class-weighted accuracy formula; algebraically equal to
    /// unweighted accuracy.
    weighted_accuracy: f64,
    balanced_accuracy: Option<f64>,
    prf: PrfReport,
    confusion: Vec<Vec<usize>>,
    classes: Vec<String>,
}

#[derive(Serialize)]
struct RegressReport {
    n: usize,
    mse: f64,
    mae: f64,
    pcc: f64,
    ccc: f64,
}

#[derive(Serialize)]
struct ScoresReport {
    n: usize,
    acc2: f64,
    acc7: f64,
}

pub fn run(cmd: MetricsCmd) -> Result<()> {
    match cmd {
        MetricsCmd::Classify(args) => {
            let rows = read_pairs(&args.input)?;
            let pairs: Vec<(String, String)> =
                rows.iter().map(|(_, p, t)| (p.clone(), t.clone())).collect();
            let cm = ConfusionCounts::from_labels(&pairs)?;
            let report = ClassifyReport {
                n: cm.total(),
                unweighted_accuracy: unweighted_accuracy(&cm)?,
                weighted_accuracy: weighted_accuracy_paper(&cm)?,
                balanced_accuracy: balanced_accuracy(&cm).ok(),
                prf: precision_recall_f1(&cm)?,
                confusion: cm.matrix().to_vec(),
                classes: cm.classes().to_vec(),
            };
            out::write_json(&args.out, &report)?;
            out::echo_config(&args.out, "metrics classify", &args)?;
            println!("{}", args.out.display());
            Ok(())
        }
        MetricsCmd::Regress(args) => {
            let rows = read_pairs(&args.input)?;
            let (preds, targets) = numeric_pairs(&rows)?;
            let report = RegressReport {
                n: preds.len(),
                mse: mse(&preds, &targets)?,
                mae: mae(&preds, &targets)?,
                pcc: pcc(&preds, &targets)?,
                ccc: ccc(&preds, &targets)?,
            };
            out::write_json(&args.out, &report)?;
            out::echo_config(&args.out, "metrics regress", &args)?;
            println!("{}", args.out.display());
            Ok(())
        }
        MetricsCmd::Scores(args) => {
            let rows = read_pairs(&args.input)?;
            let (preds, targets) = numeric_pairs(&rows)?;
            let report = ScoresReport {
                n: preds.len(),
                acc2: acc_from_scores(&preds, &targets, ScoreAccuracy::Acc2)?,
                acc7: acc_from_scores(&preds, &targets, ScoreAccuracy::Acc7)?,
            };
            out::write_json(&args.out, &report)?;
            out::echo_config(&args.out, "metrics scores", &args)?;
            println!("{}", args.out.display());
            Ok(())
        }
    }
}
