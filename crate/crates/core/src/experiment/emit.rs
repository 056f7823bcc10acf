//! Result emission: detail CSV (one row per evaluated round), summary CSV
//! (one row per cell) and a markdown table.
//!
//! Floats are written with `Display`, which produces the shortest string
//! that parses back to the same value, so written files are byte-stable
//! across runs and `read_*` is an exact inverse of `write_*`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::sweep::{DetailRow, ResultRow};
use crate::flcore::Defense;
use crate::metrics::MeanStd;

/// Fixed leading columns of the detail CSV; per-class accuracy columns
/// `m_c_0..` follow.
const DETAIL_HEAD: [&str; 9] = [
    "run_id",
    "seed",
    "alpha",
    "defense",
    "theta",
    "round",
    "accuracy",
    "bias",
    "backdoor_accuracy",
];

const SUMMARY_HEAD: [&str; 11] = [
    "alpha",
    "attack",
    "defense",
    "theta",
    "num_runs",
    "accuracy_mean",
    "accuracy_std",
    "bias_mean",
    "bias_std",
    "backdoor_mean",
    "backdoor_std",
];

fn defense_fields(defense: Defense) -> (&'static str, String) {
    match defense {
        Defense::None => ("none", String::new()),
        Defense::Rlr { theta } => ("rlr", theta.to_string()),
    }
}

fn parse_defense(name: &str, theta: &str, ctx: &str) -> Result<Defense> {
    match name {
        "none" => {
            if theta.is_empty() {
                Ok(Defense::None)
            } else {
                Err(Error::invalid_argument(format!(
                    "{ctx}: defense none must have an empty theta, got {theta:?}"
                )))
            }
        }
        "rlr" => {
            let theta = theta.parse::<usize>().map_err(|_| {
                Error::invalid_argument(format!("{ctx}: bad theta {theta:?} for defense rlr"))
            })?;
            Ok(Defense::Rlr { theta })
        }
        other => Err(Error::invalid_argument(format!(
            "{ctx}: unknown defense {other:?}"
        ))),
    }
}

fn opt_f64(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_f64(field: &str, name: &str, ctx: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| {
        Error::invalid_argument(format!("{ctx}: bad {name} value {field:?}"))
    })
}

fn parse_opt_f64(field: &str, name: &str, ctx: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, name, ctx).map(Some)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Render the detail CSV. `num_classes` fixes the per-class column count;
/// every row must match it.
pub fn render_details_csv(details: &[DetailRow], num_classes: usize) -> Result<String> {
    let mut text = DETAIL_HEAD.join(",");
    for c in 0..num_classes {
        let _ = write!(text, ",m_c_{c}");
    }
    text.push('\n');
    for (i, d) in details.iter().enumerate() {
        if d.classwise.len() != num_classes {
            return Err(Error::invalid_argument(format!(
                "detail row {i} has {} class accuracies, expected {num_classes}",
                d.classwise.len()
            )));
        }
        let (defense, theta) = defense_fields(d.defense);
        let _ = write!(
            text,
            "{},{},{},{},{},{},{},{},{}",
            d.run_id, d.seed, d.alpha, defense, theta, d.round, d.accuracy, d.bias,
            opt_f64(d.backdoor_accuracy)
        );
        for m in &d.classwise {
            let _ = write!(text, ",{m}");
        }
        text.push('\n');
    }
    Ok(text)
}

pub fn write_details_csv(path: &Path, details: &[DetailRow], num_classes: usize) -> Result<()> {
    write_file(path, &render_details_csv(details, num_classes)?)
}

/// Parse a detail CSV produced by [`write_details_csv`]. The class count is
/// recovered from the header.
pub fn read_details_csv(path: &Path) -> Result<Vec<DetailRow>> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::invalid_argument(format!("{}: empty file", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < DETAIL_HEAD.len() || cols[..DETAIL_HEAD.len()] != DETAIL_HEAD {
        return Err(Error::invalid_argument(format!(
            "{}: unexpected detail header {header:?}",
            path.display()
        )));
    }
    let num_classes = cols.len() - DETAIL_HEAD.len();
    for (c, col) in cols[DETAIL_HEAD.len()..].iter().enumerate() {
        if *col != format!("m_c_{c}") {
            return Err(Error::invalid_argument(format!(
                "{}: expected column m_c_{c}, found {col:?}",
                path.display()
            )));
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let ctx = format!("{}:{}", path.display(), lineno + 1);
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::invalid_argument(format!(
                "{ctx}: expected {} fields, found {}",
                cols.len(),
                fields.len()
            )));
        }
        let run_id = fields[0].parse::<usize>().map_err(|_| {
            Error::invalid_argument(format!("{ctx}: bad run_id {:?}", fields[0]))
        })?;
        let seed = fields[1].parse::<u64>().map_err(|_| {
            Error::invalid_argument(format!("{ctx}: bad seed {:?}", fields[1]))
        })?;
        let alpha = parse_f64(fields[2], "alpha", &ctx)?;
        let defense = parse_defense(fields[3], fields[4], &ctx)?;
        let round = fields[5].parse::<u32>().map_err(|_| {
            Error::invalid_argument(format!("{ctx}: bad round {:?}", fields[5]))
        })?;
        let accuracy = parse_f64(fields[6], "accuracy", &ctx)?;
        let bias = parse_f64(fields[7], "bias", &ctx)?;
        let backdoor_accuracy = parse_opt_f64(fields[8], "backdoor_accuracy", &ctx)?;
        let classwise = fields[9..]
            .iter()
            .enumerate()
            .map(|(c, f)| parse_f64(f, &format!("m_c_{c}"), &ctx))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(DetailRow {
            run_id,
            seed,
            alpha,
            defense,
            round,
            accuracy,
            bias,
            backdoor_accuracy,
            classwise,
        });
        debug_assert_eq!(rows.last().unwrap().classwise.len(), num_classes);
    }
    Ok(rows)
}

/// Render the summary CSV: one row per cell.
pub fn render_summary_csv(rows: &[ResultRow]) -> String {
    let mut text = SUMMARY_HEAD.join(",");
    text.push('\n');
    for r in rows {
        let (defense, theta) = defense_fields(r.defense);
        let (bd_mean, bd_std) = match r.backdoor_accuracy {
            Some(m) => (m.mean.to_string(), m.std.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.alpha,
            r.attack,
            defense,
            theta,
            r.num_runs,
            r.accuracy.mean,
            r.accuracy.std,
            r.bias.mean,
            r.bias.std,
            bd_mean,
            bd_std
        );
    }
    text
}

pub fn write_summary_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    write_file(path, &render_summary_csv(rows))
}

/// Parse a summary CSV produced by [`write_summary_csv`].
pub fn read_summary_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::invalid_argument(format!("{}: empty file", path.display())))?;
    if header.split(',').collect::<Vec<_>>() != SUMMARY_HEAD {
        return Err(Error::invalid_argument(format!(
            "{}: unexpected summary header {header:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let ctx = format!("{}:{}", path.display(), lineno + 1);
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != SUMMARY_HEAD.len() {
            return Err(Error::invalid_argument(format!(
                "{ctx}: expected {} fields, found {}",
                SUMMARY_HEAD.len(),
                fields.len()
            )));
        }
        let alpha = parse_f64(fields[0], "alpha", &ctx)?;
        let attack = match fields[1] {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::invalid_argument(format!(
                    "{ctx}: bad attack flag {other:?}"
                )))
            }
        };
        let defense = parse_defense(fields[2], fields[3], &ctx)?;
        let num_runs = fields[4].parse::<usize>().map_err(|_| {
            Error::invalid_argument(format!("{ctx}: bad num_runs {:?}", fields[4]))
        })?;
        let accuracy = MeanStd {
            mean: parse_f64(fields[5], "accuracy_mean", &ctx)?,
            std: parse_f64(fields[6], "accuracy_std", &ctx)?,
        };
        let bias = MeanStd {
            mean: parse_f64(fields[7], "bias_mean", &ctx)?,
            std: parse_f64(fields[8], "bias_std", &ctx)?,
        };
        let backdoor_accuracy = match (
            parse_opt_f64(fields[9], "backdoor_mean", &ctx)?,
            parse_opt_f64(fields[10], "backdoor_std", &ctx)?,
        ) {
            (Some(mean), Some(std)) => Some(MeanStd { mean, std }),
            (None, None) => None,
            _ => {
                return Err(Error::invalid_argument(format!(
                    "{ctx}: backdoor mean and std must both be present or both empty"
                )))
            }
        };
        rows.push(ResultRow {
            alpha,
            attack,
            defense,
            num_runs,
            accuracy,
            bias,
            backdoor_accuracy,
        });
    }
    Ok(rows)
}

fn mean_std_cell(m: MeanStd) -> String {
    format!("{:.2} \u{b1} {:.2}", m.mean, m.std)
}

/// Render the summary as a markdown table. Means and standard deviations
/// (population, over runs) are shown as `mean +/- std` to two decimals;
/// cells without a backdoor metric show `-`.
pub fn render_markdown(rows: &[ResultRow]) -> String {
    let mut text = String::from(
        "| alpha | attack | defense | accuracy (%) | bias (pp) | backdoor (%) |\n\
         |---|---|---|---|---|---|\n",
    );
    for r in rows {
        let (name, theta) = defense_fields(r.defense);
        let defense = match r.defense {
            Defense::None => name.to_string(),
            Defense::Rlr { .. } => format!("{name} (theta={theta})"),
        };
        let backdoor = r
            .backdoor_accuracy
            .map(mean_std_cell)
            .unwrap_or_else(|| "-".to_string());
        let _ = writeln!(
            text,
            "| {} | {} | {} | {} | {} | {} |",
            r.alpha,
            if r.attack { "yes" } else { "no" },
            defense,
            mean_std_cell(r.accuracy),
            mean_std_cell(r.bias),
            backdoor
        );
    }
    text
}
