//! Plain-text summary of a fit.

use std::fmt::Write;

use crate::estimation::{wald_table, FitResult, Section, WaldRow};
use crate::formula::FormulaSpec;

/// p-values below this print as `< 2.2e-16`.
pub const P_FLOOR: f64 = 2.2e-16;

pub const SIGNIF_LEGEND: &str = "Signif. codes:  0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1";

fn section_title(s: Section) -> &'static str {
    match s {
        Section::Thresholds => "Thresholds:",
        Section::Intercepts => "Intercept for normals ",
        Section::Coefficients => "Coefficients:",
        Section::Scales => "Standard deviation of the Gaussian response variables:",
        Section::Correlations => "Correlation params:",
    }
}

/// Exponent written with at least two digits, as in `1.234e-05`.
fn scientific(v: f64, digits: usize) -> String {
    let s = format!("{:.*e}", digits.saturating_sub(1), v);
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, magnitude) = match exp.strip_prefix('-') {
                Some(m) => ("-", m),
                None => ("+", exp),
            };
            format!("{mantissa}e{sign}{magnitude:0>2}")
        }
        None => s,
    }
}

/// `digits` significant digits, switching to scientific notation for very small or large values.
pub fn format_significant(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "NA".into()
        } else if v > 0.0 {
            "Inf".into()
        } else {
            "-Inf".into()
        };
    }
    if v == 0.0 {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-5..15).contains(&magnitude) {
        return scientific(v, digits);
    }
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn format_p_value(p: f64) -> String {
    if p < P_FLOOR {
        format!("< {P_FLOOR:e}")
    } else {
        format_significant(p, 4)
    }
}

fn render_table(out: &mut String, rows: &[&WaldRow]) {
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                format!("{:.6}", r.estimate),
                r.se.map_or("NA".into(), |s| format!("{s:.6}")),
                r.z.map_or("NA".into(), |z| format!("{z:.4}")),
                r.p.map_or("NA".into(), format_p_value),
            ]
        })
        .collect();
    let headers = ["", "Estimate", "Std. Error", "z value", "Pr(>|z|)"];
    let widths: Vec<usize> = (0..5)
        .map(|c| {
            cells
                .iter()
                .map(|row| row[c].len())
                .chain([headers[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |out: &mut String, row: [&str; 5], stars: &str| {
        let _ = write!(out, "{:<w$}", row[0], w = widths[0]);
        for c in 1..5 {
            let _ = write!(out, " {:>w$}", row[c], w = widths[c]);
        }
        let _ = writeln!(out, " {stars:<3}");
    };
    line(out, headers, "");
    for (cells, row) in cells.iter().zip(rows) {
        let refs = [
            cells[0].as_str(),
            cells[1].as_str(),
            cells[2].as_str(),
            cells[3].as_str(),
            cells[4].as_str(),
        ];
        line(out, refs, row.stars);
    }
}

fn right_aligned_pairs(out: &mut String, pairs: &[(&str, String)]) {
    let widths: Vec<usize> = pairs.iter().map(|(h, v)| h.len().max(v.len())).collect();
    let header: Vec<String> = pairs
        .iter()
        .zip(&widths)
        .map(|((h, _), w)| format!("{h:>w$}"))
        .collect();
    let values: Vec<String> = pairs
        .iter()
        .zip(&widths)
        .map(|((_, v), w)| format!("{v:>w$}"))
        .collect();
    let _ = writeln!(out, "{}", header.join(" "));
    let _ = writeln!(out, "{}", values.join(" "));
}

fn formula_echo(result: &FitResult) -> String {
    match &result.formula {
        Some(f) => f.to_string(),
        None => FormulaSpec {
            response_names: result
                .spec
                .responses
                .iter()
                .map(|r| r.name.clone())
                .collect(),
            covariate_names: result.spec.covariates.clone(),
            intercept_suppressed: true,
            bar_one: false,
        }
        .to_string(),
    }
}

/// Renders the summary; depends only on `result`.
pub fn render_summary(result: &FitResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Formula: {}", formula_echo(result));
    out.push('\n');
    right_aligned_pairs(
        &mut out,
        &[
            ("nunits", result.n_units.to_string()),
            ("ndim", result.spec.q().to_string()),
            ("logLik", format_significant(result.log_pl, 7)),
        ],
    );

    let table = wald_table(result);
    for section in Section::ALL {
        let rows: Vec<&WaldRow> = table.iter().filter(|r| r.section == section).collect();
        if rows.is_empty() {
            continue;
        }
        out.push('\n');
        let _ = writeln!(out, "{}", section_title(section));
        render_table(&mut out, &rows);
    }
    let _ = writeln!(out, "---");
    let _ = writeln!(out, "{SIGNIF_LEGEND}");

    if let (Some(claic), Some(clbic)) = (result.claic, result.clbic) {
        out.push('\n');
        right_aligned_pairs(
            &mut out,
            &[
                ("CLAIC", format!("{claic:.2}")),
                ("CLBIC", format!("{clbic:.2}")),
            ],
        );
    }

    out.push('\n');
    let _ = writeln!(
        out,
        "Solver: {}; {} after {} iterations (gradient norm {:.3e})",
        result.solver,
        if result.converged {
            "converged"
        } else {
            "NOT converged"
        },
        result.iterations,
        result.gradient_norm
    );
    if result.spec.q() > 1 {
        let _ = writeln!(
            out,
            "Smallest eigenvalue of the correlation matrix: {}",
            format_significant(result.min_eigen_r, 6)
        );
    }
    for note in notes(result) {
        let _ = writeln!(out, "Note: {note}");
    }
    for w in &result.warnings {
        let _ = writeln!(out, "Warning: {w}");
    }
    out
}

fn notes(result: &FitResult) -> Vec<String> {
    let spec = &result.spec;
    let mut notes = Vec::new();
    let has_ordinal = spec.responses.iter().any(|r| r.is_ordinal());
    let has_gaussian = spec.responses.iter().any(|r| !r.is_ordinal());
    if let Some(f) = &result.formula {
        if !f.intercept_suppressed && has_ordinal {
            notes.push(
                "ordinal responses have no intercept; it is absorbed into the thresholds".into(),
            );
        }
        if f.intercept_suppressed && has_gaussian {
            notes.push("an intercept is estimated for every Gaussian response".into());
        }
    }
    if let Some(scales) = &result.standardization {
        let parts: Vec<String> = spec
            .covariates
            .iter()
            .zip(scales)
            .map(|(n, s)| {
                format!(
                    "{n} (mean {}, sd {})",
                    format_significant(s.mean, 6),
                    format_significant(s.sd, 6)
                )
            })
            .collect();
        notes.push(format!(
            "coefficients refer to standardized covariates: {}",
            parts.join(", ")
        ));
    }
    notes
}
