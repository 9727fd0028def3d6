//! Command implementations: thin wrappers over the library that load JSON
//! inputs, run one operation, and print either a stable text layout or a
//! machine-readable JSON object.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use bellforge::decomposition::verify_equivalence;
use bellforge::filtering::apply_filters;
use bellforge::locc::{reveal_one_bit, reveal_two_bits};
use bellforge::polytope::{lp_membership, MembershipResult};
use bellforge::quantum::{BipartiteState, Side};
use bellforge::scenarios::{report_grid, reproduce_report, Report};
use bellforge::witness::chsh_value;

use crate::formats::{
    load_behavior, load_filter, load_protocol, load_settings, load_state, save_state, CliError,
    CliResult, StateFile, SCHEMA,
};

fn state_summary_lines(state: &BipartiteState<f64>) -> Vec<String> {
    let mut lines = vec![
        format!("labels: {}", state.space().labels().join(" ")),
        format!(
            "dims: {}",
            state
                .space()
                .dims()
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ),
        format!(
            "partition: A = {} | B = {}",
            state.side_labels(Side::A).join(" "),
            state.side_labels(Side::B).join(" ")
        ),
        format!("trace: {:.12}", state.matrix().trace().re),
    ];
    if state.dim() <= 16 {
        for r in 0..state.dim() {
            let row: Vec<String> = (0..state.dim())
                .map(|c| {
                    let z = state.matrix()[(r, c)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            lines.push(row.join(" "));
        }
    } else {
        lines.push(format!(
            "matrix: {0}×{0} entries omitted; use --json or --out",
            state.dim()
        ));
    }
    lines
}

pub fn cmd_filter(
    state: &Path,
    ma: &Path,
    nb: &Path,
    json: bool,
    out: Option<&PathBuf>,
) -> CliResult<String> {
    let state = load_state(state)?;
    let filter_a = load_filter(ma, Side::A)?;
    let filter_b = load_filter(nb, Side::B)?;
    let (filtered, probability) = apply_filters(&state, &filter_a, &filter_b)?;
    if let Some(path) = out {
        save_state(path, &filtered)?;
    }
    if json {
        let value = json!({
            "schema": SCHEMA,
            "success_probability": probability,
            "state": StateFile::from_state(&filtered),
        });
        Ok(serde_json::to_string_pretty(&value).expect("report serializes"))
    } else {
        let mut lines = vec![format!("success_probability: {probability:.12}")];
        lines.extend(state_summary_lines(&filtered));
        Ok(lines.join("\n"))
    }
}

pub fn cmd_reveal(
    state: &Path,
    ma: &Path,
    nb: Option<&PathBuf>,
    one_bit: bool,
    json: bool,
    out: Option<&PathBuf>,
) -> CliResult<String> {
    let state = load_state(state)?;
    let filter_a = load_filter(ma, Side::A)?;
    let (output, transcript) = if one_bit {
        reveal_one_bit(&state, &filter_a)?
    } else {
        let nb = nb
            .ok_or_else(|| CliError::Parse("reveal needs --nb unless --one-bit is given".into()))?;
        let filter_b = load_filter(nb, Side::B)?;
        reveal_two_bits(&state, &filter_a, &filter_b)?
    };
    if let Some(path) = out {
        save_state(path, &output)?;
    }
    if json {
        let value = json!({
            "schema": SCHEMA,
            "bits_a_to_b": transcript.bits_a_to_b(),
            "bits_b_to_a": transcript.bits_b_to_a(),
            "state": StateFile::from_state(&output),
        });
        Ok(serde_json::to_string_pretty(&value).expect("report serializes"))
    } else {
        let mut lines = vec![format!(
            "bits: {} A→B, {} B→A",
            transcript.bits_a_to_b(),
            transcript.bits_b_to_a()
        )];
        lines.extend(state_summary_lines(&output));
        Ok(lines.join("\n"))
    }
}

pub fn cmd_membership(behavior: &Path, json: bool) -> CliResult<String> {
    let behavior = load_behavior(behavior)?;
    let result = lp_membership(&behavior)?;
    match result {
        MembershipResult::Inside { weights } => {
            if json {
                let value = json!({
                    "schema": SCHEMA,
                    "verdict": "INSIDE",
                    "weights": weights,
                });
                Ok(serde_json::to_string_pretty(&value).expect("report serializes"))
            } else {
                let listed: Vec<String> = weights.iter().map(|w| format!("{w:.9}")).collect();
                Ok(format!("verdict: INSIDE\nweights: {}", listed.join(" ")))
            }
        }
        MembershipResult::Outside { certificate } => {
            let margin = certificate.evaluate(&behavior);
            let normalized = certificate.normalized_margin(&behavior).ok();
            if json {
                let value = json!({
                    "schema": SCHEMA,
                    "verdict": "OUTSIDE",
                    "certificate": {
                        "coefficients": certificate.coefficients,
                        "offset": certificate.offset,
                        "margin": margin,
                        "chsh_scale_margin": normalized,
                    },
                });
                Ok(serde_json::to_string_pretty(&value).expect("report serializes"))
            } else {
                let coeffs: Vec<String> = certificate
                    .coefficients
                    .iter()
                    .map(|c| format!("{c:.9}"))
                    .collect();
                let mut lines = vec![
                    "verdict: OUTSIDE".to_string(),
                    format!("margin: {margin:.9}"),
                ];
                if let Some(n) = normalized {
                    lines.push(format!("chsh_scale_margin: {n:.9}"));
                }
                lines.push(format!("offset: {:.9}", certificate.offset));
                lines.push(format!("coefficients: {}", coeffs.join(" ")));
                Ok(lines.join("\n"))
            }
        }
    }
}

pub fn cmd_chsh(state: &Path, settings: &Path, json: bool) -> CliResult<String> {
    let state = load_state(state)?;
    let settings = load_settings(settings)?;
    let value = chsh_value(&state, &settings)?;
    if json {
        let payload = json!({ "schema": SCHEMA, "chsh": value });
        Ok(serde_json::to_string_pretty(&payload).expect("report serializes"))
    } else {
        Ok(format!("chsh: {value:.12}"))
    }
}

fn report_to_json(report: &Report<f64>) -> Value {
    json!({
        "p": report.p,
        "q": report.q,
        "success_probability": report.success_probability,
        "chsh_value": report.chsh_value,
        "chsh_closed_form": report.chsh_closed_form,
        "chsh_abs_diff": report.chsh_abs_diff,
        "verdict": if report.nonlocal { "NONLOCAL" } else { "LOCAL" },
        "certificate_margin_chsh_scale": report.certificate_margin,
        "roundtrip_trace_distance": report.roundtrip_distance,
        "bits_a_to_b": report.bits_a_to_b,
        "bits_b_to_a": report.bits_b_to_a,
    })
}

// column order is part of the CLI contract; keep it stable
const REPORT_HEADER: &str =
    "p q success_prob chsh closed_form abs_diff verdict margin roundtrip bitsAB bitsBA";

fn report_row(report: &Report<f64>) -> String {
    format!(
        "{:.9} {:.9} {:.9} {:.9} {:.9} {:.3e} {} {} {:.3e} {} {}",
        report.p,
        report.q,
        report.success_probability,
        report.chsh_value,
        report.chsh_closed_form,
        report.chsh_abs_diff,
        if report.nonlocal { "NONLOCAL" } else { "LOCAL" },
        report
            .certificate_margin
            .map(|m| format!("{m:.9}"))
            .unwrap_or_else(|| "-".into()),
        report.roundtrip_distance,
        report.bits_a_to_b,
        report.bits_b_to_a,
    )
}

pub fn cmd_paper(p: f64, grid: Option<usize>, json: bool) -> CliResult<String> {
    let reports = match grid {
        Some(points) => report_grid(points)?,
        None => vec![reproduce_report(p)?],
    };
    if json {
        let value = json!({
            "schema": SCHEMA,
            "rows": reports.iter().map(report_to_json).collect::<Vec<_>>(),
        });
        Ok(serde_json::to_string_pretty(&value).expect("report serializes"))
    } else {
        let mut lines = vec![REPORT_HEADER.to_string()];
        lines.extend(reports.iter().map(report_row));
        Ok(lines.join("\n"))
    }
}

pub fn cmd_decompose_check(protocol: &Path, state: &Path, json: bool) -> CliResult<String> {
    let protocol = load_protocol(protocol)?;
    let state = load_state(state)?;
    let distance = verify_equivalence(&protocol, &state)?;
    if json {
        let value = json!({ "schema": SCHEMA, "trace_distance": distance });
        Ok(serde_json::to_string_pretty(&value).expect("report serializes"))
    } else {
        Ok(format!("trace_distance: {distance:.3e}"))
    }
}
