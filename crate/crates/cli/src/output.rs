//! CSV and JSON renderings. Numbers carry 12 significant digits so that
//! identical runs produce identical bytes.

use std::fmt::Write;

use casimir_lateral::regimes::SweepRow;
use casimir_lateral::RegimeClass;
use serde_json::{json, Map, Value};

use crate::{Command, Format, Outcome, RunConfig};

pub const CSV_COLUMNS: [&str; 9] = [
    "lambda_c_over_z0",
    "v_xx_norm",
    "v_yy_norm",
    "v_zz_norm",
    "v_xz_norm",
    "v_sum_norm",
    "A_norm",
    "delta_rad",
    "regime",
];

pub const NORMALIZATION: &str = "v_norm = V * z0^4 / (eps0 * V_particle * omega_p)";

pub fn number(x: f64) -> String {
    format!("{x:.11e}")
}

/// `x` rounded to 12 significant digits.
fn rounded(x: f64) -> f64 {
    if x.is_finite() {
        number(x).parse().expect("formatted float")
    } else {
        x
    }
}

fn regime_label(class: RegimeClass) -> &'static str {
    class.label()
}

/// Reference frequency shared by all successful rows.
fn reference_frequency(rows: &[SweepRow]) -> Option<f64> {
    rows.iter()
        .find_map(|r| r.outcome.as_ref().ok())
        .map(|r| r.components.reference_frequency)
}

fn header(command: Command, config: &RunConfig, rows: &[SweepRow]) -> Vec<String> {
    let mut lines = vec![
        format!("casimir-lateral {command} mode={}", config.mode()),
        match reference_frequency(rows) {
            Some(w) => format!("normalization: {NORMALIZATION}, omega_p = {} rad/s", number(w)),
            None => format!("normalization: {NORMALIZATION}"),
        },
        format!("config: {}", config.fingerprint(command)),
    ];
    for r in rows {
        if let Err(e) = &r.outcome {
            lines.push(format!(
                "error at lambda_c_over_z0 = {}: {e}",
                number(r.lambda_over_z0)
            ));
        }
    }
    lines
}

pub fn render(command: Command, config: &RunConfig, outcome: &Outcome, format: Format) -> String {
    match format {
        Format::Csv => render_csv(command, config, outcome),
        Format::Json => render_json(command, config, outcome),
    }
}

fn render_csv(command: Command, config: &RunConfig, outcome: &Outcome) -> String {
    let rows = outcome.rows();
    let mut out = String::new();
    for line in header(command, config, &rows) {
        writeln!(out, "# {line}").unwrap();
    }
    if let Outcome::Transition {
        transition,
        bracket,
        ..
    } = outcome
    {
        writeln!(
            out,
            "# transition: root = {}, certified interval = [{}, {}], v_sum_norm at ends = [{}, {}], \
             search bracket = [{}, {}]",
            number(transition.root),
            number(transition.lo),
            number(transition.hi),
            number(transition.sum_lo),
            number(transition.sum_hi),
            number(bracket.0),
            number(bracket.1),
        )
        .unwrap();
    }
    writeln!(out, "{}", CSV_COLUMNS.join(",")).unwrap();
    for r in &rows {
        let x = number(r.lambda_over_z0);
        match &r.outcome {
            Ok(rep) => {
                let v = &rep.components;
                let fields = [v.xx, v.yy, v.zz, v.xz, v.sum, rep.amplitude, rep.delta]
                    .map(number)
                    .join(",");
                writeln!(out, "{x},{fields},{}", regime_label(rep.class)).unwrap();
            }
            Err(_) => {
                let fields = vec!["NaN"; 7].join(",");
                writeln!(out, "{x},{fields},error").unwrap();
            }
        }
    }
    out
}

fn row_json(r: &SweepRow) -> Value {
    let mut m = Map::new();
    m.insert("lambda_c_over_z0".into(), json!(rounded(r.lambda_over_z0)));
    match &r.outcome {
        Ok(rep) => {
            let v = &rep.components;
            for (k, x) in [
                ("v_xx_norm", v.xx),
                ("v_yy_norm", v.yy),
                ("v_zz_norm", v.zz),
                ("v_xz_norm", v.xz),
                ("v_sum_norm", v.sum),
                ("A_norm", rep.amplitude),
                ("delta_rad", rep.delta),
                ("A_si_joule", rep.amplitude_si()),
                ("equilibrium_x_m", rep.equilibrium),
            ] {
                m.insert(k.into(), json!(rounded(x)));
            }
            m.insert(
                "error_estimate".into(),
                json!(v.error.map(rounded)),
            );
            m.insert("regime".into(), json!(regime_label(rep.class)));
        }
        Err(e) => {
            m.insert("regime".into(), json!("error"));
            m.insert("error".into(), json!(e.to_string()));
        }
    }
    Value::Object(m)
}

fn render_json(command: Command, config: &RunConfig, outcome: &Outcome) -> String {
    let rows = outcome.rows();
    let document = config.resolved(command).document;
    let mut top = json!({
        "command": command.to_string(),
        "mode": config.mode().to_string(),
        "normalization": NORMALIZATION,
        "reference_frequency": reference_frequency(&rows).map(rounded),
        "config": document,
        "rows": rows.iter().map(row_json).collect::<Vec<_>>(),
    });
    if let Outcome::Transition {
        transition,
        bracket,
        ..
    } = outcome
    {
        top["transition"] = json!({
            "root": rounded(transition.root),
            "lo": rounded(transition.lo),
            "hi": rounded(transition.hi),
            "v_sum_norm_lo": rounded(transition.sum_lo),
            "v_sum_norm_hi": rounded(transition.sum_hi),
            "bracket": [rounded(bracket.0), rounded(bracket.1)],
            "evaluations": transition.evaluations,
        });
    }
    let mut s = serde_json::to_string_pretty(&top).expect("serializable");
    s.push('\n');
    s
}
