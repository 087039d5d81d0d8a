//! Subcommand implementations. Each returns its output documents and exit
//! code; writing them out is left to the binary.

use pentabend::geom::{
    build_transition_point, sample_configuration, validate_side_lengths, Configuration, SideLengths,
    TheoremHypotheses, Vec3,
};
use pentabend::moment::{check_moment_image, delzant_vertices, sample_moment_image};
use pentabend::singularities::classify_point;
use pentabend::transition::{factored_f, linspace, sweep_at, transition_times, QuadraticData, SweepOptions};
use pentabend::Error;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig, TSpec};
use crate::verify;
use crate::CliError;

pub const SCHEMA: u32 = 1;
pub const SWEEP_SCHEMA_LINE: &str = "# pentabend sweep schema v1";
pub const MOMENT_SCHEMA_LINE: &str = "# pentabend moment-image schema v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    /// Main document, written to --out or stdout.
    pub primary: String,
    /// Secondary documents: (file suffix appended to --out, contents);
    /// written to stderr when there is no --out.
    pub extra: Vec<(String, String)>,
    pub code: i32,
}

impl Output {
    fn json(v: &Value, code: i32) -> Self {
        Self {
            primary: to_json(v),
            extra: Vec::new(),
            code,
        }
    }
}

pub fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

fn with_schema(v: impl serde::Serialize) -> Value {
    let mut v = serde_json::to_value(v).expect("serializable value");
    if let Value::Object(m) = &mut v {
        m.insert("schema".into(), json!(SCHEMA));
    }
    v
}

fn domain(e: Error) -> CliError {
    match e {
        Error::InvalidLengths(_) | Error::UnsupportedSize(_) | Error::ContractViolation(_) => {
            CliError::Usage(e.to_string())
        }
        _ => CliError::Domain(e.to_string()),
    }
}

fn hypotheses(cfg: &RunConfig) -> Result<TheoremHypotheses, CliError> {
    TheoremHypotheses::from_slice(&cfg.r).map_err(domain)
}

fn single_t(cfg: &RunConfig, default: f64) -> Result<f64, CliError> {
    let t = match cfg.t {
        None => default,
        Some(TSpec::Single(t)) => t,
        Some(TSpec::Range { .. }) => return Err(CliError::Usage("this command takes --t, not --t-range".into())),
    };
    if !(0.0..=1.0).contains(&t) {
        return Err(CliError::Usage(format!("t = {t} outside [0, 1]")));
    }
    Ok(t)
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<Output, CliError> {
    let (_, flags) = validate_side_lengths(&cfg.r).map_err(domain)?;
    let mut v = json!({
        "schema": SCHEMA,
        "r": cfg.r,
        "generic": flags.generic,
        "nonempty": flags.nonempty,
        "theorem_hypotheses_ok": flags.theorem_hypotheses_ok,
    });
    if let [r1, r2, r3, r4, r5] = cfg.r[..] {
        v["j"] = json!(r3 + r4 - r5);
        v["J_min"] = json!((r1 - r2).abs());
        v["J_max"] = json!(r1 + r2);
    }
    if let Err(e) = TheoremHypotheses::from_slice(&cfg.r) {
        v["failed_hypotheses"] = json!(e.to_string());
    }
    Ok(Output::json(&v, if flags.theorem_hypotheses_ok { 0 } else { 1 }))
}

pub fn cmd_transition_times(cfg: &RunConfig) -> Result<Output, CliError> {
    let h = hypotheses(cfg)?;
    let (tm, tp) = transition_times(&h).map_err(domain)?;
    let q = QuadraticData::new(&h);
    let [a, b, c] = q.f_coeffs;
    let [_, _, r3, r4, r5] = h.r();
    let v = json!({
        "schema": SCHEMA,
        "r": cfg.r,
        "t_minus": tm,
        "t_plus": tp,
        "a": a,
        "b": b,
        "c": c,
        "delta": q.delta,
        "residuals": {
            "f_at_t_minus": q.f_at(tm),
            "f_at_t_plus": q.f_at(tp),
            "delta_minus_b2_4ac": q.delta - q.delta_from_coeffs(),
            "delta_minus_16_r3_r4_r5_j": q.delta - 16.0 * r3 * r4 * r5 * h.j,
            "factorization": factored_f(&h, 101).max_relative_residual,
        },
    });
    Ok(Output::json(&v, 0))
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Output, CliError> {
    let h = hypotheses(cfg)?;
    let ts = match cfg.t {
        None => linspace(0.0, 1.0, 101),
        Some(TSpec::Single(t)) => vec![t],
        Some(r @ TSpec::Range { count, .. }) => {
            if count < 3 {
                return Err(CliError::Usage(format!("sweep needs at least 3 t values, got {count}")));
            }
            r.values()
        }
    };
    if let Some(t) = ts.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(CliError::Usage(format!("t = {t} outside [0, 1]")));
    }
    let opts = SweepOptions {
        thresholds: cfg.thresholds(),
        ..SweepOptions::default()
    };
    let rows = sweep_at(&h, &ts, &opts).map_err(domain)?;
    let primary = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&json!({ "schema": SCHEMA, "r": cfg.r, "rows": rows })),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "t", "type", "eigen_type", "A", "B", "disc", "root1_re", "root1_im", "root2_re", "root2_im",
            ])
            .map_err(io)?;
            for r in &rows {
                w.write_record([
                    r.t.to_string(),
                    r.kind.to_string(),
                    r.eigen_kind.map(|k| k.to_string()).unwrap_or_default(),
                    r.a.to_string(),
                    r.b.to_string(),
                    r.disc.to_string(),
                    r.roots[0].re.to_string(),
                    r.roots[0].im.to_string(),
                    r.roots[1].re.to_string(),
                    r.roots[1].im.to_string(),
                ])
                .map_err(io)?;
            }
            let body = String::from_utf8(w.into_inner().map_err(|e| io(e.into_error()))?).expect("utf-8 csv");
            format!("{SWEEP_SCHEMA_LINE}\n{body}")
        }
    };
    Ok(Output {
        primary,
        extra: Vec::new(),
        code: 0,
    })
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

pub fn cmd_moment_image(cfg: &RunConfig) -> Result<Output, CliError> {
    let h = hypotheses(cfg)?;
    let t = single_t(cfg, 0.5)?;
    let n = cfg.samples.unwrap_or(100_000);
    let samples = sample_moment_image(&h, n, t, cfg.seed).map_err(domain)?;
    let vertices = delzant_vertices(&h);
    let check = check_moment_image(&h, &samples, cfg.tol("moment_slack"));
    let meta = json!({
        "schema": SCHEMA,
        "r": cfg.r,
        "t": t,
        "seed": cfg.seed,
        "J_min": h.j_min,
        "J_max": h.j_max,
        "j": h.j,
        "vertices": vertices,
        "check": check,
    });
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => {
            let mut v = meta;
            v["samples"] = serde_json::to_value(&samples).expect("serializable samples");
            Ok(Output::json(&v, 0))
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for s in &samples {
                w.serialize(s).map_err(io)?;
            }
            let body = String::from_utf8(w.into_inner().map_err(|e| io(e.into_error()))?).expect("utf-8 csv");
            Ok(Output {
                primary: format!("{MOMENT_SCHEMA_LINE}\n{body}"),
                extra: vec![(".vertices.json".into(), to_json(&meta))],
                code: 0,
            })
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointFile {
    rho: Vec<[f64; 3]>,
    r: Option<Vec<f64>>,
}

/// Resolves `P`, `sample`, or a JSON file `{"rho": [[x, y, z], ...]}`.
pub fn load_point(cfg: &RunConfig, spec: &str) -> Result<Configuration, CliError> {
    match spec {
        "P" => build_transition_point(&hypotheses(cfg)?).map_err(domain),
        "sample" => {
            let l = SideLengths::new(&cfg.r).map_err(domain)?;
            sample_configuration(&l, cfg.seed).map_err(domain)
        }
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read configuration {path}: {e}")))?;
            let f: PointFile =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid configuration file: {e}")))?;
            let rho: Vec<Vec3> = f.rho.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
            let r = f.r.unwrap_or_else(|| cfg.r.clone());
            let l = SideLengths::new(&r).map_err(|e| CliError::Usage(e.to_string()))?;
            Configuration::new(&l, rho).map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))
        }
    }
}

pub fn configuration_json(c: &Configuration) -> Value {
    json!(c
        .edges()
        .iter()
        .map(|p| [p.x, p.y, p.z].map(|x| format!("{x:.16e}")))
        .collect::<Vec<_>>())
}

pub fn cmd_classify_point(cfg: &RunConfig, point: &str) -> Result<Output, CliError> {
    let t = single_t(cfg, 0.5)?;
    let rho = load_point(cfg, point)?;
    if rho.len() != 5 {
        return Err(CliError::Usage(format!("classification needs a pentagon, got {} edges", rho.len())));
    }
    let report = classify_point(&rho, t, &cfg.thresholds()).map_err(domain)?;
    let mut v = with_schema(&report);
    v["configuration"] = configuration_json(&rho);
    Ok(Output::json(&v, 0))
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Output, CliError> {
    let ctx = verify::Context::from_config(cfg);
    let outcomes = verify::run_all(&ctx);
    let all = outcomes.iter().all(|o| o.status != verify::Status::Fail);
    let v = json!({
        "schema": SCHEMA,
        "r": cfg.r,
        "seed": cfg.seed,
        "all_passed": all,
        "suites": outcomes,
    });
    Ok(Output::json(&v, if all { 0 } else { 1 }))
}
