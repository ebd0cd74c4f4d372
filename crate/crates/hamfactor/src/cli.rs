//! Command implementations behind the `hamfactor` binary.
//!
//! Each command returns `Ok(pass)` where `pass` maps to exit code 0 and a
//! failed verification to 1; errors map to 2 (usage/config) or 3
//! (construction). The binary itself only parses arguments and dispatches.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::calabi::{balance_calabi, calabi_of_plan, default_grid_spacing, CalabiError};
use crate::config::{ConfigError, ScenarioConfig};
use crate::displacement::verify_displacement;
use crate::factorization::{plan_factorization, verify_factorization, FactorizationPlan, PlanError};
use crate::geometry::evaluate_word_traced;
use crate::report::{
    BalanceSummary, CalabiSection, Environment, PlanSummary, Report,
};
use crate::words::{verify_commutator_split, verify_identity, TraceStep};

/// Failure modes of a command, ordered by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Exit code 2.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Exit code 2.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Exit code 3.
    #[error("construction error: {0}")]
    Construction(String),
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        CliError::Construction(e.to_string())
    }
}

impl From<CalabiError> for CliError {
    fn from(e: CalabiError) -> Self {
        match e {
            CalabiError::NotInKernel { .. } => CliError::Usage(e.to_string()),
            other => CliError::Construction(other.to_string()),
        }
    }
}

/// Exit code for a finished command result: 0 pass, 1 verification fail,
/// 2 usage/config error, 3 construction error.
pub fn exit_code(result: &Result<bool, CliError>) -> u8 {
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(CliError::Usage(_)) | Err(CliError::Config(_)) | Err(CliError::Io(_)) => 2,
        Err(CliError::Construction(_)) => 3,
    }
}

/// `identity --m M [--trace PATH]`: run the exact word-algebra checks and
/// print the per-label cancellation summary.
pub fn cmd_identity(m: usize, trace_out: Option<&Path>) -> Result<bool, CliError> {
    if m == 0 {
        return Err(CliError::Usage(
            "identity needs at least one factor (--m >= 1)".into(),
        ));
    }
    let (identity_ok, trace) = verify_identity(m);
    let split_ok = verify_commutator_split(m);

    println!(
        "identity [g,h].b = a1..a{m}: {}",
        if identity_ok { "OK" } else { "FAILED" }
    );
    println!(
        "commutator split [g,h] = (g h g^-1).h^-1: {}",
        if split_ok { "OK" } else { "FAILED" }
    );

    // The final multiply in the chain is [g,h] * b; its per-label reductions
    // are the cancellations the construction lives on.
    let mut past_commutator = false;
    println!("per-label cancellations in [g,h].b:");
    for step in &trace.steps {
        match step {
            TraceStep::Multiply { desc, .. } => {
                if *desc == "(g h g^-1) * h^-1" {
                    past_commutator = true;
                }
            }
            TraceStep::ReduceLabel { label, lhs, rhs, reduced } if past_commutator => {
                let fmt = |w: &[crate::words::Symbol]| -> String {
                    if w.is_empty() {
                        "e".into()
                    } else {
                        w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
                    }
                };
                println!(
                    "  label {label}: {} . {} => {}",
                    fmt(lhs),
                    fmt(rhs),
                    fmt(reduced)
                );
            }
            _ => {}
        }
    }

    if let Some(path) = trace_out {
        let mut file = fs::File::create(path)?;
        for line in trace.to_lines() {
            writeln!(file, "{line}")?;
        }
        println!("trace written to {} ({} steps)", path.display(), trace.steps.len());
    }
    Ok(identity_ok && split_ok)
}

fn load_plan(config: &ScenarioConfig) -> Result<FactorizationPlan, CliError> {
    let factors = config.parsed_factors()?;
    Ok(plan_factorization(&factors, &config.plan_overrides())?)
}

fn write_report(path: &Path, report: &Report) -> Result<(), CliError> {
    fs::write(path, report.to_json())?;
    Ok(())
}

/// `factorize --config PATH --out PATH`: build the plan and write its
/// summary (no numeric verification).
pub fn cmd_factorize(config_path: &Path, out: &Path) -> Result<bool, CliError> {
    let config = ScenarioConfig::from_path(config_path)?;
    let plan = load_plan(&config)?;
    let report = Report {
        plan: PlanSummary::from_plan(&plan),
        displacement: None,
        composition: None,
        calabi: None,
        environment: Environment::from_config(&config),
    };
    write_report(out, &report)?;
    println!(
        "plan: m={} r={:.6} L={:.6}; three autonomous factors with {}+{}+{} letters",
        plan.m(),
        plan.spec.r,
        plan.spec.l,
        plan.a1.len(),
        plan.a2.len(),
        plan.a3.len()
    );
    Ok(true)
}

/// `verify --config PATH --out PATH`: full numeric verification; exit 0 iff
/// the composition meets its tolerance and the displacement check passes.
pub fn cmd_verify(config_path: &Path, out: &Path) -> Result<bool, CliError> {
    let config = ScenarioConfig::from_path(config_path)?;
    let cfg = config.integrator_config()?;
    let plan = load_plan(&config)?;
    let v = &config.verification;

    let displacement = verify_displacement(
        &plan.h,
        &plan.spec,
        v.samples,
        v.seed.wrapping_add(1),
        &cfg,
    )
    .map_err(PlanError::from)?;
    let composition = verify_factorization(
        &plan,
        v.samples,
        v.tolerance,
        v.seed,
        &cfg,
        v.deep_conjugation_points,
    )?;
    let spacing = config
        .calabi
        .grid_spacing
        .unwrap_or_else(|| default_grid_spacing(plan.spec.r));
    let calabi = calabi_of_plan(&plan, spacing, config.calabi.volume_check, &cfg)?;

    let pass = composition.pass && displacement.pass;
    println!(
        "composition: max error {:.3e} (tolerance {:.1e}) over {} samples -> {}",
        composition.max_error,
        composition.tolerance,
        composition.samples,
        if composition.pass { "OK" } else { "FAILED" }
    );
    println!(
        "displacement: min separation {:.6} (needs {:.6}), translation deviation {:.3e} -> {}",
        displacement.min_cloud_separation,
        displacement.required_separation,
        displacement.max_translation_deviation,
        if displacement.pass { "OK" } else { "FAILED" }
    );

    let report = Report {
        plan: PlanSummary::from_plan(&plan),
        displacement: Some(displacement),
        composition: Some(composition),
        calabi: Some(CalabiSection {
            report: calabi,
            balance: None,
        }),
        environment: Environment::from_config(&config),
    };
    write_report(out, &report)?;
    Ok(pass)
}

/// `calabi --config PATH --out PATH`: Calabi values of the plan, optionally
/// after balancing the displacing Hamiltonian to Calabi zero.
pub fn cmd_calabi(config_path: &Path, out: &Path) -> Result<bool, CliError> {
    let config = ScenarioConfig::from_path(config_path)?;
    let cfg = config.integrator_config()?;
    let plan = load_plan(&config)?;
    let spacing = config
        .calabi
        .grid_spacing
        .unwrap_or_else(|| default_grid_spacing(plan.spec.r));

    let (plan, balance) = if config.calabi.balance {
        let balanced = balance_calabi(&plan, spacing)?;
        let summary = BalanceSummary {
            kappa: balanced.kappa,
            kernel_sum: balanced.kernel_sum,
            displacing_residual: balanced.displacing_residual,
        };
        (balanced.plan, Some(summary))
    } else {
        (plan, None)
    };

    let section = calabi_of_plan(&plan, spacing, config.calabi.volume_check, &cfg)?;
    let mut pass = section.glued_vs_sum_ok;
    if balance.is_some() {
        pass = pass
            && section.a1.abs() <= 1e-5
            && section.a2.abs() <= 1e-5
            && section.a3.abs() <= 1e-5;
    }
    println!(
        "calabi: sum of factors {:.6e}, glued {:.6e} (additivity error {:.3e})",
        section.factor_sum, section.glued.value, section.glued_vs_sum_error
    );
    if let Some(b) = &balance {
        println!(
            "balanced: kappa {:.6e}, residual Cal(H') {:.3e}; |Cal(A1)|={:.3e} |Cal(A2)|={:.3e} |Cal(A3)|={:.3e}",
            b.kappa,
            b.displacing_residual,
            section.a1.abs(),
            section.a2.abs(),
            section.a3.abs()
        );
    }

    let report = Report {
        plan: PlanSummary::from_plan(&plan),
        displacement: None,
        composition: None,
        calabi: Some(CalabiSection {
            report: section,
            balance,
        }),
        environment: Environment::from_config(&config),
    };
    write_report(out, &report)?;
    Ok(pass)
}

/// `trace --config PATH --point "v1,...,v2n" --which NAME --out PATH`:
/// CSV of the orbit of `point` under the chosen word, one row per accepted
/// integrator substep.
pub fn cmd_trace(
    config_path: &Path,
    point_text: &str,
    which: &str,
    out: &Path,
) -> Result<bool, CliError> {
    let config = ScenarioConfig::from_path(config_path)?;
    let cfg = config.integrator_config()?;
    let plan = load_plan(&config)?;

    let point: Vec<f64> = point_text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("bad --point: {e}")))?;
    if point.len() != 2 * config.n {
        return Err(CliError::Usage(format!(
            "--point needs {} coordinates for n = {}, got {}",
            2 * config.n,
            config.n,
            point.len()
        )));
    }

    let word = match which.to_ascii_lowercase().as_str() {
        "f" => plan.f_word.clone(),
        "a1" => plan.a1.clone(),
        "a2" => plan.a2.clone(),
        "a3" => plan.a3.clone(),
        "h" => plan.h.clone(),
        other => {
            return Err(CliError::Usage(format!(
                "--which must be one of f, A1, A2, A3, h; got {other:?}"
            )))
        }
    };

    let mut file = std::io::BufWriter::new(fs::File::create(out)?);
    let mut header = String::from("t");
    for i in 1..=config.n {
        header.push_str(&format!(",x{i},y{i}"));
    }
    writeln!(file, "{header}")?;
    let mut write_row = |t: f64, z: &[f64]| {
        let mut row = format!("{t}");
        for v in z {
            row.push_str(&format!(",{v}"));
        }
        let _ = writeln!(file, "{row}");
    };
    write_row(0.0, &point);
    evaluate_word_traced(&word, &point, &cfg, &mut write_row)
        .map_err(PlanError::from)?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        fs::write(&path, body).unwrap();
        path
    }

    fn quick_config() -> String {
        // One gentle bump, few samples, coarse-ish step: fast but real.
        r#"{
            "n": 1,
            "factors": ["0.5*bump(x1/0.8)*bump(y1/0.8)"],
            "integrator": { "step": 0.002 },
            "verification": { "samples": 40, "seed": 7, "tolerance": 0.001 }
        }"#
        .to_string()
    }

    #[test]
    fn identity_command_exit_codes() {
        assert!(cmd_identity(1, None).unwrap());
        assert!(cmd_identity(5, None).unwrap());
        let err = cmd_identity(0, None).unwrap_err();
        assert_eq!(exit_code(&Err(err)), 2);
    }

    #[test]
    fn factorize_and_verify_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(dir.path(), "scenario.json", &quick_config());
        let out = dir.path().join("plan.json");
        assert!(cmd_factorize(&config, &out).unwrap());
        let text = fs::read_to_string(&out).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["plan"]["m"], 1);
        assert!(value["composition"].is_null());

        let out2 = dir.path().join("verify.json");
        assert!(cmd_verify(&config, &out2).unwrap());
        let value: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&out2).unwrap()).unwrap();
        assert_eq!(value["composition"]["pass"], true);
        assert_eq!(value["displacement"]["pass"], true);
    }

    #[test]
    fn verify_reports_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(dir.path(), "scenario.json", &quick_config());
        let out1 = dir.path().join("a.json");
        let out2 = dir.path().join("b.json");
        cmd_verify(&config, &out1).unwrap();
        cmd_verify(&config, &out2).unwrap();
        assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());
    }

    #[test]
    fn short_translation_fails_with_exit_one() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"{
            "n": 1,
            "factors": ["0.5*bump(x1/0.8)*bump(y1/0.8)"],
            "displacement": { "l": 1.231370849898476, "allow_short_translation": true },
            "integrator": { "step": 0.002 },
            "verification": { "samples": 30, "seed": 7, "tolerance": 0.001 }
        }"#;
        let config = write_config(dir.path(), "short.json", body);
        let out = dir.path().join("short.json.out");
        let result = cmd_verify(&config, &out);
        assert_eq!(exit_code(&result), 1, "{result:?}");
        let value: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(value["displacement"]["analytic_disjoint"], false);
        assert_eq!(value["displacement"]["pass"], false);
    }

    #[test]
    fn missing_config_is_usage_error() {
        let result = cmd_verify(Path::new("/nonexistent/config.json"), Path::new("/tmp/x"));
        assert_eq!(exit_code(&result), 2);
    }

    #[test]
    fn unbounded_factor_is_construction_error() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(
            dir.path(),
            "bad.json",
            r#"{"n": 1, "factors": ["bump(x1)"]}"#,
        );
        let result = cmd_factorize(&config, &dir.path().join("out.json"));
        assert_eq!(exit_code(&result), 3, "{result:?}");
    }

    #[test]
    fn trace_of_displacement_is_a_straight_line() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(dir.path(), "scenario.json", &quick_config());
        let out = dir.path().join("orbit.csv");
        assert!(cmd_trace(&config, "0,0", "h", &out).unwrap());
        let text = fs::read_to_string(&out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,y1");
        let rows: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        assert!(rows.len() > 100);
        let l = 3.0 * ((0.8f64 * 0.8 * 2.0).sqrt() + 0.1);
        for row in &rows {
            // x1 = L * t along the orbit, y1 stays 0.
            assert!((row[1] - l * row[0]).abs() <= 1e-6);
            assert!(row[2].abs() <= 1e-9);
        }
        let last = rows.last().unwrap();
        assert!((last[0] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn trace_of_identity_map_is_constant() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(
            dir.path(),
            "id.json",
            r#"{"n": 1, "factors": ["0"], "verification": {"samples": 5}}"#,
        );
        let out = dir.path().join("orbit.csv");
        assert!(cmd_trace(&config, "0.25,-0.5", "f", &out).unwrap());
        let text = fs::read_to_string(&out).unwrap();
        for line in text.lines().skip(1) {
            let row: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(row[1], 0.25);
            assert_eq!(row[2], -0.5);
        }
    }

    #[test]
    fn trace_rejects_bad_arguments() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(dir.path(), "scenario.json", &quick_config());
        let out = dir.path().join("x.csv");
        assert_eq!(
            exit_code(&cmd_trace(&config, "1,2,3", "h", &out)),
            2,
            "wrong arity"
        );
        assert_eq!(
            exit_code(&cmd_trace(&config, "1,2", "g", &out)),
            2,
            "unknown word"
        );
    }

    #[test]
    fn calabi_command_with_balance() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"{
            "n": 1,
            "factors": [
                "0.5*bump(x1/0.4)*bump((y1-0.3)/0.4)",
                "-(0.5*bump(x1/0.4)*bump((y1+0.3)/0.4))"
            ],
            "calabi": { "balance": true }
        }"#;
        let config = write_config(dir.path(), "kernel.json", body);
        let out = dir.path().join("calabi.json");
        assert!(cmd_calabi(&config, &out).unwrap());
        let value: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert!(value["calabi"]["balance"]["kappa"].is_number());
        assert!(value["calabi"]["report"]["a1"].as_f64().unwrap().abs() <= 1e-5);
    }

    #[test]
    fn calabi_balance_refuses_non_kernel() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"{
            "n": 1,
            "factors": ["0.5*bump(x1/0.4)*bump(y1/0.4)"],
            "calabi": { "balance": true }
        }"#;
        let config = write_config(dir.path(), "nk.json", body);
        let result = cmd_calabi(&config, &dir.path().join("out.json"));
        assert_eq!(exit_code(&result), 2, "{result:?}");
    }
}
