use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::{json, Value};
use shiftshare_ri::montecarlo::{results_to_csv, ExperimentConfig, SchemeChoice, ShockLaw};
use shiftshare_ri::diagnostics::diagnose;
use shiftshare_ri::randomization::{group_size, SymmetryInterval};
use shiftshare_ri::{
    berger_boos_test, confidence_interval, exact_enumeration_test, load_design, ri_test,
    shift_share_estimate, Design, Error, IngestOptions, ReducedFormMode, Sidedness, Spec, Statistic,
    TestResult,
};

use crate::args::{CiCmd, DataArgs, DiagnoseCmd, EnumerateCmd, SidednessArg, SimulateCmd, SpecArgs, StatArg, TestCmd};
use crate::output::Report;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric_degeneracy() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn load(data: &DataArgs) -> CliResult<Design> {
    let options = IngestOptions {
        reduced_form: if data.reduced_form { ReducedFormMode::Force(true) } else { ReducedFormMode::Auto },
        use_clusters: true,
    };
    Ok(load_design(&data.outcomes, &data.exposures, &data.shocks, options)?)
}

fn build_spec(args: &SpecArgs) -> CliResult<Spec> {
    let choice = SchemeChoice::from_str(&args.scheme)?;
    if choice == SchemeChoice::Known {
        return Err(CliError::Usage(
            "scheme `known` needs a shock sampler and is only available through the library".into(),
        ));
    }
    // The shock law only matters for `known`, which is excluded above.
    let scheme = choice.resolve(ShockLaw::Normal { sd: 1.0 });
    let statistic = match args.stat {
        StatArg::T0 => Statistic::T0,
        StatArg::T1 => Statistic::T1,
        StatArg::T2 => Statistic::T2,
    };
    let sidedness = match args.sidedness {
        SidednessArg::TwoSided => Sidedness::TwoSidedAbs,
        SidednessArg::Right => Sidedness::RightTail,
        SidednessArg::Left => Sidedness::LeftTail,
        SidednessArg::EqualTail => Sidedness::EqualTail,
    };
    let spec = Spec::new(args.b, statistic, scheme)
        .with_draws(args.draws as usize)
        .with_alpha(args.alpha)
        .with_sidedness(sidedness)
        .with_seed(args.seed)
        .with_demean(args.demean)
        .with_cluster_robust(args.cluster_robust);
    spec.validate()?;
    Ok(spec)
}

fn header(command: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(1));
    m.insert("command".into(), json!(command));
    m
}

fn result_json(result: &TestResult, emit_draws: bool) -> Value {
    let mut v = serde_json::to_value(result).expect("test result serializes");
    if !emit_draws {
        if let Value::Object(m) = &mut v {
            m.remove("t_sims");
        }
    }
    v
}

const TEST_CSV_HEADER: &str = "b,statistic,scheme,sidedness,alpha,draws,exact,t_obs,p_value,reject,n_degenerate_redraws";

fn result_csv_row(r: &TestResult) -> String {
    let label = |v: Value| v.as_str().unwrap_or_default().to_string();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.b,
        label(json!(r.statistic)),
        r.scheme,
        label(json!(r.sidedness)),
        r.alpha,
        r.draws,
        r.exact,
        r.t_obs,
        r.p_value,
        r.reject,
        r.n_degenerate_redraws
    )
}

fn result_human(r: &TestResult, beta_hat: Option<f64>) -> String {
    let mut s = String::new();
    if let Some(bh) = beta_hat {
        let _ = writeln!(s, "estimate        {bh:.6}");
    }
    let _ = writeln!(s, "null b          {}", r.b);
    let _ = writeln!(s, "statistic       {:?} ({})", r.statistic, r.scheme);
    let kind = if r.exact { "group elements" } else { "draws" };
    let _ = writeln!(s, "{kind:<16}{}", r.draws);
    let _ = writeln!(s, "t_obs           {:.6}", r.t_obs);
    let _ = writeln!(s, "p-value         {:.6}", r.p_value);
    let verdict = if r.reject { "reject" } else { "do not reject" };
    let _ = writeln!(s, "decision        {verdict} at alpha = {}", r.alpha);
    if r.n_degenerate_redraws > 0 {
        let _ = writeln!(s, "degenerate      {}", r.n_degenerate_redraws);
    }
    s
}

pub fn test(cmd: &TestCmd) -> CliResult<Report> {
    let design = load(&cmd.data)?;
    let spec = build_spec(&cmd.spec)?;
    let result = ri_test(&design, &spec)?;
    let beta_hat = shift_share_estimate(&design).ok().map(|e| e.beta_hat);

    let mut out = header("test");
    out.insert("estimate".into(), json!(beta_hat));
    out.insert("result".into(), result_json(&result, cmd.emit_draws));
    let mut csv = format!("{TEST_CSV_HEADER}\n{}\n", result_csv_row(&result));
    let mut human = result_human(&result, beta_hat);

    if let (Some(lower), Some(upper)) = (cmd.bb_lower, cmd.bb_upper) {
        let set = SymmetryInterval {
            lower,
            upper,
            confidence: cmd.bb_confidence,
        };
        let bb = berger_boos_test(&design, &spec, set, cmd.bb_grid, cmd.bb_exact)?;
        out.insert("berger_boos".into(), json!({ "interval": set, "result": bb }));
        csv = format!(
            "{TEST_CSV_HEADER},bb_p_value,bb_sup_p,bb_gamma\n{},{},{},{}\n",
            result_csv_row(&result),
            bb.p_value,
            bb.sup_p,
            bb.gamma
        );
        let _ = writeln!(
            human,
            "berger-boos p   {:.6} (sup {:.6} over [{lower}, {upper}] + {:.4})",
            bb.p_value, bb.sup_p, bb.gamma
        );
    }
    Ok(Report {
        json: Value::Object(out),
        csv,
        human,
        warnings: Vec::new(),
    })
}

pub fn enumerate(cmd: &EnumerateCmd) -> CliResult<Report> {
    let design = load(&cmd.data)?;
    let spec = build_spec(&cmd.spec)?;
    let result = exact_enumeration_test(&design, &spec)?;
    let size = group_size(&spec.scheme, design.n_sectors(), design.n_clusters());
    let beta_hat = shift_share_estimate(&design).ok().map(|e| e.beta_hat);

    let mut out = header("enumerate");
    out.insert("estimate".into(), json!(beta_hat));
    out.insert("group_size".into(), json!(size.map(|s| s.to_string())));
    out.insert("result".into(), result_json(&result, cmd.emit_draws));
    Ok(Report {
        json: Value::Object(out),
        csv: format!("{TEST_CSV_HEADER}\n{}\n", result_csv_row(&result)),
        human: result_human(&result, beta_hat),
        warnings: Vec::new(),
    })
}

fn b_grid(cmd: &CiCmd) -> CliResult<Vec<f64>> {
    if let Some(grid) = &cmd.b_grid {
        return Ok(grid.clone());
    }
    match (cmd.b_min, cmd.b_max) {
        (Some(lo), Some(hi)) => {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(CliError::Usage(format!("--b-min ({lo}) must not exceed --b-max ({hi})")));
            }
            if cmd.b_steps == 0 {
                return Err(Error::EmptyGrid.into());
            }
            if cmd.b_steps == 1 {
                return Ok(vec![lo]);
            }
            let step = (hi - lo) / (cmd.b_steps - 1) as f64;
            Ok((0..cmd.b_steps)
                .map(|k| if k + 1 == cmd.b_steps { hi } else { lo + step * k as f64 })
                .collect())
        }
        _ => Err(CliError::Usage("give either --b-grid or both --b-min and --b-max".into())),
    }
}

pub fn ci(cmd: &CiCmd) -> CliResult<Report> {
    let design = load(&cmd.data)?;
    let spec = build_spec(&cmd.spec)?;
    let grid = b_grid(cmd)?;
    let set = confidence_interval(&design, &spec, &grid)?;

    let mut out = header("ci");
    out.insert("alpha".into(), json!(spec.alpha));
    out.insert("statistic".into(), json!(spec.statistic));
    out.insert("scheme".into(), json!(spec.scheme.label()));
    out.insert("draws".into(), json!(spec.draws));
    out.insert("seed".into(), json!(spec.seed));
    out.insert("set".into(), serde_json::to_value(&set).expect("confidence set serializes"));

    let mut csv = String::from("b,p_value\n");
    for p in &set.points {
        let _ = writeln!(csv, "{},{}", p.b, p.p_value);
    }

    let mut human = String::new();
    let level = 1.0 - spec.alpha;
    if set.empty {
        let _ = writeln!(human, "{level:.3} confidence set is empty on the grid");
    } else {
        let parts: Vec<String> = set.components.iter().map(|(a, b)| format!("[{a}, {b}]")).collect();
        let _ = writeln!(human, "{level:.3} confidence set: {}", parts.join(" U "));
        if set.disconnected {
            let _ = writeln!(human, "note: the set is not an interval on this grid");
        }
    }
    let mut warnings = Vec::new();
    if set.empty {
        warnings.push("confidence set is empty on the grid".to_string());
    }
    if let (Some(first), Some(last)) = (set.points.first(), set.points.last()) {
        if !first.reject || !last.reject {
            warnings.push("confidence set reaches the edge of the grid; widen it".to_string());
        }
    }
    Ok(Report {
        json: Value::Object(out),
        csv,
        human,
        warnings,
    })
}

pub fn diagnose_cmd(cmd: &DiagnoseCmd) -> CliResult<Report> {
    let design = load(&cmd.data)?;
    let spec = build_spec(&cmd.spec)?;
    let report = diagnose(&design, &spec, cmd.moment_draws)?;

    let mut out = header("diagnose");
    out.insert("b".into(), json!(spec.b));
    out.insert("scheme".into(), json!(spec.scheme.label()));
    out.insert("report".into(), serde_json::to_value(&report).expect("report serializes"));

    let scalars = [
        ("v_j", report.v_j),
        ("cond1", report.cond1),
        ("cond2", report.cond2),
        ("cond3", report.cond3),
        ("p3_strength", report.p3_strength),
        ("p3_cross", report.p3_cross),
        ("p3_quad", report.p3_quad),
        ("hhi", report.hhi),
        ("ks_distance", report.ks_distance),
    ];
    let mut csv = String::from("quantity,value\n");
    let mut human = String::new();
    for (name, value) in scalars {
        let _ = writeln!(csv, "{name},{value}");
        let _ = writeln!(human, "{name:<14}{value:.6}");
    }
    for w in &report.warnings {
        let _ = writeln!(human, "warning: {w}");
    }
    Ok(Report {
        json: Value::Object(out),
        csv,
        human,
        warnings: report.warnings.clone(),
    })
}

pub fn simulate(cmd: &SimulateCmd) -> CliResult<Report> {
    let mut config = ExperimentConfig::load(&cmd.config)?;
    if let Some(seed) = cmd.seed {
        config.seed = seed;
    }
    let results = config.run()?;

    let mut out = header("simulate");
    out.insert("seed".into(), json!(config.seed));
    out.insert("reps".into(), json!(config.reps));
    out.insert("results".into(), serde_json::to_value(&results).expect("results serialize"));

    let mut human = String::new();
    let _ = writeln!(human, "{:<28}{:>10}{:>10}{:>9}{:>7}", "method", "b", "reject", "mc se", "fail");
    let mut warnings = Vec::new();
    for r in &results {
        let _ = writeln!(
            human,
            "{:<28}{:>10.4}{:>10.4}{:>9.4}{:>7}",
            r.method, r.b, r.reject_rate, r.mc_se, r.failures
        );
        if r.invalid {
            warnings.push(format!("{} at b = {}: {} of {} replications failed", r.method, r.b, r.failures, r.reps));
        }
    }
    Ok(Report {
        json: Value::Object(out),
        csv: results_to_csv(&results),
        human,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn ci_cmd(extra: &[&str]) -> CiCmd {
        let mut argv = vec!["ssri", "ci", "--outcomes", "o", "--exposures", "e", "--shocks", "s"];
        argv.extend(extra);
        match crate::args::Cli::parse_from(argv).command {
            crate::args::Command::Ci(c) => c,
            _ => unreachable!(),
        }
    }

    #[test]
    fn grid_hits_both_ends() {
        let g = b_grid(&ci_cmd(&["--b-min", "-1", "--b-max", "0.3", "--b-steps", "14"])).unwrap();
        assert_eq!(g.len(), 14);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[13], 0.3);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b_grid(&ci_cmd(&["--b-min", "2", "--b-max", "2", "--b-steps", "1"])).unwrap(), vec![2.0]);
    }

    #[test]
    fn bad_grids() {
        assert!(b_grid(&ci_cmd(&["--b-min", "1", "--b-max", "0"])).is_err());
        assert!(b_grid(&ci_cmd(&[])).is_err());
        assert!(matches!(
            b_grid(&ci_cmd(&["--b-min", "0", "--b-max", "1", "--b-steps", "0"])),
            Err(CliError::Core(Error::EmptyGrid))
        ));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Core(Error::ZeroVariance).exit_code(), 3);
        assert_eq!(CliError::Core(Error::NotReducedForm).exit_code(), 2);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
    }
}
