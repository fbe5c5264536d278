use std::fs;
use std::path::Path;

use mcar_core::datamodel::{load_csv, write_csv, LoadOptions};
use mcar_core::harness::{
    expand_grid, parse_scenarios, result_rows, run_cell, write_results_csv, Scenario, Sweep,
};
use mcar_core::mcar::{TestKind, TestResult};
use mcar_core::synthesis::{DistributionSpec, Margin, MechanismSpec};
use mcar_core::Error;
use serde::Serialize;

use crate::{DistKind, Failure, GenerateArgs, InlineScenario, MarginArg, SimulateArgs, TestArgs};

pub fn parse_tests(list: &str) -> Result<Vec<TestKind>, Failure> {
    let tests: Vec<TestKind> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse().map_err(|e: Error| Failure::usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    if tests.is_empty() {
        return Err(Failure::usage("--tests names no test"));
    }
    Ok(tests)
}

fn parse_roles(spec: &str) -> Result<(Vec<String>, Vec<String>), Failure> {
    let (complete, incomplete) = spec
        .split_once(':')
        .ok_or_else(|| Failure::usage(format!("--roles '{spec}' must look like X1,X2:Y1")))?;
    let names = |s: &str| -> Vec<String> {
        s.split(',')
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .map(String::from)
            .collect()
    };
    Ok((names(complete), names(incomplete)))
}

fn check_alpha(alpha: f64) -> Result<(), Failure> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Failure::usage(format!("--alpha must lie in (0, 1], got {alpha}")))
    }
}

fn require_file(path: &Path, flag: &str) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!("{flag} {} is not a readable file", path.display())))
    }
}

#[derive(Serialize)]
struct ResultLine<'a> {
    method: &'a str,
    statistic: f64,
    df: usize,
    p_value: f64,
    alpha: f64,
    reject: bool,
    diagnostics: String,
}

fn write_test_results(results: &[TestResult], path: &Path) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::data(format!("cannot write {}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "json") {
        let text = serde_json::to_string_pretty(results).expect("results serialize");
        return fs::write(path, text + "\n").map_err(io);
    }
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
    for r in results {
        let diagnostics: Vec<String> = r.diagnostics.iter().map(|(k, v)| format!("{k}={v}")).collect();
        w.serialize(ResultLine {
            method: r.method.as_str(),
            statistic: r.statistic,
            df: r.df,
            p_value: r.p_value,
            alpha: r.alpha,
            reject: r.reject,
            diagnostics: diagnostics.join(";"),
        })
        .map_err(|e| Failure::data(e.to_string()))?;
    }
    w.flush().map_err(io)
}

pub fn cmd_test(a: TestArgs) -> Result<(), Failure> {
    check_alpha(a.alpha)?;
    require_file(&a.input, "--input")?;
    let tests = parse_tests(&a.tests)?;
    let opts = LoadOptions {
        na_tokens: a.na_tokens,
        roles: a.roles.as_deref().map(parse_roles).transpose()?,
    };
    let (ds, roles) = load_csv(&a.input, &opts)?;
    for t in &tests {
        t.check_dims(roles.p(), roles.q()).map_err(|e| match e {
            Error::Dimension(_) => Failure::usage(e.to_string()),
            other => Failure::from(other),
        })?;
    }
    let names = |idx: &[usize]| {
        idx.iter()
            .map(|&j| ds.names()[j].as_str())
            .collect::<Vec<_>>()
            .join(", ")
    };
    println!(
        "{} (n = {}; complete: {}; incomplete: {})",
        a.input.display(),
        ds.n_rows(),
        names(roles.complete()),
        names(roles.incomplete())
    );
    let mut results = Vec::with_capacity(tests.len());
    for t in &tests {
        let r = t.run(&ds, &roles, a.alpha)?;
        println!(
            "  {:<14} statistic = {:<12.6} df = {:<3} p-value = {:<10.6} {} at alpha = {}",
            r.method.as_str(),
            r.statistic,
            r.df,
            r.p_value,
            if r.reject { "MCAR rejected" } else { "MCAR not rejected" },
            r.alpha
        );
        results.push(r);
    }
    if let Some(out) = &a.out {
        write_test_results(&results, out)?;
    }
    Ok(())
}

fn mechanism_from_flags(f: &InlineScenario) -> Result<MechanismSpec, Failure> {
    let mech = match f.mechanism.as_str() {
        "mcar" => MechanismSpec::Mcar { prob: f.prob },
        "mar_1_to_x" => MechanismSpec::MarOneToX {
            prob: f.prob,
            odds: f.odds,
            controls: None,
        },
        "mar_rank" => MechanismSpec::MarRank {
            prob: f.prob,
            controls: None,
        },
        "mar_mean" => MechanismSpec::MarMean { rules: None },
        other => {
            return Err(Failure::usage(format!(
                "unknown mechanism '{other}' (expected mcar, mar_1_to_x, mar_rank, mar_mean)"
            )))
        }
    };
    Ok(mech)
}

fn distribution_from_flags(f: &InlineScenario) -> DistributionSpec {
    let dim = f.p + f.q;
    match f.dist {
        DistKind::StdNormal => DistributionSpec::StdNormal { dim },
        DistKind::Clayton => {
            let margin = match f.margin {
                MarginArg::Exp => Margin::Exp,
                MarginArg::Chisq4 => Margin::Chisq4,
                MarginArg::Uniform => Margin::Uniform,
            };
            DistributionSpec::clayton(dim, f.theta, margin)
        }
    }
}

/// Scenarios from `--scenario` or from the inline flags, with the seed
/// override applied.
fn load_scenarios(
    f: &InlineScenario,
    tests: &[TestKind],
    alpha: f64,
    sweep: Option<Sweep>,
) -> Result<Vec<(Scenario, Option<Sweep>)>, Failure> {
    let mut list = match &f.scenario {
        Some(path) => {
            require_file(path, "--scenario")?;
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
            parse_scenarios(&text)?
        }
        None => {
            let s = Scenario {
                distribution: distribution_from_flags(f),
                tests: tests.to_vec(),
                alpha,
                ..Scenario::new(f.p, f.q, f.n, mechanism_from_flags(f)?)
            };
            vec![(s, sweep)]
        }
    };
    for (s, _) in &mut list {
        if let Some(seed) = f.seed {
            s.master_seed = seed;
        }
        s.validate()?;
    }
    Ok(list)
}

pub fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    let list = load_scenarios(&a.scenario, &[TestKind::An], 0.05, None)?;
    let [(s, _)] = list.as_slice() else {
        return Err(Failure::usage("generate takes a scenario file with exactly one scenario"));
    };
    let (_, data) = s.replicate(0)?;
    write_csv(&data, &a.out, &a.na_token)?;
    let sidecar = a.out.with_extension("spec.json");
    let meta = serde_json::json!({
        "label": s.label,
        "distribution": s.distribution,
        "mechanism": s.mechanism,
        "p": s.p,
        "q": s.q,
        "n": s.n,
        "seed": s.master_seed,
        "na_token": a.na_token,
        "columns": s.column_names(),
    });
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(&sidecar, text + "\n")
        .map_err(|e| Failure::data(format!("cannot write {}: {e}", sidecar.display())))?;
    eprintln!("wrote {} and {}", a.out.display(), sidecar.display());
    Ok(())
}

pub fn cmd_simulate(a: SimulateArgs) -> Result<(), Failure> {
    if a.workers == 0 {
        return Err(Failure::usage("--workers must be at least 1"));
    }
    let tests = parse_tests(&a.tests)?;
    let sweep = match (a.sweep_prob.is_empty(), a.sweep_n.is_empty()) {
        (false, _) => Some(Sweep::MissProb(a.sweep_prob.clone())),
        (true, false) => Some(Sweep::N(a.sweep_n.clone())),
        (true, true) => None,
    };
    if sweep.is_some() && a.scenario.scenario.is_some() {
        return Err(Failure::usage("--sweep-prob/--sweep-n apply to inline scenarios only"));
    }
    let mut cells = Vec::new();
    for (mut s, sweep) in load_scenarios(&a.scenario, &tests, a.alpha, sweep)? {
        if let Some(r) = a.replications {
            s.replications = r;
        }
        match sweep {
            Some(sw) => cells.extend(expand_grid(&s, &sw)?),
            None => {
                s.validate()?;
                cells.push(s);
            }
        }
    }
    fs::create_dir_all(&a.out)
        .map_err(|e| Failure::usage(format!("cannot create {}: {e}", a.out.display())))?;

    let mut results = Vec::with_capacity(cells.len());
    for (i, s) in cells.iter().enumerate() {
        let cell = run_cell(s, a.workers)?;
        let rates: Vec<String> = cell
            .tallies
            .iter()
            .map(|t| format!("{}={:.4}", t.test, t.rejection_rate))
            .collect();
        eprintln!(
            "[{}/{}] {} {} {} n={} param={}: {}",
            i + 1,
            cells.len(),
            s.label,
            s.distribution,
            s.mechanism.name(),
            s.n,
            s.mechanism.prob().map_or("-".into(), |p| p.to_string()),
            rates.join(" ")
        );
        results.push(cell);
    }

    let csv_path = a.out.join("results.csv");
    let file = fs::File::create(&csv_path)
        .map_err(|e| Failure::data(format!("cannot write {}: {e}", csv_path.display())))?;
    write_results_csv(&result_rows(&results), file)?;
    let json_path = a.out.join("cells.json");
    let text = serde_json::to_string_pretty(&results).expect("cells serialize");
    fs::write(&json_path, text + "\n")
        .map_err(|e| Failure::data(format!("cannot write {}: {e}", json_path.display())))?;
    eprintln!("wrote {}", csv_path.display());
    Ok(())
}
