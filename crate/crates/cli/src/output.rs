//! Run execution and artifact emission: evaluation logs, hypervolume
//! profiles, Pareto-front tables (CSV, hand-rolled for byte-stable output),
//! a replay manifest, and optional SVG figures / matrix / trajectory dumps.

use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use codesign_core::config::CaseStudy;
use codesign_core::eval::{build_design_qp, MpcController, TimingMode};
use codesign_core::fgm::derive_fixed_format;
use codesign_core::moo::{dominates, pareto_filter, Dominance};
use codesign_core::plant::{build_mass_spring_chain, discretize_zoh};
use codesign_core::sim::simulate;
use codesign_core::study::{run_study, shared_reference, StudyResult};
use codesign_core::{
    Algorithm, Arithmetic, DesignPoint, Error, ExperimentConfig, FgmConfig, Result,
};

use crate::svg::{self, Series};
use crate::RunArgs;

/// `println!` that tolerates a closed stdout (e.g. piping into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Shortest round-trip decimal form; identical inputs give identical bytes.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Stable-within-a-build digest of the config file text, for the manifest.
fn config_hash(text: &str) -> u64 {
    let mut h = DefaultHasher::new();
    text.hash(&mut h);
    h.finish()
}

fn f2_column(case: CaseStudy) -> &'static str {
    match case {
        CaseStudy::Cpu => "f2_solve_time_s",
        CaseStudy::Fpga => "f2_r_fpga",
    }
}

fn dim_names(cfg: &ExperimentConfig) -> Vec<&'static str> {
    cfg.design_space()
        .expect("validated config has a design space")
        .dims
        .iter()
        .map(|d| d.name)
        .collect()
}

fn evals_csv(cfg: &ExperimentConfig, result: &StudyResult) -> String {
    let mut s = String::from("# schema: evals-v1\n");
    let dims = dim_names(cfg);
    let _ = writeln!(
        s,
        "eval,{},f1_settling,{},constraint_time_s,violation,stability_ok,convexity_ok,feasible,timing_model",
        dims.join(","),
        f2_column(cfg.case_study)
    );
    for (i, entry) in result.archive.entries.iter().enumerate() {
        let coords: Vec<String> = entry.point.iter().map(|&v| fmt_f64(v)).collect();
        let e = &entry.eval;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            i,
            coords.join(","),
            fmt_f64(e.objectives[0]),
            fmt_f64(e.objectives[1]),
            fmt_f64(e.constraint_time),
            fmt_f64(e.violation),
            e.stability_ok,
            e.convexity_ok,
            e.feasible(),
            e.timing_model
        );
    }
    s
}

fn profile_csv(result: &StudyResult, y_ref: &[f64; 2]) -> String {
    let mut s = String::from("# schema: profile-v1\neval,hypervolume\n");
    for (i, hv) in result.archive.hypervolume_trace(y_ref).iter().enumerate() {
        let _ = writeln!(s, "{},{}", i, fmt_f64(*hv));
    }
    s
}

/// Front rows sorted by settling time ascending (table convention).
fn front_rows(result: &StudyResult) -> Vec<usize> {
    let mut idx = result.archive.front_indices();
    idx.sort_by(|&a, &b| {
        result.archive.entries[a].eval.objectives[0]
            .total_cmp(&result.archive.entries[b].eval.objectives[0])
    });
    idx
}

fn front_csv(cfg: &ExperimentConfig, result: &StudyResult) -> String {
    let mut s = String::from("# schema: front-v1\n");
    let dims = dim_names(cfg);
    let _ = writeln!(
        s,
        "{},f1_settling,{}",
        dims.join(","),
        f2_column(cfg.case_study)
    );
    for i in front_rows(result) {
        let entry = &result.archive.entries[i];
        let coords: Vec<String> = entry.point.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(
            s,
            "{},{},{}",
            coords.join(","),
            fmt_f64(entry.eval.objectives[0]),
            fmt_f64(entry.eval.objectives[1])
        );
    }
    s
}

fn run_stem(r: &StudyResult) -> String {
    format!("{}_seed{}", r.algorithm, r.seed)
}

pub fn execute_run(cfg: &ExperimentConfig, algos: &[Algorithm], args: &RunArgs) -> Result<()> {
    let timing_mode = if args.wallclock_timing {
        TimingMode::WallClock
    } else {
        TimingMode::Model
    };
    std::fs::create_dir_all(&args.out).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot create output dir {}: {e}", args.out.display()),
        ))
    })?;

    let mut results = Vec::new();
    for &seed in &cfg.seeds {
        for &algo in algos {
            eprintln!("running {} study, {algo}, seed {seed} ...", cfg.case_study);
            results.push(run_study(cfg, algo, seed, timing_mode)?);
        }
    }
    let y_ref = shared_reference(&results)
        .ok_or_else(|| Error::InfeasibleSpace("no feasible design found by any run".into()))?;

    let mut files = Vec::new();
    for r in &results {
        let stem = run_stem(r);
        for (name, contents) in [
            (format!("evals_{stem}.csv"), evals_csv(cfg, r)),
            (format!("profile_{stem}.csv"), profile_csv(r, &y_ref)),
            (format!("front_{stem}.csv"), front_csv(cfg, r)),
        ] {
            write_file(&args.out.join(&name), &contents)?;
            files.push(name);
        }
    }

    if args.svg {
        files.extend(write_svgs(cfg, &results, &y_ref, &args.out)?);
    }
    if args.dump_matrices || args.export_trajectories {
        if let Some(best) = best_design(&results) {
            if args.dump_matrices {
                files.extend(dump_matrices(cfg, &best, &args.out)?);
            }
            if args.export_trajectories {
                files.extend(export_trajectories(cfg, &best, &args.out)?);
            }
        }
    }

    let manifest = serde_json::json!({
        "schema": "manifest-v1",
        "case_study": cfg.case_study.to_string(),
        "budget": cfg.budget,
        "seeds": cfg.seeds,
        "algorithms": algos.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        "timing_mode": if args.wallclock_timing { "wallclock" } else { "model" },
        "config_source": args.config.as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "bundled".into()),
        "config_hash": config_hash(&config_text(&args.config, cfg.case_study)?),
        "y_ref": y_ref,
        "files": files,
    });
    write_file(
        &args.out.join("manifest.json"),
        &format!("{}\n", serde_json::to_string_pretty(&manifest).expect("manifest serializes")),
    )?;
    out!("wrote {} artifact(s) to {}", files.len() + 1, args.out.display());
    Ok(())
}

fn config_text(path: &Option<PathBuf>, case: CaseStudy) -> Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display()))),
        None => Ok(match case {
            CaseStudy::Cpu => codesign_core::config::DEFAULT_CPU_TOML.to_string(),
            CaseStudy::Fpga => codesign_core::config::DEFAULT_FPGA_TOML.to_string(),
        }),
    }
}

fn write_svgs(
    cfg: &ExperimentConfig,
    results: &[StudyResult],
    y_ref: &[f64; 2],
    out: &Path,
) -> Result<Vec<String>> {
    let f2 = f2_column(cfg.case_study);
    let mut scatter = Vec::new();
    let mut lines = Vec::new();
    for r in results {
        let color = match r.algorithm {
            Algorithm::BiMads => "#1f77b4",
            Algorithm::Lhs => "#d62728",
        };
        let front: Vec<[f64; 2]> = front_rows(r)
            .into_iter()
            .map(|i| r.archive.entries[i].eval.objectives)
            .collect();
        scatter.push(Series {
            label: run_stem(r),
            color,
            points: front,
            line: false,
        });
        let trace: Vec<[f64; 2]> = r
            .archive
            .hypervolume_trace(y_ref)
            .into_iter()
            .enumerate()
            .map(|(i, hv)| [(i + 1) as f64, hv])
            .collect();
        lines.push(Series {
            label: run_stem(r),
            color,
            points: trace,
            line: true,
        });
    }
    let fronts_path = out.join("fronts.svg");
    write_file(
        &fronts_path,
        &svg::plot(
            &format!("{} study: approximated Pareto fronts", cfg.case_study),
            "f1_settling",
            f2,
            &scatter,
        ),
    )?;
    let profiles_path = out.join("profiles.svg");
    write_file(
        &profiles_path,
        &svg::plot(
            &format!("{} study: hypervolume vs evaluations", cfg.case_study),
            "evaluations",
            "hypervolume",
            &lines,
        ),
    )?;
    Ok(vec!["fronts.svg".into(), "profiles.svg".into()])
}

/// Feasible nondominated design with the smallest settling objective, across
/// all runs of this invocation.
fn best_design(results: &[StudyResult]) -> Option<DesignPoint> {
    let mut best: Option<(f64, &[f64])> = None;
    for r in results {
        for i in r.archive.front_indices() {
            let e = &r.archive.entries[i];
            if best.is_none() || e.eval.objectives[0] < best.as_ref().unwrap().0 {
                best = Some((e.eval.objectives[0], &e.point));
            }
        }
    }
    best.and_then(|(_, p)| DesignPoint::from_vector(p).ok())
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

fn dump_matrices(cfg: &ExperimentConfig, p: &DesignPoint, out: &Path) -> Result<Vec<String>> {
    let plant = build_mass_spring_chain(&cfg.chain()?)?;
    let qp = build_design_qp(&plant, p.t_s, p.horizon, p.q_speed, cfg.ocp.u_min, cfg.ocp.u_max)?;
    let model = discretize_zoh(&plant, p.t_s)?;
    let mut files = Vec::new();
    for (name, m) in [
        ("hessian.csv", &qp.h_mat),
        ("gradient_map.csv", &qp.g_map),
        ("a_discrete.csv", &model.a),
        ("b_discrete.csv", &model.b),
    ] {
        write_file(&out.join(name), &matrix_csv(m))?;
        files.push(name.to_string());
    }
    Ok(files)
}

fn export_trajectories(cfg: &ExperimentConfig, p: &DesignPoint, out: &Path) -> Result<Vec<String>> {
    let plant = build_mass_spring_chain(&cfg.chain()?)?;
    let qp = build_design_qp(&plant, p.t_s, p.horizon, p.q_speed, cfg.ocp.u_min, cfg.ocp.u_max)?;
    let fgm = match cfg.case_study {
        CaseStudy::Cpu => FgmConfig::double(p.n_fgm),
        CaseStudy::Fpga => {
            let n_frac = p
                .n_frac
                .ok_or_else(|| Error::Config("fpga design lacks n_frac".into()))?;
            let envelope = DVector::from_element(plant.n(), cfg.fpga.state_envelope);
            FgmConfig {
                n_iterations: p.n_fgm,
                arithmetic: Arithmetic::Fixed(derive_fixed_format(&qp, n_frac, &envelope)?),
                warm_start: true,
            }
        }
    };
    let sim = cfg.simulation_config();
    let bank = cfg.initial_conditions(plant.n())?;
    let mut files = Vec::new();
    for (k, x0) in bank.iter().enumerate() {
        let mut controller = MpcController::new(&qp, plant.m(), p.t_s, &fgm)?;
        let traj = simulate(&plant, &mut controller, x0, &sim)?;
        let substeps_per_period = (p.t_s / traj.substep).round().max(1.0) as usize;
        let mut s = String::from("# schema: trajectory-v1\n");
        let _ = writeln!(
            s,
            "time,{},{}",
            (1..=plant.n()).map(|i| format!("x{i}")).collect::<Vec<_>>().join(","),
            (1..=plant.m()).map(|i| format!("u{i}")).collect::<Vec<_>>().join(",")
        );
        for (i, t) in traj.times.iter().enumerate() {
            let x = &traj.states[i];
            let u = &traj.inputs[(i / substeps_per_period).min(traj.inputs.len() - 1)];
            let xs: Vec<String> = x.iter().map(|&v| fmt_f64(v)).collect();
            let us: Vec<String> = u.iter().map(|&v| fmt_f64(v)).collect();
            let _ = writeln!(s, "{},{},{}", fmt_f64(*t), xs.join(","), us.join(","));
        }
        let name = format!("trajectory_ic{}.csv", k + 1);
        write_file(&out.join(&name), &s)?;
        files.push(name);
    }
    Ok(files)
}

// ---------------------------------------------------------------------------
// Reading runs back (compare / report).

struct LoadedRun {
    case_study: String,
    /// Per evaluation file: (file stem, feasible objective pairs).
    runs: Vec<(String, Vec<[f64; 2]>)>,
}

fn read_csv_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: empty CSV", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Ok((header, rows))
}

fn load_run(dir: &Path) -> Result<LoadedRun> {
    let manifest_text = std::fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| Error::Config(format!("{}: not a run directory: {e}", dir.display())))?;
    let manifest: serde_json::Value = serde_json::from_str(&manifest_text)
        .map_err(|e| Error::Config(format!("{}: bad manifest: {e}", dir.display())))?;
    let case_study = manifest["case_study"]
        .as_str()
        .ok_or_else(|| Error::Config("manifest lacks case_study".into()))?
        .to_string();
    let mut runs = Vec::new();
    for f in manifest["files"].as_array().into_iter().flatten() {
        let name = f.as_str().unwrap_or_default();
        let Some(stem) = name.strip_prefix("evals_").and_then(|s| s.strip_suffix(".csv")) else {
            continue;
        };
        let (header, rows) = read_csv_rows(&dir.join(name))?;
        let col = |want: &str| {
            header
                .iter()
                .position(|h| h == want || (want == "f2" && h.starts_with("f2_")))
                .ok_or_else(|| Error::Config(format!("{name}: missing column {want}")))
        };
        let (c_f1, c_f2, c_feas) = (col("f1_settling")?, col("f2")?, col("feasible")?);
        let mut objectives = Vec::new();
        for row in rows {
            if row[c_feas] == "true" {
                let f1: f64 = row[c_f1].parse().unwrap_or(f64::INFINITY);
                let f2: f64 = row[c_f2].parse().unwrap_or(f64::INFINITY);
                objectives.push([f1, f2]);
            }
        }
        runs.push((stem.to_string(), objectives));
    }
    if runs.is_empty() {
        return Err(Error::Config(format!(
            "{}: manifest lists no evaluation logs",
            dir.display()
        )));
    }
    Ok(LoadedRun { case_study, runs })
}

fn union_front(run: &LoadedRun) -> Vec<[f64; 2]> {
    let all: Vec<[f64; 2]> = run.runs.iter().flat_map(|(_, o)| o.iter().copied()).collect();
    pareto_filter(&all).into_iter().map(|i| all[i]).collect()
}

/// Fraction of `a`'s front points strongly dominated by some point of `b`.
fn dominated_fraction(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let hit = a
        .iter()
        .filter(|y| b.iter().any(|o| dominates(o, y) == Dominance::Strong))
        .count();
    hit as f64 / a.len() as f64
}

pub fn compare_runs(dir_a: &Path, dir_b: &Path, out: Option<&Path>) -> Result<()> {
    let a = load_run(dir_a)?;
    let b = load_run(dir_b)?;
    if a.case_study != b.case_study {
        return Err(Error::Config(format!(
            "case-study mismatch: {} is {}, {} is {}",
            dir_a.display(),
            a.case_study,
            dir_b.display(),
            b.case_study
        )));
    }
    let front_a = union_front(&a);
    let front_b = union_front(&b);

    // Joint reference: componentwise worst feasible point of either run + 5%.
    let mut worst = [f64::NEG_INFINITY; 2];
    for y in a.runs.iter().chain(b.runs.iter()).flat_map(|(_, o)| o.iter()) {
        worst[0] = worst[0].max(y[0]);
        worst[1] = worst[1].max(y[1]);
    }
    if !worst[0].is_finite() {
        return Err(Error::InfeasibleSpace(
            "neither run archived a feasible design".into(),
        ));
    }
    let y_ref = [
        worst[0] + 0.05 * worst[0].abs().max(1.0),
        worst[1] + 0.05 * worst[1].abs().max(1.0),
    ];
    let hv_a = codesign_core::moo::hypervolume_2d(&front_a, &y_ref);
    let hv_b = codesign_core::moo::hypervolume_2d(&front_b, &y_ref);
    let dom_ab = dominated_fraction(&front_a, &front_b);
    let dom_ba = dominated_fraction(&front_b, &front_a);

    out!("case study:        {}", a.case_study);
    out!("joint y_ref:       [{}, {}]", fmt_f64(y_ref[0]), fmt_f64(y_ref[1]));
    out!("hypervolume A:     {} ({} front points)", fmt_f64(hv_a), front_a.len());
    out!("hypervolume B:     {} ({} front points)", fmt_f64(hv_b), front_b.len());
    out!("A dominated by B:  {:.1}% of front points", 100.0 * dom_ab);
    out!("B dominated by A:  {:.1}% of front points", 100.0 * dom_ba);
    out!(
        "verdict:           {}",
        if hv_a > hv_b { "A covers more objective space" }
        else if hv_b > hv_a { "B covers more objective space" }
        else { "tie" }
    );

    if let Some(out) = out {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let mut s = String::from("# schema: comparison-v1\n");
        s.push_str("run,hypervolume,front_size,fraction_dominated_by_other\n");
        let _ = writeln!(s, "A,{},{},{}", fmt_f64(hv_a), front_a.len(), fmt_f64(dom_ab));
        let _ = writeln!(s, "B,{},{},{}", fmt_f64(hv_b), front_b.len(), fmt_f64(dom_ba));
        write_file(out, &s)?;
    }
    Ok(())
}

pub fn report_run(dir: &Path) -> Result<()> {
    let manifest_text = std::fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| Error::Config(format!("{}: not a run directory: {e}", dir.display())))?;
    let manifest: serde_json::Value = serde_json::from_str(&manifest_text)
        .map_err(|e| Error::Config(format!("{}: bad manifest: {e}", dir.display())))?;
    out!("case study: {}", manifest["case_study"].as_str().unwrap_or("?"));
    out!("budget:     {}", manifest["budget"]);
    out!("seeds:      {}", manifest["seeds"]);
    out!("y_ref:      {}", manifest["y_ref"]);
    for f in manifest["files"].as_array().into_iter().flatten() {
        let name = f.as_str().unwrap_or_default();
        let Some(stem) = name.strip_prefix("front_").and_then(|s| s.strip_suffix(".csv")) else {
            continue;
        };
        let (header, rows) = read_csv_rows(&dir.join(name))?;
        out!("\n[{stem}] Pareto front, settling time ascending:");
        out!("  {}", header.join("  "));
        for row in rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c.parse::<f64>() {
                    Ok(v) if c.contains('.') => format!("{v:.6}"),
                    _ => c.clone(),
                })
                .collect();
            out!("  {}", cells.join("  "));
        }
    }
    Ok(())
}
