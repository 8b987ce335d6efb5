use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use chargeplan::admm::{run_admm, save_convergence_csv};
use chargeplan::central::{solve_base_model, solve_centralized};
use chargeplan::datagen::{generate_instance, range_for_assignable_fraction};
use chargeplan::ingest::ingest;
use chargeplan::report::{build_report, round_assignments, PlanReport};
use chargeplan::solution::{Method, RunStatus, SolutionFile};
use chargeplan::sweep::{sweep_range, write_sweep_csv};
use chargeplan::{Instance, Solution};
use serde::Serialize;

use crate::config::{ReportFormat, RunConfig};
use crate::error::CliError;
use crate::{Cli, Command, GenerateArgs, MethodArg};

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    quiet: bool,
    name: &'static str,
}

impl Ctx {
    fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    fn write(&self, file: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        let p = self.path(file);
        fs::write(&p, contents).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    fn write_json<T: Serialize>(&self, file: &str, v: &T) -> Result<PathBuf, CliError> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))?;
        s.push('\n');
        self.write(file, s.as_bytes())
    }

    fn write_with<F>(&self, file: &str, f: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(BufWriter<fs::File>) -> Result<(), String>,
    {
        let p = self.path(file);
        let w = fs::File::create(&p).map_err(|e| CliError::io(&p, e))?;
        f(BufWriter::new(w)).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    /// Appends a timestamped line to the run log. Failures are ignored.
    fn log(&self, msg: impl AsRef<str>) {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        if let Ok(mut f) = fs::OpenOptions::new().create(true).append(true).open(self.path("chargeplan.log")) {
            let _ = writeln!(f, "{secs} {} {}", self.name, msg.as_ref());
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.generate.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    let name = match &cli.command {
        Command::Generate(_) => "generate",
        Command::Ingest { .. } => "ingest",
        Command::Solve { .. } => "solve",
        Command::SweepR { .. } => "sweep-r",
        Command::Report { .. } => "report",
        Command::Compare { .. } => "compare",
    };
    // flag overrides land in the config before it is written out
    match &cli.command {
        Command::Generate(a) => {
            if let Some(n) = a.locations {
                cfg.generate.n_locations = n;
            }
            if let Some(t) = a.slots {
                cfg.generate.n_slots = t;
            }
            if let Some(r) = a.range {
                cfg.generate.range_km = r;
            }
        }
        Command::SweepR { ranges, parallel, .. } => {
            if let Some(r) = ranges {
                cfg.sweep.ranges = r.clone();
            }
            cfg.sweep.parallel |= *parallel;
        }
        Command::Report { format, slots, .. } => {
            if let Some(f) = format {
                cfg.report.format = *f;
            }
            if slots.is_some() {
                cfg.report.options.slots = *slots;
            }
        }
        _ => {}
    }
    let out = cfg.output.dir.clone();
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let mut ctx = Ctx {
        cfg,
        out,
        quiet: cli.quiet,
        name,
    };
    let started = Instant::now();
    let result = match &cli.command {
        Command::Generate(a) => generate(&mut ctx, a),
        Command::Ingest { trips } => ingest_trips(&ctx, trips),
        Command::Solve { instance, method } => solve(&ctx, instance, *method),
        Command::SweepR { instance, .. } => sweep(&ctx, instance),
        Command::Report { solution, instance, .. } => report(&ctx, solution, instance),
        Command::Compare { instance } => compare(&ctx, instance),
    };
    let wall = started.elapsed().as_secs_f64() * 1e3;
    match &result {
        Ok(()) => ctx.log(format!("ok wall_ms={wall:.1}")),
        Err(e) => ctx.log(format!("exit={} wall_ms={wall:.1} {e}", e.exit_code())),
    }
    result
}

fn write_config(ctx: &Ctx) -> Result<(), CliError> {
    ctx.write(&format!("{}.config.toml", ctx.name), ctx.cfg.to_toml().as_bytes())?;
    Ok(())
}

fn load_instance(path: &Path) -> Result<(Instance, Vec<u8>), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::io(path, e))?;
    let inst = Instance::from_json(text).map_err(|e| CliError::io(path, e))?;
    Ok((inst, bytes))
}

fn generate(ctx: &mut Ctx, args: &GenerateArgs) -> Result<(), CliError> {
    let p = &mut ctx.cfg.generate;
    p.validate()?;
    if let Some(f) = args.assignable_fraction {
        if !(0.0..=1.0).contains(&f) {
            return Err(CliError::Config(format!("assignable fraction {f} outside [0, 1]")));
        }
        let probe = generate_instance(p)?;
        let d = probe
            .distance
            .as_ref()
            .ok_or_else(|| CliError::Internal("generated instance lacks distances".into()))?;
        p.range_km = range_for_assignable_fraction(d, f);
    }
    let inst = generate_instance(&ctx.cfg.generate)?;
    write_config(ctx)?;
    let path = ctx.write("instance.json", inst.to_json()?.as_bytes())?;
    ctx.say(format!(
        "wrote {} ({} locations, {} slots, range {} km)",
        path.display(),
        inst.n_locations,
        inst.n_slots,
        ctx.cfg.generate.range_km
    ));
    Ok(())
}

fn ingest_trips(ctx: &Ctx, trips: &Path) -> Result<(), CliError> {
    let file = fs::File::open(trips).map_err(|e| CliError::io(trips, e))?;
    let (inst, summary) = ingest(std::io::BufReader::new(file), &ctx.cfg.ingest.binning, &ctx.cfg.ingest.econ)?;
    write_config(ctx)?;
    let path = ctx.write("instance.json", inst.to_json()?.as_bytes())?;
    ctx.write_json("ingest_summary.json", &summary)?;
    ctx.say(format!(
        "wrote {} ({} zones, {} of {} records retained, {} pairs imputed)",
        path.display(),
        summary.zones,
        summary.records_retained,
        summary.rows_read,
        summary.imputed_pairs
    ));
    Ok(())
}

fn method_of(m: MethodArg) -> Method {
    match m {
        MethodArg::Centralized => Method::Centralized,
        MethodArg::Admm => Method::Admm,
        MethodArg::Base => Method::Base,
    }
}

fn summary_line(sol: &Solution) -> String {
    format!(
        "{}: total {:.6} (investment {:.6}, assignment {:.6}), {} iterations, feasible {}",
        sol.stats.method,
        sol.cost.total,
        sol.cost.investment,
        sol.cost.assignment,
        sol.stats.iterations,
        sol.feasibility.feasible
    )
}

fn solve(ctx: &Ctx, instance: &Path, method: MethodArg) -> Result<(), CliError> {
    let (inst, bytes) = load_instance(instance)?;
    let method = method_of(method);
    let sol = match method {
        Method::Centralized => solve_centralized(&inst, &ctx.cfg.solver)?,
        Method::Base => solve_base_model(&inst)?,
        Method::Admm => {
            let (sol, rep) = run_admm(&inst, &ctx.cfg.admm)?;
            let csv = ctx.path("convergence.csv");
            save_convergence_csv(&rep, &csv)?;
            ctx.log(format!("admm wall_ms={:.1} iterations={}", rep.wall_ms, rep.iterations));
            sol
        }
    };
    write_config(ctx)?;
    let file = SolutionFile::from_solution(&sol, &bytes);
    let path = ctx.write(&format!("solution_{method}.json"), file.to_json()?.as_bytes())?;
    ctx.say(summary_line(&sol));
    ctx.say(format!("wrote {}", path.display()));
    if sol.stats.status == RunStatus::NotConverged {
        return Err(CliError::NotConverged(format!(
            "stopped after {} iterations; best iterate written to {}",
            sol.stats.iterations,
            path.display()
        )));
    }
    if !sol.feasibility.feasible {
        return Err(CliError::Infeasible(format!(
            "plan violates constraints by up to {:e}; see {}",
            sol.feasibility.worst(),
            path.display()
        )));
    }
    Ok(())
}

fn sweep(ctx: &Ctx, instance: &Path) -> Result<(), CliError> {
    let (inst, _) = load_instance(instance)?;
    let rows = sweep_range(&inst, &ctx.cfg.sweep.ranges, &ctx.cfg.solver, ctx.cfg.sweep.parallel)?;
    write_config(ctx)?;
    let path = ctx.write_with("sweep.csv", |w| write_sweep_csv(&rows, w).map_err(|e| e.to_string()))?;
    for r in &rows {
        ctx.say(format!(
            "R={} km: investment {:.3}, assignment {:.3}, total {:.3}",
            r.range_km, r.investment, r.assignment, r.total
        ));
    }
    ctx.say(format!("wrote {}", path.display()));
    Ok(())
}

#[derive(Serialize)]
struct RoundingSummary<'a> {
    within_bound: bool,
    worst_capacity_excess: f64,
    feasibility: &'a chargeplan::Feasibility,
}

fn write_report(ctx: &Ctx, rep: &PlanReport, stem: &str) -> Result<Vec<PathBuf>, CliError> {
    Ok(match ctx.cfg.report.format {
        ReportFormat::Geojson => vec![ctx.write_json(&format!("{stem}.geojson"), &rep.to_geojson())?],
        ReportFormat::Csv => vec![
            ctx.write_with(&format!("{stem}_locations.csv"), |w| {
                rep.write_locations_csv(w).map_err(|e| e.to_string())
            })?,
            ctx.write_with(&format!("{stem}_flows.csv"), |w| {
                rep.write_flows_csv(w).map_err(|e| e.to_string())
            })?,
        ],
    })
}

fn report(ctx: &Ctx, solution: &Path, instance: &Path) -> Result<(), CliError> {
    let (inst, bytes) = load_instance(instance)?;
    let file = SolutionFile::<f64>::read(solution).map_err(|e| CliError::io(solution, e))?;
    if !file.matches_instance(&bytes) {
        return Err(CliError::Input(format!(
            "{} was not computed from {}",
            solution.display(),
            instance.display()
        )));
    }
    let (inv, asg) = file.plans()?;
    let opts = &ctx.cfg.report.options;
    let rep = build_report(&inst, &inv, &asg, opts)?;
    let rounding = round_assignments(&inst, &inv, &asg, ctx.cfg.solver.feasibility_tolerance)?;
    let rounded = build_report(&inst, &inv, &rounding.rounded, opts)?;
    write_config(ctx)?;
    let mut written = write_report(ctx, &rep, "report")?;
    written.extend(write_report(ctx, &rounded, "report_rounded")?);
    written.push(ctx.write_json(
        "rounding_check.json",
        &RoundingSummary {
            within_bound: rounding.within_bound,
            worst_capacity_excess: rounding.worst_capacity_excess,
            feasibility: &rounding.feasibility,
        },
    )?);
    ctx.say(format!(
        "{} locations, {} flows; rounded plan feasible {}, within bound {}",
        rep.locations.len(),
        rep.flows.len(),
        rounding.feasibility.feasible,
        rounding.within_bound
    ));
    for p in written {
        ctx.say(format!("wrote {}", p.display()));
    }
    Ok(())
}

#[derive(Serialize)]
struct MethodResult {
    method: Method,
    status: RunStatus,
    iterations: usize,
    investment: f64,
    assignment: f64,
    total: f64,
    feasible: bool,
}

impl From<&Solution> for MethodResult {
    fn from(s: &Solution) -> Self {
        MethodResult {
            method: s.stats.method,
            status: s.stats.status,
            iterations: s.stats.iterations,
            investment: s.cost.investment,
            assignment: s.cost.assignment,
            total: s.cost.total,
            feasible: s.feasibility.feasible,
        }
    }
}

#[derive(Serialize)]
struct Comparison {
    instance_sha256: String,
    results: Vec<MethodResult>,
    /// `(admm - centralized) / centralized`, percent.
    admm_gap_pct: f64,
    /// `(base - centralized) / base`, percent.
    joint_reduction_pct: f64,
}

fn pct(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den * 100.0
    }
}

fn compare(ctx: &Ctx, instance: &Path) -> Result<(), CliError> {
    let (inst, bytes) = load_instance(instance)?;
    let base = solve_base_model(&inst)?;
    let central = solve_centralized(&inst, &ctx.cfg.solver)?;
    let (admm, rep) = run_admm(&inst, &ctx.cfg.admm)?;
    ctx.log(format!("admm wall_ms={:.1} iterations={}", rep.wall_ms, rep.iterations));
    let cmp = Comparison {
        instance_sha256: chargeplan::solution::sha256_hex(&bytes),
        admm_gap_pct: pct(admm.cost.total - central.cost.total, central.cost.total),
        joint_reduction_pct: pct(base.cost.total - central.cost.total, base.cost.total),
        results: [&base, &central, &admm].into_iter().map(MethodResult::from).collect(),
    };
    write_config(ctx)?;
    let path = ctx.write_json("compare.json", &cmp)?;
    for s in [&base, &central, &admm] {
        ctx.say(summary_line(s));
    }
    ctx.say(format!(
        "joint vs base: {:.3}% lower; admm vs centralized: {:+.4}%",
        cmp.joint_reduction_pct, cmp.admm_gap_pct
    ));
    ctx.say(format!("wrote {}", path.display()));
    Ok(())
}
