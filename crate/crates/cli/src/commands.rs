//! One function per subcommand. Each returns the process exit code on success.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use serde_json::json;
use wgadget::analysis::{
    check_decoupling_monotonicity, check_subspace_condition, self_energy_report,
};
use wgadget::gadget2::{
    build_gadget, desk_plan, plan_parameters, plan_parameters_unchecked, GadgetHamiltonian,
};
use wgadget::gadget3::{
    amplify, amplify_serial, build_direct_3body, build_serial_3body, direct_demo_report,
    DirectPlan, SerialPlan,
};
use wgadget::model::{TargetHamiltonian, PSD_TOL};
use wgadget::verify::{compare_spectra, sweep, write_csv, AlignMode, SweepBase, SweepParam};
use wgadget::GadgetError;

use crate::output::{
    emit, log_plan, read_gadget, read_target, CliError, CliResult, Envelope, EXIT_FAIL,
    EXIT_INTERRUPTED, EXIT_PASS,
};
use crate::{
    Align, AmplifyArgs, Build3Args, BuildArgs, Cli, Command, DemoArgs, DeskArgs, SelfEnergyArgs,
    SerialArgs, SubspaceArgs, SweepArgs, Vary, VerifyArgs,
};

/// Largest level count compared by default.
const DEFAULT_LEVEL_CAP: usize = 16;

static CANCEL: AtomicBool = AtomicBool::new(false);

pub fn run(cli: &Cli) -> CliResult<i32> {
    let start = Instant::now();
    let stamp = |mut e: Envelope| {
        if cli.timing {
            e.runtime_ms = Some(start.elapsed().as_millis());
        }
        e
    };
    match &cli.command {
        Command::Build(a) => build(a),
        Command::Build3(a) => build3(a),
        Command::Amplify(a) => amplify_cmd(a),
        Command::Verify(a) => verify(a, stamp),
        Command::Selfenergy(a) => selfenergy(a, stamp),
        Command::Subspace(a) => subspace(a, stamp),
        Command::Sweep(a) => sweep_cmd(a, cli.timing),
        Command::DirectDemo(a) => demo(a, stamp),
    }
}

impl DeskArgs {
    fn require(&self, op: &str) -> CliResult<(usize, usize, f64)> {
        match (self.r, self.c, self.j) {
            (Some(r), Some(c), Some(j)) => Ok((r, c, j)),
            _ => Err(CliError::Usage(format!(
                "{op}: --R, --C and --J are all required"
            ))),
        }
    }
}

impl SerialArgs {
    fn plan(&self, op: &str, r: usize, c: usize, eps: f64) -> CliResult<SerialPlan> {
        let (Some(d1), Some(d2)) = (self.delta1, self.delta2) else {
            return Err(CliError::Usage(format!(
                "{op}: --delta1 and --delta2 are required for 3-local targets"
            )));
        };
        let mut plan = SerialPlan::desk(d1, self.c1, r, c, d2, eps)?;
        plan.split_cap = self.split_cap;
        Ok(plan)
    }
}

fn default_levels(target: &TargetHamiltonian) -> usize {
    (1usize << target.n_qubits().min(8)).min(DEFAULT_LEVEL_CAP)
}

fn write_gadget(op: &str, g: &GadgetHamiltonian, out: Option<&std::path::Path>) -> CliResult<i32> {
    log_plan(op, &serde_json::to_value(&g.plan).expect("plans serialize"));
    tracing::info!(
        n_total = g.n_total,
        gap = g.gap,
        known_shift = g.known_shift,
        "built gadget"
    );
    emit(out, &g.to_json_string())?;
    Ok(EXIT_PASS)
}

fn build(a: &BuildArgs) -> CliResult<i32> {
    let mut target = read_target(&a.target)?;
    if a.psd_shift {
        let (shifted, amount) = target.with_psd_shift(PSD_TOL)?;
        tracing::info!(amount, "shifted h_else to be positive semidefinite");
        target = shifted;
    }
    if target.max_locality() == 3 {
        return Err(GadgetError::wrong_builder("build", "3-local input; use build3").into());
    }
    let plan = if a.desk {
        let (r, c, j) = a.desk_args.require("build")?;
        desk_plan(&target, r, c, j, a.eps)?
    } else if a.plan_only {
        plan_parameters_unchecked(&target, a.eps, a.d, (a.c_r, a.c_c))?
    } else {
        plan_parameters(&target, a.eps, a.d, (a.c_r, a.c_c))?
    };
    if a.plan_only {
        let v = serde_json::to_value(&plan).expect("plans serialize");
        log_plan("build", &v);
        emit(
            a.output.as_deref(),
            &serde_json::to_string_pretty(&v).expect("values serialize"),
        )?;
        return Ok(EXIT_PASS);
    }
    let g = build_gadget(&target, &plan)?;
    write_gadget("build", &g, a.output.as_deref())
}

fn build3(a: &Build3Args) -> CliResult<i32> {
    let target = read_target(&a.target)?;
    let g = if a.direct {
        let (r, c, j) = a.desk_args.require("build3 --direct")?;
        let mut plan = DirectPlan::desk(&target, r, c, j)?;
        plan.literal_field_sign = a.literal_field_sign;
        build_direct_3body(&target, &plan)?
    } else {
        let plan = a.serial.plan(
            "build3",
            a.desk_args.r.unwrap_or(1),
            a.desk_args.c.unwrap_or(1),
            a.eps,
        )?;
        build_serial_3body(&target, &plan)?
    };
    write_gadget("build3", &g, a.output.as_deref())
}

fn amplify_cmd(a: &AmplifyArgs) -> CliResult<i32> {
    let target = read_target(&a.target)?;
    let g = if target.max_locality() == 3 {
        let plan = a.serial.plan(
            "amplify",
            a.desk_args.r.unwrap_or(1),
            a.desk_args.c.unwrap_or(1),
            a.eps,
        )?;
        amplify_serial(&target, a.theta, &plan)?
    } else {
        let (r, c, j) = a.desk_args.require("amplify")?;
        amplify(&target, a.theta, &desk_plan(&target, r, c, j, a.eps)?)?
    };
    write_gadget("amplify", &g, a.output.as_deref())
}

fn verify(a: &VerifyArgs, stamp: impl Fn(Envelope) -> Envelope) -> CliResult<i32> {
    let mut target = read_target(&a.target)?;
    let g = read_gadget(&a.gadget)?;
    if a.theta != 1.0 {
        target = target.scaled(a.theta);
    }
    let levels = a.levels.unwrap_or_else(|| default_levels(&target));
    let align = match a.align {
        Align::KnownShift => AlignMode::KnownShift,
        Align::GroundEnergy => AlignMode::GroundEnergy,
    };
    let env = Envelope::new("verify", &g.plan);
    log_plan("verify", &env.plan);
    tracing::info!(levels, eps = a.eps, theta = a.theta, align = ?align, "verifying");
    let report = compare_spectra(&target, &g, levels, a.eps, align)?;
    tracing::info!(
        max_abs_error = report.max_abs_error,
        pass = report.pass,
        "verdict"
    );
    emit(a.output.as_deref(), &stamp(env).wrap(&report))?;
    Ok(if report.pass { EXIT_PASS } else { EXIT_FAIL })
}

fn selfenergy(a: &SelfEnergyArgs, stamp: impl Fn(Envelope) -> Envelope) -> CliResult<i32> {
    let target = read_target(&a.target)?;
    let g = read_gadget(&a.gadget)?;
    let env = Envelope::new("selfenergy", &g.plan);
    log_plan("selfenergy", &env.plan);
    tracing::info!(
        eps = a.eps,
        z_points = a.z_points,
        max_order = a.max_order,
        "self-energy grid"
    );
    let report = self_energy_report(&target, &g, a.eps, a.z_points, a.max_order)?;
    emit(a.output.as_deref(), &stamp(env).wrap(&report))?;
    Ok(if report.bound_violations == 0 {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}

fn subspace(a: &SubspaceArgs, stamp: impl Fn(Envelope) -> Envelope) -> CliResult<i32> {
    let g = read_gadget(&a.gadget)?;
    let env = Envelope::new("subspace", &g.plan);
    log_plan("subspace", &env.plan);
    tracing::info!(trials = a.trials, seed = a.seed, "subspace check");
    let report = check_subspace_condition(&g)?;
    let decoupling = if a.trials > 0 {
        Some(check_decoupling_monotonicity(&g, a.trials, a.seed)?)
    } else {
        None
    };
    let ok = report.ok && decoupling.as_ref().map_or(true, |d| d.all_hold);
    emit(
        a.output.as_deref(),
        &stamp(env).wrap(json!({"subspace": report, "decoupling": decoupling})),
    )?;
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

fn sweep_cmd(a: &SweepArgs, timing: bool) -> CliResult<i32> {
    let target = read_target(&a.target)?;
    let base = SweepBase {
        r: a.r,
        c: a.c,
        delta: a.delta,
        levels: a.levels.unwrap_or_else(|| default_levels(&target)),
        eps: a.eps,
    };
    let vary = match a.vary {
        Vary::Delta => SweepParam::Delta,
        Vary::J => SweepParam::J,
        Vary::R => SweepParam::R,
        Vary::C => SweepParam::C,
    };
    log_plan(
        "sweep",
        &json!({"base": base, "vary": vary.name(), "values": a.values}),
    );
    ctrlc::set_handler(|| CANCEL.store(true, Ordering::SeqCst)).map_err(|e| {
        CliError::Usage(format!("sweep: cannot install the interrupt handler: {e}"))
    })?;
    let table = sweep(&target, vary, &a.values, &base, timing, Some(&CANCEL));
    match &a.csv {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|source| CliError::Write {
                path: path.clone(),
                source,
            })?;
            write_csv(&table, file)?;
        }
        None => write_csv(&table, std::io::stdout().lock())?,
    }
    tracing::info!(rows = table.rows.len(), slope = ?table.slope, truncated = table.truncated, "sweep done");
    if table.truncated {
        return Ok(EXIT_INTERRUPTED);
    }
    Ok(if table.rows.iter().all(|r| r.pass) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}

fn demo(a: &DemoArgs, stamp: impl Fn(Envelope) -> Envelope) -> CliResult<i32> {
    let target = read_target(&a.target)?;
    let env = Envelope::new(
        "demo-appxC",
        json!({"R": a.r, "C": a.c, "deltas": a.deltas, "literal_field_sign": a.literal_field_sign}),
    );
    log_plan("demo-appxC", &env.plan);
    let report = direct_demo_report(
        &target,
        &a.deltas,
        a.r,
        a.c,
        a.literal_field_sign,
        &a.pathology_r,
    )?;
    emit(a.output.as_deref(), &stamp(env).wrap(&report))?;
    Ok(if report.residual_decreasing {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}
