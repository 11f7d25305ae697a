//! The subcommands. Each writes its outputs and a manifest into the output
//! directory and returns a JSON summary.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};
use sqg_core::bounds::{absorbing_radii, admissible_l, calibrate, compute_determining_q, l_threshold};
use sqg_core::checkpoint::Checkpoint;
use sqg_core::experiments::{
    force_perturbation_run, format_float, gronwall_check, threshold_sweep, twin_sync_run, DecayDiagnostics,
    SyncResult,
};
use sqg_core::spectral::random_field;
use sqg_core::timestepper::{energy_budget, simulate, Trajectory};
use sqg_core::validation::{run_suite, SuiteSize};

use crate::config::Resolved;
use crate::error::{HarnessError, Result};
use crate::manifest::{digest_file, now, RunManifest};

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const CHECKPOINT_FILE: &str = "final.ckpt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    TwinSync,
    Perturb,
    Sweep,
    Validate,
    Bounds,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::TwinSync => "twin-sync",
            Command::Perturb => "perturb",
            Command::Sweep => "sweep",
            Command::Validate => "validate",
            Command::Bounds => "bounds",
        }
    }

    pub fn needs_config(self) -> bool {
        self != Command::Validate
    }
}

struct Output<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl<'a> Output<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        Ok(Output { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("summaries always serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

/// Runs `command`, writing into `out`. `config` may be `None` only for `validate`.
pub fn dispatch(command: Command, config: Option<&Resolved>, out: &Path) -> Result<Value> {
    let started = now();
    let mut output = Output::new(out)?;
    let need = || config.ok_or_else(|| HarnessError::config("--config", format!("`{}` needs a config", command.name())));
    let result = match command {
        Command::Simulate => run_simulate(need()?, &mut output),
        Command::TwinSync => run_twin(need()?, &mut output, false),
        Command::Perturb => run_twin(need()?, &mut output, true),
        Command::Sweep => run_sweep(need()?, &mut output),
        Command::Validate => run_validate(&mut output),
        Command::Bounds => run_bounds(need()?, &mut output),
    };
    let files = output
        .files
        .iter()
        .map(|f| digest_file(out, f))
        .collect::<Result<Vec<_>>>()?;
    RunManifest {
        command: command.name().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: now(),
        config: config.map(|c| c.config.clone()),
        files,
    }
    .write(out)?;
    result
}

pub fn trajectory_csv(traj: &Trajectory, shell_norms: &[Vec<f64>]) -> String {
    let mut out = String::from("t,step,l2,linf,dissipation,force_work");
    let shells = shell_norms.first().map_or(0, |n| n.len());
    for q in -1..shells as i32 - 1 {
        let _ = write!(out, ",shell_q{q}_norm");
    }
    out.push('\n');
    for (s, norms) in traj.samples.iter().zip(shell_norms) {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            format_float(s.t),
            s.step,
            format_float(s.l2),
            format_float(s.linf),
            format_float(s.dissipation),
            format_float(s.force_work)
        );
        for n in norms {
            let _ = write!(out, ",{}", format_float(*n));
        }
        out.push('\n');
    }
    out
}

fn run_simulate(r: &Resolved, out: &mut Output) -> Result<Value> {
    let x = &r.config.experiment;
    let shells = r.shells();
    let l = r.params.l;
    let theta0 = random_field(r.domain, x.seed, &r.twin.initial)?;
    let mut norms = vec![shells.shell_norms(&theta0, l)?];
    let mut failure = None;
    let traj = simulate(&theta0, &r.params, x.horizon, &r.simulation(), &mut |s, _| {
        match shells.shell_norms(&s.theta, l) {
            Ok(n) => norms.push(n),
            Err(e) => failure = failure.take().or(Some(e)),
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    out.write(TRAJECTORY_CSV, trajectory_csv(&traj, &norms).as_bytes())?;
    let ckpt = Checkpoint {
        field: traj.final_state.theta.clone(),
        t: traj.final_state.t,
        alpha: r.params.alpha,
        nu: r.params.nu,
    };
    out.write(CHECKPOINT_FILE, &ckpt.to_bytes())?;
    let budget = energy_budget(&traj.energy_series(), r.params.nu).ok();
    let calibration = match calibrate(&traj, &r.params, &r.config.constants) {
        Ok(c) => json!({ "constants": c }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let last = traj.samples.last().expect("simulate records the initial sample");
    let summary = json!({
        "command": "simulate",
        "seed": x.seed,
        "dt": traj.dt,
        "steps": traj.final_state.step_count,
        "t_final": traj.final_state.t,
        "l2_final": last.l2,
        "linf_final": last.linf,
        "energy_budget_residual": budget,
        "calibration": calibration,
    });
    out.json("simulate.json", &summary)?;
    Ok(summary)
}

/// Gronwall check over the uniformly spaced samples of a sync run.
pub fn sync_gronwall(r: &SyncResult, resolved: &Resolved) -> Result<Value> {
    let mut diag = DecayDiagnostics::from_sync(r, &resolved.params, &resolved.twin.gronwall);
    let step = r.dt * resolved.twin.cadence as f64;
    let n = diag.times.len();
    if n >= 3 {
        let last = diag.times[n - 1] - diag.times[n - 2];
        if (last - step).abs() > 1e-9 * step {
            diag.times.pop();
            diag.xi.pop();
            diag.psi.pop();
        }
    }
    let slack = resolved.config.experiment.gronwall_slack;
    Ok(match gronwall_check(&diag, step, slack) {
        Ok(g) => json!({ "holds": g.holds, "max_violation": g.max_violation, "slack": slack, "phi": diag.phi }),
        Err(e) => json!({ "error": e.to_string() }),
    })
}

pub fn sync_summary(r: &SyncResult, resolved: &Resolved) -> Result<Value> {
    Ok(json!({
        "q": r.q,
        "q_max": r.q_max,
        "l": r.l,
        "projection": r.projection,
        "seed1": resolved.twin.seed1,
        "seed2": resolved.twin.seed2,
        "dt": r.dt,
        "slaving_start": r.slaving_start,
        "entry_time": r.entry_time,
        "rinfty": r.rinfty,
        "samples": r.times.len(),
        "besov_w_initial": r.besov_w[0],
        "besov_w_final": r.besov_w.last(),
        "decay_ratio": r.decay_ratio(),
        "decades": r.decades(),
        "fit": r.fit,
        "verdict": r.verdict,
        "gronwall": sync_gronwall(r, resolved)?,
    }))
}

fn run_twin(r: &Resolved, out: &mut Output, perturbed: bool) -> Result<Value> {
    let (result, stem) = if perturbed {
        let p = r
            .perturbation
            .as_ref()
            .ok_or_else(|| HarnessError::config("experiment.perturbation", "`perturb` needs an [experiment.perturbation] table"))?;
        (force_perturbation_run(&r.twin, p)?, "perturb")
    } else {
        (twin_sync_run(&r.twin)?, "sync")
    };
    out.write(&format!("{stem}.csv"), result.to_csv().as_bytes())?;
    let mut summary = sync_summary(&result, r)?;
    summary["command"] = json!(if perturbed { "perturb" } else { "twin-sync" });
    if let Some(p) = &r.perturbation {
        if perturbed {
            summary["perturbation"] = json!({ "epsilon": p.epsilon, "gamma": p.gamma });
        }
    }
    out.json(&format!("{stem}.json"), &summary)?;
    Ok(summary)
}

fn run_sweep(r: &Resolved, out: &mut Output) -> Result<Value> {
    let sweep = threshold_sweep(&r.twin, &r.q_list)?;
    out.write("sweep.csv", sweep.to_csv().as_bytes())?;
    let summary = json!({
        "command": "sweep",
        "seed1": r.twin.seed1,
        "seed2": r.twin.seed2,
        "q_list": r.q_list,
        "q_crit": sweep.q_crit,
        "theoretical_q": sweep.theoretical_q,
        "rinfty": sweep.rinfty,
        "implied_c_thm": sweep.implied_c_thm,
        "monotonicity_violations": sweep.monotonicity_violations,
        "rows": sweep.rows,
    });
    out.json("sweep.json", &summary)?;
    Ok(summary)
}

fn run_validate(out: &mut Output) -> Result<Value> {
    let reports = run_suite(SuiteSize::Full)?;
    let failed: Vec<&str> = reports.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let summary = json!({
        "command": "validate",
        "passed": failed.is_empty(),
        "checks": reports,
    });
    out.json("validate.json", &summary)?;
    if failed.is_empty() {
        Ok(summary)
    } else {
        Err(HarnessError::ChecksFailed(format!("failed checks: {}", failed.join(", "))))
    }
}

fn run_bounds(r: &Resolved, out: &mut Output) -> Result<Value> {
    let p = &r.params;
    let c = &r.config.constants;
    let radii = absorbing_radii(&p.forcing, p.nu, p.alpha, p.p, c)?;
    let scale = compute_determining_q(radii.rinfty_sharp, p.nu, p.alpha, p.l, c, r.domain.lambda0())?;
    let summary = json!({
        "command": "bounds",
        "R2": radii.r2,
        "F": radii.f,
        "Rinfty_sharp": radii.rinfty_sharp,
        "Rinfty_simplified": radii.rinfty_simplified,
        "Lambda": scale.lambda,
        "Q": scale.q,
        "q_max": r.shells().q_max(),
        "l": p.l,
        "l_threshold": l_threshold(p.alpha)?,
        "l_admissible": admissible_l(p.alpha, p.l)?,
        "constants": c,
    });
    out.json("bounds.json", &summary)?;
    Ok(summary)
}
