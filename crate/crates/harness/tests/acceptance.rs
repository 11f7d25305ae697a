//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use serde_json::Value;
use sqg_core::bounds::{calibrate, compute_determining_q, compute_rinfty, l2_envelope, linfty_bound, CalibrationConstants};
use sqg_core::littlewood_paley::ShellSystem;
use sqg_core::spectral::{random_field, Domain};
use sqg_core::timestepper::simulate;
use sqg_core::validation::{
    analytic_decay_error, bernstein, closed_form_gaps, coercivity, forced_budget, lp_identities, oracle_gap,
    partition_of_unity, unforced_budget,
};
use sqg_harness::commands::trajectory_csv;
use sqg_harness::manifest::{sha256_hex, RunManifest};
use sqg_harness::{dispatch, parse_config_str, Command, Resolved};

type Outcome = Result<(bool, String), String>;

/// N = 128, alpha = 1.5, nu = 0.5, l = 4, constant low-mode forcing with F/nu = 3.
const CONFIG: &str = r#"
[domain]
L = 1.0
N = 128

[params]
nu = 0.5
alpha = 1.5
p = 4.0
l = 4.0

[forcing]
modes = [[1, 0, 0.5687691268083349, 0.0], [0, 1, 0.5687691268083349, 0.0], [1, 1, 0.28438456340416745, 0.0]]

[experiment]
spinup = 0.5
horizon = 1.0
cadence = 2
q_list = [0, 1, 2, 3, 4, 5]

[experiment.initial]
decay = 1.0
band = [1.0, 16.0]
amplitude = 0.1
"#;

const SEEDS: [u64; 3] = [1, 2, 3];

fn resolved(seed: u64, constants: &CalibrationConstants, q: Option<i32>) -> Result<Resolved, String> {
    let mut cfg = parse_config_str(CONFIG).map_err(|e| e.to_string())?;
    cfg.experiment.seed = seed;
    cfg.experiment.q = q;
    cfg.constants = *constants;
    cfg.resolve().map_err(|e| e.to_string())
}

fn run(cmd: Command, r: &Resolved, dir: &Path) -> Result<Value, String> {
    dispatch(cmd, Some(r), dir).map_err(|e| e.to_string())
}

fn digest_of(dir: &Path, name: &str) -> Result<String, String> {
    RunManifest::load(dir)
        .map_err(|e| e.to_string())?
        .files
        .into_iter()
        .find(|f| f.path == name)
        .map(|f| f.sha256)
        .ok_or_else(|| format!("{name} missing from the manifest"))
}

fn tempdir() -> Result<tempfile::TempDir, String> {
    tempfile::tempdir().map_err(|e| e.to_string())
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let err = analytic_decay_error(64, 1.0, 1.5, 1e-3, 1.0).map_err(s)?;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        err <= 1e-8 && secs < 5.0,
        format!("relative error {err:.3e} (tol 1e-8), {secs:.2} s (limit 5 s)"),
    ))
}

/// CSV of the criterion-1 run, for the determinism check.
fn decay_csv() -> Result<String, String> {
    use num_complex::Complex64;
    use sqg_core::operators::ForcingSpec;
    use sqg_core::spectral::SpectralField;
    use sqg_core::timestepper::{SimulationConfig, SqgParams};
    let d = Domain::new(1.0, 64).map_err(s)?;
    let shells = ShellSystem::new(d);
    let theta0 = SpectralField::from_modes(d, &[((1, 0), Complex64::new(0.5, 0.0))]).map_err(s)?;
    let params = SqgParams::new(1.0, 1.5, 4.0, 4.0, ForcingSpec::zero(d)).map_err(s)?;
    let cfg = SimulationConfig {
        dt: Some(1e-3),
        dt_max: 1e-3,
        cadence: 50,
        cfl_recheck: None,
    };
    let mut norms = vec![shells.shell_norms(&theta0, 4.0).map_err(s)?];
    let traj = simulate(&theta0, &params, 1.0, &cfg, &mut |st, _| {
        norms.push(shells.shell_norms(&st.theta, 4.0).expect("l = 4 is a valid exponent"));
    })
    .map_err(s)?;
    Ok(trajectory_csv(&traj, &norms))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let gap = oracle_gap(Domain::new(1.0, 32).map_err(s)?, 20).map_err(s)?;
    let (steady, mixed) = closed_form_gaps(64).map_err(s)?;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        gap <= 1e-11 && steady <= 1e-11 && mixed <= 1e-11 && secs < 10.0,
        format!("oracle {gap:.3e}, closed forms {steady:.3e} / {mixed:.3e} (tol 1e-11), {secs:.2} s (limit 10 s)"),
    ))
}

fn criterion_3() -> Outcome {
    let forced = forced_budget(128, 1e-3, 5.0, 11).map_err(s)?;
    let unforced = unforced_budget(64, 1e-3, 1.0).map_err(s)?;
    Ok((
        forced <= 1e-5 && unforced <= 1e-8,
        format!("forced N=128 horizon 5: {forced:.3e} (tol 1e-5); unforced single mode: {unforced:.3e} (tol 1e-8)"),
    ))
}

fn criterion_4() -> Outcome {
    let shells = ShellSystem::new(Domain::new(1.0, 128).map_err(s)?);
    let pu = partition_of_unity(&shells, 10_000, 7);
    let (recon, tele) = lp_identities(&shells, 100).map_err(s)?;
    Ok((
        pu <= 1e-12 && recon <= 1e-12 && tele <= 1e-12,
        format!("partition {pu:.3e}, reconstruction {recon:.3e}, telescoping {tele:.3e} (tol 1e-12)"),
    ))
}

fn criterion_5() -> Outcome {
    let shells = ShellSystem::new(Domain::new(1.0, 128).map_err(s)?);
    let mut ok = true;
    let mut detail = Vec::new();
    for rep in bernstein(&shells, 200, &[(2.0, f64::INFINITY), (2.0, 4.0), (4.0, f64::INFINITY)]).map_err(s)? {
        let (max, spread) = (rep.overall_max(), rep.spread());
        ok &= max <= 10.0 && spread < 2.0;
        detail.push(format!("B({},{}) max {max:.3} spread {spread:.3}", rep.s, rep.r));
    }
    let reps = coercivity(&shells, 200, &[2.0, 4.0, 6.0], &[1.2, 1.5, 1.8]).map_err(s)?;
    let min = reps.iter().map(|r| r.min_ratio).fold(f64::INFINITY, f64::min);
    let single = reps.iter().map(|r| r.single_mode_error).fold(0.0, f64::max);
    ok &= min > 0.0 && single <= 1e-10;
    detail.push(format!("coercivity min {min:.3} single-mode error {single:.3e}"));
    Ok((ok, detail.join("; ")))
}

struct ForcedRun {
    constants: CalibrationConstants,
}

fn criterion_6(run: &mut Option<ForcedRun>) -> Outcome {
    let r = resolved(SEEDS[0], &CalibrationConstants::default(), None)?;
    let theta0 = random_field(r.domain, SEEDS[0], &r.twin.initial).map_err(s)?;
    let l2_0 = theta0.l2_norm();
    let mut sim = r.simulation();
    sim.cadence = 10;
    let traj = simulate(&theta0, &r.params, 2.0, &sim, &mut |_, _| {}).map_err(s)?;
    let p = &r.params;
    let big_f = p.forcing.bound(p.p).map_err(s)?;
    let mut envelope_ok = true;
    let mut sup_ratio = 0.0f64;
    for smp in &traj.samples {
        let env = l2_envelope(smp.t, l2_0, &p.forcing, p.nu, p.alpha).map_err(s)?;
        envelope_ok &= smp.l2 <= env * (1.0 + 1e-12);
        if smp.t > 0.0 {
            let b = linfty_bound(smp.t, l2_0, big_f, p.nu, p.alpha, p.p, &r.config.constants).map_err(s)?;
            sup_ratio = sup_ratio.max(smp.linf / b);
        }
    }
    let constants = calibrate(&traj, &r.params, &CalibrationConstants::default()).map_err(s)?;
    *run = Some(ForcedRun { constants });
    Ok((
        envelope_ok && sup_ratio.is_finite() && sup_ratio <= 1.0,
        format!(
            "l2 <= envelope on all {} samples: {envelope_ok}; sup linf/linfty_bound = {sup_ratio:.4} (c_linfty = 1); calibrated c_infty = {:.5}",
            traj.samples.len(),
            constants.c_infty
        ),
    ))
}

struct Sweeps {
    implied: Vec<f64>,
    lines: Vec<String>,
    ok: bool,
    digests: Vec<String>,
}

fn sweep_seed(seed: u64, c: &CalibrationConstants) -> Result<(Value, String), String> {
    let dir = tempdir()?;
    let v = run(Command::Sweep, &resolved(seed, c, None)?, dir.path())?;
    Ok((v, digest_of(dir.path(), "sweep.csv")?))
}

fn criterion_8(c: &CalibrationConstants) -> Result<Sweeps, String> {
    let mut out = Sweeps {
        implied: Vec::new(),
        lines: Vec::new(),
        ok: true,
        digests: Vec::new(),
    };
    for seed in SEEDS {
        let (v, digest) = sweep_seed(seed, c)?;
        let q_crit = v["q_crit"].as_i64();
        let theory = v["theoretical_q"].as_i64().ok_or("missing theoretical_q")?;
        let implied = v["implied_c_thm"].as_f64();
        out.ok &= matches!(q_crit, Some(q) if q <= theory) && implied.is_some();
        out.implied.extend(implied);
        out.lines.push(format!("seed {seed}: Q_crit {q_crit:?} <= Q_theory {theory}, c_thm {implied:?}"));
        out.digests.push(digest);
    }
    Ok(out)
}

fn criterion_7(c: &CalibrationConstants, c_thm: f64) -> Result<(bool, String, String), String> {
    let start = Instant::now();
    let base = resolved(SEEDS[0], c, None)?;
    let p = &base.params;
    let (rinfty, _) = compute_rinfty(&p.forcing, p.nu, p.alpha, p.p, c).map_err(s)?;
    let calibrated = CalibrationConstants { c_thm, ..*c };
    let q = compute_determining_q(rinfty, p.nu, p.alpha, p.l, &calibrated, base.domain.lambda0())
        .map_err(s)?
        .q;
    let unit_q = compute_determining_q(rinfty, p.nu, p.alpha, p.l, c, base.domain.lambda0())
        .map_err(s)?
        .q;
    let r = resolved(SEEDS[0], &calibrated, Some(q))?;
    let dir = tempdir()?;
    let v = run(Command::TwinSync, &r, dir.path())?;
    let secs = start.elapsed().as_secs_f64();
    let decades = v["decades"].as_f64().unwrap_or(0.0);
    let r2 = v["fit"]["r2"].as_f64().unwrap_or(0.0);
    let holds = v["gronwall"]["holds"].as_bool().unwrap_or(false);
    let entry = v["entry_time"].as_f64();
    let slaving = v["slaving_start"].as_f64().unwrap_or(0.0);
    let settled = matches!(entry, Some(t) if t <= slaving);
    let ok = decades >= 6.0 && r2 >= 0.98 && holds && settled && secs < 300.0;
    let detail = format!(
        "Q = {q} (c_thm {c_thm:.5}; c_thm = 1 gives Q = {unit_q}, q_max = {}): {decades:.2} decades, r2 {r2:.5}, gronwall holds {holds} (max violation {:.3e}), entry {entry:?} <= spinup {slaving:.3}, {secs:.1} s",
        v["q_max"], v["gronwall"]["max_violation"].as_f64().unwrap_or(f64::NAN)
    );
    Ok((ok, detail, digest_of(dir.path(), "sync.csv")?))
}

fn criterion_9() -> Outcome {
    let mut worst = 0.0f64;
    for alpha in [1.2, 1.5, 1.8] {
        let l = alpha / (alpha - 1.0) + 1.0;
        let c = CalibrationConstants::default();
        let a = compute_determining_q(0.7, 0.5, alpha, l, &c, 1.0).map_err(s)?.lambda;
        let b = compute_determining_q(1.4, 0.5, alpha, l, &c, 1.0).map_err(s)?.lambda;
        let want = 2f64.powf(1.0 / (alpha - 1.0));
        worst = worst.max((b / a - want).abs() / want);
    }
    Ok((worst <= 1e-12, format!("worst relative deviation {worst:.3e} over alpha in {{1.2, 1.5, 1.8}}")))
}

fn main() -> ExitCode {
    let mut lines: Vec<(u32, bool, String)> = Vec::new();
    let mut record = |id: u32, outcome: Outcome| {
        let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        println!("criterion {id:>2}: {} {detail}", if ok { "PASS" } else { "FAIL" });
        lines.push((id, ok, detail));
    };
    record(1, criterion_1());
    record(2, criterion_2());
    record(3, criterion_3());
    record(4, criterion_4());
    record(5, criterion_5());
    let mut forced = None;
    record(6, criterion_6(&mut forced));
    let constants = forced.map(|f| f.constants);

    let sweeps = constants.as_ref().map(criterion_8);
    let twin = match (&constants, &sweeps) {
        (Some(c), Some(Ok(sw))) if !sw.implied.is_empty() => Some(criterion_7(c, sw.implied[0])),
        _ => None,
    };
    record(
        7,
        match &twin {
            Some(Ok((ok, detail, _))) => Ok((*ok, detail.clone())),
            Some(Err(e)) => Err(e.clone()),
            None => Err("needs the calibration of criterion 6 and a sweep of criterion 8".into()),
        },
    );
    record(
        8,
        match &sweeps {
            Some(Ok(sw)) => {
                let lo = sw.implied.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = sw.implied.iter().cloned().fold(0.0, f64::max);
                let stable = sw.implied.len() == SEEDS.len() && hi <= 2.0 * lo;
                Ok((sw.ok && stable, format!("{}; c_thm spread {:.4}", sw.lines.join("; "), hi / lo)))
            }
            Some(Err(e)) => Err(e.clone()),
            None => Err("needs the calibration of criterion 6".into()),
        },
    );
    record(9, criterion_9());

    let determinism = || -> Outcome {
        let (c, sw, sync) = match (&constants, &sweeps, &twin) {
            (Some(c), Some(Ok(sw)), Some(Ok((_, _, sync)))) => (c, sw, sync),
            _ => return Err("needs criteria 6, 7 and 8 to have run".into()),
        };
        let decay_same = sha256_hex(decay_csv()?.as_bytes()) == sha256_hex(decay_csv()?.as_bytes());
        let (_, _, sync_again) = criterion_7(c, sw.implied[0])?;
        let mut sweep_same = true;
        for (seed, digest) in SEEDS.iter().zip(&sw.digests) {
            sweep_same &= sweep_seed(*seed, c)?.1 == *digest;
        }
        let sync_same = *sync == sync_again;
        Ok((
            decay_same && sync_same && sweep_same,
            format!("identical digests: decay CSV {decay_same}, sync CSV {sync_same}, sweep CSVs {sweep_same}"),
        ))
    };
    record(10, determinism());

    let failed: Vec<u32> = lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", lines.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
