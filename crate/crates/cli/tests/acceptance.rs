//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;
use vpatch_core::cantor::{
    excluded_measure, fit_exponent, gamma_sweep, linear_cantor_measure, DiophantineSpec, ResonanceKind,
};
use vpatch_core::dynamics::{
    energy_increment, extract_frequency, quasi_periodic_seed, simulate, transport_coefficient, velocity_functional,
    EvolutionConfig,
};
use vpatch_core::geometry::PatchState;
use vpatch_core::kam::{
    conjugation_defect, default_frequency, kam_step, straighten_transport, superlinear_slope, synthetic_remainder,
    KamSpec, ReductionState, TransportProblem,
};
use vpatch_core::linearized::{assemble, image_log_moment, linear_flow_residual, log_sine_moment};
use vpatch_core::spectral::{symmetric_modes, LinearOperatorMatrix, PeriodicField};
use vpatch_core::spectrum::{omega, perturbed_transversality, FrequencySystem, ResonanceCase, ScanConfig};
use vpatch_oracle::brute_force_generator;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn multiplier_identities() -> Outcome {
    let mut worst_sine: f64 = 0.0;
    let mut worst_image: f64 = 0.0;
    for j in 1..=32i64 {
        let exact = -1.0 / j as f64;
        worst_sine = worst_sine.max((log_sine_moment(j, 1024).map_err(|e| e.to_string())? - exact).abs());
        for b in [0.25, 0.5, 0.9f64] {
            let exact = -b.powi(2 * j as i32) / (2.0 * j as f64);
            let v = image_log_moment(b, j, 1024).map_err(|e| e.to_string())?;
            worst_image = worst_image.max((v - exact).abs());
        }
    }
    verdict(
        worst_sine <= 1e-10 && worst_image <= 1e-10,
        format!("max error {worst_sine:.2e} (log sine), {worst_image:.2e} (image)"),
    )
}

fn equilibrium_speed() -> Outcome {
    let mut worst: f64 = 0.0;
    for b in [0.25, 0.5, 0.75] {
        let disc = PatchState::disc(b, 128).map_err(|e| e.to_string())?;
        let v = transport_coefficient(&disc).map_err(|e| e.to_string())?;
        worst = worst.max(v.map(|x| x - 0.5).linf());
    }
    verdict(worst <= 1e-10, format!("max |V₀ − 1/2| = {worst:.2e}"))
}

fn equilibrium_diagonal() -> Outcome {
    let mut stationary: f64 = 0.0;
    let mut offdiag: f64 = 0.0;
    let mut diag: f64 = 0.0;
    for b in [0.25, 0.5, 0.75] {
        let disc = PatchState::disc(b, 128).map_err(|e| e.to_string())?;
        stationary = stationary.max(velocity_functional(&disc).map_err(|e| e.to_string())?.linf());
        let g = assemble(&disc, 16).map_err(|e| e.to_string())?.generator;
        offdiag = offdiag.max(g.max_offdiag_abs());
        for &j in g.modes() {
            let z = g.entry(&[], j, &[], j);
            let w = omega(b, j).map_err(|e| e.to_string())?;
            diag = diag.max((z.re.powi(2) + (z.im + w).powi(2)).sqrt());
        }
    }
    verdict(
        stationary <= 1e-12 && offdiag <= 1e-9 && diag <= 1e-9,
        format!("‖F_b[0]‖ = {stationary:.2e}, off-diagonal {offdiag:.2e}, diagonal error {diag:.2e}"),
    )
}

fn linear_flow() -> Outcome {
    let times: Vec<f64> = (0..=20).map(|k| 0.25 * k as f64).collect();
    let mut worst: f64 = 0.0;
    for b in [0.3, 0.5, 0.8] {
        let r = linear_flow_residual(b, &[(1, 0.5), (2, 0.25)], 64, &times).map_err(|e| e.to_string())?;
        worst = worst.max(r);
    }
    verdict(worst <= 1e-12, format!("residual {worst:.2e}"))
}

fn final_state(state: &PatchState, dt: f64) -> Result<PeriodicField, String> {
    let cfg = EvolutionConfig { dt, t_final: 5.0, m: 64, record_stride: 1, energy_nodes: 0, ..Default::default() };
    let cfg = EvolutionConfig { record_stride: cfg.steps(), ..cfg };
    let traj = simulate(state, &cfg).map_err(|e| e.to_string())?;
    Ok(traj.snapshots.last().unwrap().clone())
}

fn conservation() -> Outcome {
    let state = quasi_periodic_seed(0.5, &[(2, 1e-3)], 64).map_err(|e| e.to_string())?;
    let cfg = EvolutionConfig { dt: 1e-3, t_final: 5.0, m: 64, record_stride: 100, ..Default::default() };
    let traj = simulate(&state, &cfg).map_err(|e| e.to_string())?;
    let drift = traj.relative_hamiltonian_drift();
    let mean = traj.mean_drift();
    let reference = traj.snapshots.last().unwrap().clone();
    let dts = [0.04, 0.02, 0.01];
    let mut errs = Vec::new();
    for dt in dts {
        errs.push((&final_state(&state, dt)? - &reference).linf());
    }
    let slope = fit_exponent(&dts, &errs);
    verdict(
        drift <= 1e-8 && mean <= 1e-12 && (slope - 4.0).abs() <= 0.3,
        format!("H drift {drift:.2e}, mean drift {mean:.2e}, dt slope {slope:.3}"),
    )
}

fn frequency_recovery() -> Outcome {
    let b = 0.5;
    let target = omega(b, 2).map_err(|e| e.to_string())?;
    let eps = [1e-4, 1e-3, 1e-2];
    let mut errs = Vec::new();
    for e in eps {
        let s = quasi_periodic_seed(b, &[(2, e)], 64).map_err(|e| e.to_string())?;
        let cfg =
            EvolutionConfig { dt: 0.05, t_final: 300.0, m: 64, record_stride: 5, energy_nodes: 0, ..Default::default() };
        let traj = simulate(&s, &cfg).map_err(|e| e.to_string())?;
        errs.push((extract_frequency(&traj, 2).map_err(|e| e.to_string())? - target).abs());
    }
    let slope = fit_exponent(&eps, &errs);
    let shown: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
    verdict(slope >= 0.9, format!("errors [{}], slope {slope:.3}", shown.join(", ")))
}

fn quadratic_form() -> Outcome {
    let (b, m) = (0.5, 64);
    let rho = PeriodicField::from_fn_theta(m, |t| (2.0 * t).cos() + 0.5 * (3.0 * t).sin() - 0.3 * t.cos())
        .map_err(|e| e.to_string())?;
    let c = rho.coeffs();
    let mut quad = 0.0;
    for ((_, j, nyquist), z) in c.modes().iter().zip(c.data()) {
        if *j != 0 && !nyquist {
            quad -= omega(b, *j).map_err(|e| e.to_string())? / (2.0 * *j as f64) * z.norm_sqr();
        }
    }
    let eps = 1e-3;
    let s = PatchState::new(b, rho.scale(eps)).map_err(|e| e.to_string())?;
    let dh = -0.5 * energy_increment(&s, 8).map_err(|e| e.to_string())?;
    let rel = ((dh / (eps * eps) - quad) / quad).abs();
    verdict(rel <= 1e-3, format!("relative error {rel:.2e} at ε = 1e-3"))
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for (b, amp) in [(0.5, 0.02), (0.3, 0.005), (0.8, 0.05)] {
        let r = PeriodicField::from_fn_theta(256, |t| {
            amp * (0.7 * (2.0 * t).cos() - 0.4 * (3.0 * t).sin() + 0.2 * (5.0 * t + 0.3).cos())
        })
        .map_err(|e| e.to_string())?;
        let state = PatchState::new(b, r.clone()).map_err(|e| e.to_string())?;
        let fast = assemble(&state, 8).map_err(|e| e.to_string())?.generator;
        let slow = brute_force_generator(b, r.values(), 8);
        for (a, &j) in fast.modes().iter().enumerate() {
            for (c, &j0) in fast.modes().iter().enumerate() {
                worst = worst.max((fast.entry(&[], j, &[], j0) - slow[a][c]).norm());
            }
        }
    }
    verdict(worst <= 1e-6, format!("max entry gap {worst:.2e}"))
}

fn transversality() -> Outcome {
    let sys = FrequencySystem::new(&[1, 2], 0.1, 0.9).map_err(|e| e.to_string())?;
    if sys.q0() != 6 {
        return Err(format!("q₀ = {} instead of 6", sys.q0()));
    }
    let rep = perturbed_transversality(&sys, &ScanConfig::new(20, 10_000), 1e-4).map_err(|e| e.to_string())?;
    let all_positive = ResonanceCase::ALL
        .iter()
        .all(|c| rep.unperturbed.case(*c).is_some_and(|m| m.rho0_hat > 0.0));
    verdict(
        all_positive && rep.retains_half,
        format!(
            "ρ̂₀ = {:.6}, perturbed {:.6} (retained {:.4})",
            rep.unperturbed.rho0_hat, rep.perturbed.rho0_hat, rep.retained_fraction
        ),
    )
}

fn russmann() -> Outcome {
    let sys = FrequencySystem::new(&[1, 2], 0.1, 0.9).map_err(|e| e.to_string())?;
    let mut counts = Vec::new();
    for kind in [ResonanceKind::Transport, ResonanceKind::FirstOrder, ResonanceKind::SecondOrder] {
        let spec = DiophantineSpec::new(kind, sys.dim(), sys.q0());
        let rep = excluded_measure(&sys, &spec).map_err(|e| e.to_string())?;
        counts.push((kind.label(), rep.russmann_violations, rep.contributions.len()));
    }
    let total: usize = counts.iter().map(|c| c.1).sum();
    let detail: Vec<String> = counts.iter().map(|(k, v, n)| format!("{k} {v}/{n}")).collect();
    verdict(total == 0, format!("violations {}", detail.join(", ")))
}

fn cantor_asymptotics() -> Outcome {
    let sys = FrequencySystem::new(&[1, 2], 0.1, 0.9).map_err(|e| e.to_string())?;
    let spec = DiophantineSpec::new(ResonanceKind::FirstOrder, sys.dim(), sys.q0());
    let gammas = [1e-2, 1e-3, 1e-4, 1e-5];
    let sweep = gamma_sweep(&sys, &spec, &gammas).map_err(|e| e.to_string())?;
    let floor = 1.0 / sys.q0() as f64;
    let full = linear_cantor_measure(&sys, 0.0, spec.tau1, spec.lmax).map_err(|e| e.to_string())?;
    let smallest = sweep.points[0].excluded;
    let width = 0.8;
    let limit_ok = (full.measure - width).abs() < 1e-15 && smallest < 1e-6 * width;
    verdict(
        sweep.strictly_monotone && sweep.fitted_exponent >= floor && limit_ok,
        format!(
            "excluded {:.3e} → {:.3e}, exponent {:.4} (floor {floor:.4}), survivors at γ=1e-5 {:.12}",
            sweep.points[3].excluded,
            smallest,
            sweep.fitted_exponent,
            width - smallest
        ),
    )
}

fn transport_straightening() -> Outcome {
    let f = PeriodicField::from_fn(&[4, 64], |_, t| 0.1 * t.cos()).map_err(|e| e.to_string())?;
    let w = default_frequency(1).map_err(|e| e.to_string())?;
    let p = TransportProblem::new(w, f, 1e-3, 1.0 / 7.0, 5.0).map_err(|e| e.to_string())?;
    let out = straighten_transport(&p, 12).map_err(|e| e.to_string())?;
    let err = (out.speed - 0.24f64.sqrt()).abs();
    let slope = superlinear_slope(&out.deltas()).unwrap_or(f64::NAN);
    verdict(
        err <= 1e-8 && slope >= 1.4,
        format!("|V∞ − √0.24| = {err:.2e}, slope {slope:.3} over {} norms", out.deltas().len()),
    )
}

/// Largest |T(−k,−j,−j₀) − conj T(k,j,j₀)| and |T(−k,−j,−j₀) + T(k,j,j₀)|, relative to max |T|.
fn sign_law_defects(op: &LinearOperatorMatrix) -> (f64, f64) {
    let scale = op.max_abs().max(f64::MIN_POSITIVE);
    let (mut real, mut reversible) = (0.0f64, 0.0f64);
    for (k, j, j0, v) in op.symbols() {
        let nk: Vec<i64> = k.iter().map(|x| -x).collect();
        let mirror = op.symbol(&nk, -j, -j0);
        real = real.max((mirror - v.conj()).norm());
        reversible = reversible.max((mirror + v).norm());
    }
    (real / scale, reversible / scale)
}

fn remainder_kam() -> Outcome {
    let spec = KamSpec::new(1);
    let w = default_frequency(1).map_err(|e| e.to_string())?;
    let delta0 = 1e-3;
    let n = 8;
    let r = synthetic_remainder(2024, 1, n, 4, delta0, spec.s0).map_err(|e| e.to_string())?;
    let modes = symmetric_modes(n);
    let mu: Vec<f64> = modes.iter().map(|&j| omega(0.5, j).unwrap()).collect();
    let mut state = ReductionState::new(mu, r, &spec).map_err(|e| e.to_string())?;
    let mut structure = true;
    let (mut worst_real, mut worst_reversible) = (0.0f64, 0.0f64);
    let mut defect: f64 = 0.0;
    for _ in 0..3 {
        let next = kam_step(&state, &w, &spec).map_err(|e| e.to_string())?;
        defect = defect.max(conjugation_defect(&state, &next, &w, spec.window_cap / 2).map_err(|e| e.to_string())?);
        let odd = modes.iter().zip(next.mu()).all(|(&j, &m)| {
            let k = modes.iter().position(|&x| x == -j).unwrap();
            m == -next.mu()[k]
        });
        let (real, reversible) = sign_law_defects(next.remainder());
        worst_real = worst_real.max(real);
        worst_reversible = worst_reversible.max(reversible);
        structure &= odd && real <= 1e-13 && reversible <= 1e-13;
        state = next;
    }
    let deltas: Vec<f64> = state.history().iter().map(|h| h.delta_s0).collect();
    let slope = superlinear_slope(&deltas).unwrap_or(f64::NAN);
    let mut weighted: f64 = 0.0;
    for (&j, &m) in modes.iter().zip(state.mu()) {
        weighted = weighted.max(j.abs() as f64 * (m - omega(0.5, j).unwrap()).abs());
    }
    verdict(
        structure && defect <= 1e-10 && slope >= 1.4 && weighted <= 10.0 * delta0,
        format!(
            "odd μ and relative real/reversible defects {worst_real:.1e}/{worst_reversible:.1e}, \
             conjugation {defect:.2e}, slope {slope:.3}, sup|j||r_j| = {weighted:.2e} (≤ {:.0e})",
            10.0 * delta0
        ),
    )
}

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let mut bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        if name == "manifest.json" {
            let mut v: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
            v.as_object_mut().unwrap().remove("wall_time_seconds");
            bytes = v.to_string().into_bytes();
        }
        files.insert(name, bytes);
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 5] = [
        &["cantor", "--gamma", "1e-3", "--sites", "1,2"],
        &["kam-remainder", "--seed", "7", "--jobs", "2"],
        &["kam-transport", "--terms", "0.1:0:1,0.01:1:-1"],
        &["simulate", "--amplitudes", "0,1e-3", "--t-final", "1", "--dt", "0.01"],
        &["spectrum", "--lmax", "6", "--grid", "500", "--jmax", "5"],
    ];
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for args in runs {
        let dir = tmp.path().join(args[0]);
        let mut first = None;
        for _ in 0..2 {
            let status = Command::new(env!("CARGO_BIN_EXE_vpatch"))
                .args(args)
                .arg("--out")
                .arg(&dir)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{} failed: {}", args[0], String::from_utf8_lossy(&status.stderr)));
            }
            let snap = snapshot(&dir)?;
            match &first {
                None => first = Some(snap),
                Some(f) if *f != snap => return Err(format!("{} outputs differ between runs", args[0])),
                Some(_) => compared += snap.len(),
            }
        }
    }
    Ok(format!("{compared} files byte-identical across reruns of {} subcommands", runs.len()))
}

fn main() {
    let criteria: [Criterion; 14] = [
        ("multiplier identities", multiplier_identities),
        ("equilibrium transport speed", equilibrium_speed),
        ("equilibrium stationarity and diagonalization", equilibrium_diagonal),
        ("linear flow exactness", linear_flow),
        ("conservation", conservation),
        ("frequency recovery", frequency_recovery),
        ("hamiltonian quadratic form", quadratic_form),
        ("oracle equivalence", oracle_equivalence),
        ("transversality", transversality),
        ("russmann certification", russmann),
        ("cantor-measure asymptotics", cantor_asymptotics),
        ("transport straightening", transport_straightening),
        ("remainder kam", remainder_kam),
        ("determinism", determinism),
    ];
    let results: Vec<(Outcome, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(_, f)| {
                scope.spawn(move || {
                    let t = Instant::now();
                    let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
                    (r, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (i, ((name, _), (outcome, secs))) in criteria.iter().zip(&results).enumerate() {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name}: {detail} [{secs:.1}s]", i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
