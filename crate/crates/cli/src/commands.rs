use crate::config::{Command, Settings};
use crate::error::CliError;
use crate::output::{Artifacts, Cell};
use serde::Serialize;
use std::f64::consts::PI;
use vpatch_core::cantor::{excluded_measure, gamma_sweep, DiophantineSpec, ResonanceKind};
use vpatch_core::dynamics::{extract_frequency, quasi_periodic_seed, simulate, EvolutionConfig};
use vpatch_core::kam::{
    conjugation_defect, default_frequency, kam_step, straighten_transport, straightening_defect, superlinear_slope,
    synthetic_remainder, KamSpec, ReductionState, StepRecord, TransportProblem,
};
use vpatch_core::linearized::assemble;
use vpatch_core::spectral::{symmetric_modes, PeriodicField};
use vpatch_core::spectrum::{
    check_monotonicity, nondegeneracy_test, omega, omega_derivative, perturbed_transversality, FrequencySystem,
    ScanConfig,
};

type Rows = Vec<Vec<Cell>>;

pub fn run(command: Command, s: &Settings, art: &mut Artifacts) -> Result<(), CliError> {
    match command {
        Command::Simulate => run_simulate(s, art),
        Command::Linearize => run_linearize(s, art),
        Command::Spectrum => run_spectrum(s, art),
        Command::Cantor => run_cantor(s, art),
        Command::KamTransport => run_transport(s, art),
        Command::KamRemainder => run_remainder(s, art),
    }
}

fn theta_rows(field: &PeriodicField) -> Rows {
    let m = field.theta_size();
    field
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| vec![(2.0 * PI * i as f64 / m as f64).into(), (*v).into()])
        .collect()
}

fn history_rows(history: &[StepRecord]) -> Rows {
    history
        .iter()
        .map(|r| {
            vec![
                r.step.into(),
                r.truncation.into(),
                r.delta_s0.into(),
                r.delta_sh.into(),
                r.cut_fraction.into(),
                r.speed.into(),
            ]
        })
        .collect()
}

const HISTORY_HEADER: [&str; 6] = ["step", "truncation", "delta_s0", "delta_sh", "cut_fraction", "speed"];

fn lattice_label(l: &[i64]) -> Cell {
    Cell::Text(l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
}

#[derive(Serialize)]
struct ModeFrequency {
    j: i64,
    amplitude: f64,
    linear: f64,
    /// None when no spectral peak was found
    measured: Option<f64>,
}

#[derive(Serialize)]
struct SimulateSummary {
    b: f64,
    steps: usize,
    mean_drift: f64,
    relative_hamiltonian_drift: f64,
    max_radius_deviation: f64,
    frequencies: Vec<ModeFrequency>,
}

fn run_simulate(s: &Settings, art: &mut Artifacts) -> Result<(), CliError> {
    let cfg = EvolutionConfig {
        dt: s.dt.unwrap_or(1e-3),
        t_final: s.t_final.unwrap_or(5.0),
        m: s.m.unwrap_or(64),
        record_stride: s.record_stride.unwrap_or(10),
        ..EvolutionConfig::default()
    };
    cfg.validate()?;
    let b = s.b();
    let modes = s.seed_modes()?;
    let state = quasi_periodic_seed(b, &modes, cfg.m)?;
    let traj = simulate(&state, &cfg)?;

    let mut header = vec!["t".to_string(), "mean".into(), "hamiltonian_increment".into(), "sobolev_norm".into()];
    for (j, _) in &modes {
        header.push(format!("re_{j}"));
        header.push(format!("im_{j}"));
    }
    let series: Vec<_> = modes.iter().map(|(j, _)| traj.mode_series(*j)).collect();
    let rows: Rows = (0..traj.times.len())
        .map(|k| {
            let mut row: Vec<Cell> = vec![
                traj.times[k].into(),
                traj.means[k].into(),
                traj.hamiltonian_increments[k].into(),
                traj.sobolev_norms[k].into(),
            ];
            for z in &series {
                row.push(z[k].re.into());
                row.push(z[k].im.into());
            }
            row
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(|h| h.as_str()).collect();
    art.csv("trajectory.csv", &header_refs, &rows)?;
    let last = traj.snapshots.last().expect("trajectory records the initial state");
    art.csv("final_state.csv", &["theta", "r"], &theta_rows(last))?;

    let mut frequencies = Vec::new();
    for &(j, amplitude) in &modes {
        let measured = if amplitude != 0.0 && traj.times.len() >= 64 { extract_frequency(&traj, j).ok() } else { None };
        frequencies.push(ModeFrequency { j, amplitude, linear: omega(b, j)?, measured });
    }
    let max_radius_deviation = traj.snapshots.iter().map(|r| r.linf()).fold(0.0, f64::max);
    let summary = SimulateSummary {
        b,
        steps: cfg.steps(),
        mean_drift: traj.mean_drift(),
        relative_hamiltonian_drift: traj.relative_hamiltonian_drift(),
        max_radius_deviation,
        frequencies,
    };
    art.json("summary.json", &summary)?;
    // the scheme is in conservative form, so the mean may only move by round-off
    let scale = max_radius_deviation.max(f64::MIN_POSITIVE);
    if summary.mean_drift > 1e-9 * scale + 1e-15 {
        return Err(CliError::Check { name: "mean conservation", detail: format!("drift {:e}", summary.mean_drift) });
    }
    Ok(())
}

#[derive(Serialize)]
struct LinearizeSummary {
    b: f64,
    m: usize,
    n: i64,
    transport_mean: f64,
    max_offdiag_abs: f64,
    /// max_j |G_jj + iΩ_j(b)|, the distance of the diagonal from the equilibrium multipliers
    max_diagonal_shift: f64,
}

fn run_linearize(s: &Settings, art: &mut Artifacts) -> Result<(), CliError> {
    let b = s.b();
    let m = s.m.unwrap_or(128);
    let n = s.n.unwrap_or(16);
    let state = quasi_periodic_seed(b, &s.seed_modes()?, m)?;
    let pieces = assemble(&state, n)?;
    let g = &pieces.generator;
    let modes = g.modes().to_vec();
    let mut rows = Rows::new();
    let mut shift: f64 = 0.0;
    for &j in &modes {
        for &j0 in &modes {
            let z = g.entry(&[], j, &[], j0);
            rows.push(vec![j.into(), j0.into(), z.re.into(), z.im.into()]);
            if j == j0 {
                shift = shift.max((z.im + omega(b, j)?).abs().max(z.re.abs()));
            }
        }
    }
    art.csv("matrix.csv", &["j", "j0", "re", "im"], &rows)?;
    let eig: Rows = g
        .eigenvalues(0)?
        .iter()
        .enumerate()
        .map(|(i, z)| vec![i.into(), z.re.into(), z.im.into()])
        .collect();
    art.csv("eigenvalues.csv", &["index", "re", "im"], &eig)?;
    art.csv("transport.csv", &["theta", "speed"], &theta_rows(&pieces.transport))?;
    art.json(
        "summary.json",
        &LinearizeSummary {
            b,
            m,
            n,
            transport_mean: pieces.transport.mean(),
            max_offdiag_abs: g.max_offdiag_abs(),
            max_diagonal_shift: shift,
        },
    )
}

#[derive(Serialize)]
struct SpectrumSummary<T: Serialize> {
    b: f64,
    jmax: i64,
    monotone_ratio: bool,
    min_ratio_gap: f64,
    transversality: Option<T>,
}

#[derive(Serialize)]
struct TransversalitySummary {
    sites: Vec<i64>,
    interval: (f64, f64),
    q0: u32,
    lmax: i64,
    grid: usize,
    nondegenerate: bool,
    rho0_hat: f64,
    eps_hat: f64,
    perturbed_rho0_hat: f64,
    retained_fraction: f64,
    retains_half: bool,
}

fn run_spectrum(s: &Settings, art: &mut Artifacts) -> Result<(), CliError> {
    let b = s.b();
    let jmax = s.jmax.unwrap_or(10);
    let rows: Rows = (1..=jmax)
        .map(|j| -> Result<Vec<Cell>, CliError> {
            let w = omega(b, j)?;
            Ok(vec![j.into(), w.into(), (w / j as f64).into(), omega_derivative(b, j, 1)?.into()])
        })
        .collect::<Result<_, _>>()?;
    art.csv("omega.csv", &["j", "omega", "omega_over_j", "d_omega_db"], &rows)?;
    let mono = check_monotonicity(b, jmax.max(2))?;

    let lmax = s.lmax.unwrap_or(20);
    let mut transversality = None;
    if lmax > 0 {
        let (b0, b1) = s.interval();
        let sys = FrequencySystem::new(&s.sites(), b0, b1)?;
        let cfg = ScanConfig::new(lmax, s.grid.unwrap_or(10_000));
        let eps = s.eps_hat.unwrap_or(1e-4);
        let rep = perturbed_transversality(&sys, &cfg, eps)?;
        let mut case_rows = Rows::new();
        for (label, r) in [("unperturbed", &rep.unperturbed), ("perturbed", &rep.perturbed)] {
            for c in &r.cases {
                let w = &c.witness;
                case_rows.push(vec![
                    label.into(),
                    c.case.label().into(),
                    c.rho0_hat.into(),
                    w.b.into(),
                    lattice_label(&w.l),
                    w.j.map_or(Cell::Text(String::new()), Cell::Int),
                    w.j0.map_or(Cell::Text(String::new()), Cell::Int),
                    (w.q as i64).into(),
                ]);
            }
        }
        art.csv("transversality.csv", &["scan", "case", "rho0_hat", "b", "l", "j", "j0", "q"], &case_rows)?;
        let rho = rep.unperturbed.rho0_hat;
        transversality = Some(TransversalitySummary {
            sites: s.sites(),
            interval: (b0, b1),
            q0: sys.q0(),
            lmax,
            grid: cfg.grid_size,
            nondegenerate: nondegeneracy_test(&sys),
            rho0_hat: rho,
            eps_hat: eps,
            perturbed_rho0_hat: rep.perturbed.rho0_hat,
            retained_fraction: rep.retained_fraction,
            retains_half: rep.retains_half,
        });
        if !(rho > 0.0) {
            art.json(
                "summary.json",
                &SpectrumSummary { b, jmax, monotone_ratio: mono.strictly_increasing, min_ratio_gap: mono.min_gap, transversality },
            )?;
            return Err(CliError::Check { name: "transversality", detail: format!("ρ̂₀ = {rho:e} is not positive") });
        }
    }
    art.json(
        "summary.json",
        &SpectrumSummary { b, jmax, monotone_ratio: mono.strictly_increasing, min_ratio_gap: mono.min_gap, transversality },
    )
}

#[derive(Serialize)]
struct CantorSummary {
    kind: ResonanceKind,
    sites: Vec<i64>,
    gamma: f64,
    upsilon: f64,
    tau: f64,
    q0: u32,
    lmax: i64,
    jmax: i64,
    interval: (f64, f64),
    excluded: f64,
    surviving: f64,
    contribution_sum: f64,
    families: usize,
    unresolved: usize,
    truncated: bool,
    tail_bound: Option<f64>,
    russmann_violations: usize,
    uncertified: usize,
}

#[derive(Serialize)]
struct SweepSummary {
    fitted_exponent: f64,
    strictly_monotone: bool,
    nested: bool,
    inverse_q0: f64,
}

fn run_cantor(s: &Settings, art: &mut Artifacts) -> Result<(), CliError> {
    let (b0, b1) = s.interval();
    let sites = s.sites();
    let sys = FrequencySystem::new(&sites, b0, b1)?;
    let kind = ResonanceKind::parse(s.kind.as_deref().unwrap_or("first-order-melnikov"))?;
    let base = DiophantineSpec::new(kind, sys.dim(), sys.q0());
    let spec = DiophantineSpec {
        gamma: s.gamma.unwrap_or(base.gamma),
        upsilon: s.upsilon.unwrap_or(base.upsilon),
        tau1: s.tau1.unwrap_or(base.tau1),
        tau2: s.tau2.unwrap_or(base.tau2),
        lmax: s.lmax.unwrap_or(base.lmax),
        jmax: s.jmax.unwrap_or(base.jmax),
        ..base
    };
    spec.validate(sys.dim())?;
    let rep = excluded_measure(&sys, &spec)?;
    let intervals: Rows = rep
        .excluded_set
        .intervals()
        .iter()
        .map(|&(lo, hi)| vec![lo.into(), hi.into(), (hi - lo).into()])
        .collect();
    art.csv("intervals.csv", &["lo", "hi", "length"], &intervals)?;
    let contributions: Rows = rep
        .contributions
        .iter()
        .map(|c| {
            vec![
                lattice_label(&c.l),
                c.j.into(),
                c.j0.map_or(Cell::Text(String::new()), Cell::Int),
                c.threshold.into(),
                c.measure.into(),
                c.beta.into(),
                c.russmann_bound.into(),
            ]
        })
        .collect();
    art.csv(
        "contributions.csv",
        &["l", "j", "j0", "threshold", "measure", "beta", "russmann_bound"],
        &contributions,
    )?;
    let summary = CantorSummary {
        kind,
        sites,
        gamma: spec.gamma,
        upsilon: spec.upsilon,
        tau: rep.tau,
        q0: rep.q0,
        lmax: spec.lmax,
        jmax: spec.jmax,
        interval: rep.interval,
        excluded: rep.excluded,
        surviving: (b1 - b0) - rep.excluded,
        contribution_sum: rep.contribution_sum,
        families: rep.families,
        unresolved: rep.unresolved,
        truncated: rep.truncated,
        tail_bound: rep.tail_bound,
        russmann_violations: rep.russmann_violations,
        uncertified: rep.uncertified,
    };
    art.json("summary.json", &summary)?;

    if let Some(gammas) = &s.gammas {
        let sweep = gamma_sweep(&sys, &spec, gammas)?;
        let rows: Rows = sweep
            .points
            .iter()
            .map(|p| vec![p.gamma.into(), p.excluded.into(), p.contribution_sum.into()])
            .collect();
        art.csv("sweep.csv", &["gamma", "excluded", "contribution_sum"], &rows)?;
        art.json(
            "sweep.json",
            &SweepSummary {
                fitted_exponent: sweep.fitted_exponent,
                strictly_monotone: sweep.strictly_monotone,
                nested: sweep.nested,
                inverse_q0: 1.0 / sys.q0() as f64,
            },
        )?;
    }
    if rep.russmann_violations > 0 {
        return Err(CliError::Check {
            name: "rüssmann bound",
            detail: format!("{} excluded sets exceed their bound", rep.russmann_violations),
        });
    }
    Ok(())
}

/// Defaults shared by the reduction engines: q₀ = 2d+2, υ = 1/(q₀+3), τ₁ = dq₀+1.
fn reduction_defaults(d: usize) -> (f64, f64) {
    let q0 = 2.0 * d as f64 + 2.0;
    (1.0 / (q0 + 3.0), d as f64 * q0 + 1.0)
}

fn frequency(s: &Settings, d: usize) -> Result<Vec<f64>, CliError> {
    match &s.omega {
        Some(w) if w.len() != d => {
            Err(CliError::Config(format!("frequency vector has {} entries, expected {d}", w.len())))
        }
        Some(w) => Ok(w.clone()),
        None => Ok(default_frequency(d)?),
    }
}

#[derive(Serialize)]
struct TransportSummary {
    omega: Vec<f64>,
    gamma: f64,
    upsilon: f64,
    tau1: f64,
    speed: f64,
    residual: f64,
    in_cantor_set: bool,
    straightening_defect: f64,
    /// None with fewer than three positive norms
    superlinear_slope: Option<f64>,
}

fn run_transport(s: &Settings, art: &mut Artifacts) -> Result<(), CliError> {
    let d = s.omega.as_ref().map_or(1, |w| w.len());
    let omega_vec = frequency(s, d)?;
    let (upsilon, tau1) = reduction_defaults(d);
    let mut shape = vec![s.phi_size.unwrap_or(4); d];
    shape.push(s.m.unwrap_or(64));
    let terms = s.transport_terms()?;
    let f = PeriodicField::from_fn(&shape, |p, t| {
        terms.iter().map(|&(a, l, j)| a * (l as f64 * p[0] + j as f64 * t).cos()).sum()
    })?;
    let problem = TransportProblem::new(
        omega_vec.clone(),
        f,
        s.gamma.unwrap_or(1e-3),
        s.upsilon.unwrap_or(upsilon),
        s.tau1.unwrap_or(tau1),
    )?;
    let out = straighten_transport(&problem, s.steps.unwrap_or(8))?;
    art.csv("history.csv", &HISTORY_HEADER, &history_rows(&out.history))?;
    let mut cuts = Rows::new();
    for (step, list) in out.cuts.iter().enumerate() {
        for c in list {
            cuts.push(vec![step.into(), lattice_label(&c.l), c.j.into(), c.divisor.into(), c.chi.into()]);
        }
    }
    art.csv("cuts.csv", &["step", "l", "j", "divisor", "chi"], &cuts)?;
    art.json(
        "summary.json",
        &TransportSummary {
            omega: omega_vec,
            gamma: problem.gamma,
            upsilon: problem.upsilon,
            tau1: problem.tau1,
            speed: out.speed,
            residual: out.residual,
            in_cantor_set: out.in_cantor_set(),
            straightening_defect: straightening_defect(&problem, &out)?,
            superlinear_slope: superlinear_slope(&out.deltas()),
        },
    )
}

#[derive(Serialize)]
struct SpectrumRow {
    j: i64,
    mu: f64,
    omega: f64,
    /// μ_j − Ω_j − j(V − 1/2) with V = 1/2
    correction: f64,
}

#[derive(Serialize)]
struct RemainderSummary {
    seed: u64,
    b: f64,
    omega: Vec<f64>,
    spec: KamSpec,
    delta0: f64,
    superlinear_slope: Option<f64>,
    max_conjugation_defect: f64,
    /// sup_j |j|·|correction_j|
    weighted_correction: f64,
    spectrum: Vec<SpectrumRow>,
}

/// Conjugation defects above this abort the run.
const CONJUGATION_TOL: f64 = 1e-10;

fn run_remainder(s: &Settings, art: &mut Artifacts) -> Result<(), CliError> {
    let seed = s.require_seed()?;
    let d = s.time_dims.unwrap_or(1);
    let omega_vec = frequency(s, d)?;
    let base = KamSpec::new(d);
    let spec = KamSpec { gamma: s.gamma.unwrap_or(base.gamma), tau2: s.tau2.unwrap_or(base.tau2), ..base };
    spec.validate()?;
    let b = s.b();
    let n = s.n.unwrap_or(8);
    let delta0 = s.delta.unwrap_or(1e-3);
    let r = synthetic_remainder(seed, d, n, s.band.unwrap_or(4), delta0, spec.s0)?;
    let modes = symmetric_modes(n);
    let mu: Vec<f64> = modes.iter().map(|&j| omega(b, j)).collect::<Result<_, _>>()?;
    let mut state = ReductionState::new(mu, r, &spec)?;
    let mut worst: f64 = 0.0;
    for _ in 0..s.steps.unwrap_or(3) {
        let next = kam_step(&state, &omega_vec, &spec)?;
        let defect = conjugation_defect(&state, &next, &omega_vec, spec.window_cap / 2)?;
        worst = worst.max(defect);
        if defect > CONJUGATION_TOL {
            return Err(CliError::Check {
                name: "conjugation",
                detail: format!("step {} leaves a defect of {defect:e}", next.step()),
            });
        }
        state = next;
    }
    art.csv("history.csv", &HISTORY_HEADER, &history_rows(state.history()))?;
    let spectrum: Vec<SpectrumRow> = modes
        .iter()
        .zip(state.mu())
        .map(|(&j, &mu)| -> Result<SpectrumRow, CliError> {
            let w = omega(b, j)?;
            Ok(SpectrumRow { j, mu, omega: w, correction: mu - w })
        })
        .collect::<Result<_, _>>()?;
    let weighted_correction = spectrum.iter().map(|r| r.j.abs() as f64 * r.correction.abs()).fold(0.0, f64::max);
    let deltas: Vec<f64> = state.history().iter().map(|r| r.delta_s0).collect();
    art.json(
        "spectrum.json",
        &RemainderSummary {
            seed,
            b,
            omega: omega_vec,
            spec,
            delta0,
            superlinear_slope: superlinear_slope(&deltas),
            max_conjugation_defect: worst,
            weighted_correction,
            spectrum,
        },
    )
}
