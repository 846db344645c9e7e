//! The split–imprint–recombine interferometer protocol and its phase
//! readout, runnable on either the three-mode model or the 2D grid backend.
//!
//! Splitting runs the counterintuitive schedule at the critical angle, where
//! the level crossing coherently divides the atom between the A and B traps.
//! A relative phase φ imprinted on B then steers the recombination (the
//! time-reversed schedule): P_A(2T) = ½(1 + cos φ), and φ is recovered from
//! the final populations on the arccos branch [0, π].

use num_complex::Complex64;
use rayon::prelude::*;

use crate::couplings::{Trap, TrapLayout, CRITICAL_ANGLE};
use crate::grid2d::{
    asymptotic_state, imprint_phase, project_populations, propagate_schedule, Grid2D,
    PropagateOptions, Wavefunction2D,
};
use crate::pulses::PulseSchedule;
use crate::three_mode::{evolve, EvolveOptions, ThreeModeState};
use crate::{Error, Result};

/// Minimum split fidelity against (ψ_A − ψ_B)/√2 for the model backend.
pub const SPLIT_FIDELITY_MODEL: f64 = 0.99;

/// Minimum split fidelity for the grid backend.
pub const SPLIT_FIDELITY_GRID: f64 = 0.98;

/// The splitting stage demands β within this relative distance of 2π/3.
pub const BETA_TOLERANCE: f64 = 0.010_000_001;

/// Which solver carries the protocol, with its discretization knobs.
#[derive(Debug, Clone, Copy)]
pub enum BackendSpec {
    Model {
        dt: f64,
    },
    Grid {
        grid: Grid2D,
        dt: f64,
        nonlinearity_g: f64,
    },
}

/// One interferometer configuration: angle, forward (splitting) schedule,
/// and backend. The recombination stage is always the time reversal of
/// `schedule` with the shaking term continued in lab time.
#[derive(Debug, Clone, Copy)]
pub struct InterferometerSetup {
    pub beta: f64,
    pub schedule: PulseSchedule,
    pub backend: BackendSpec,
}

impl InterferometerSetup {
    /// Half duration T (the full protocol runs to 2T).
    pub fn half_time(&self) -> f64 {
        self.schedule.total_time()
    }

    fn layout_at(&self, t: f64) -> Result<TrapLayout> {
        let (d_ab, d_bc) = self.schedule.distances_at(t)?;
        TrapLayout::new(self.beta, d_ab, d_bc)
    }
}

/// State at the end of the splitting stage, backend-specific.
#[derive(Debug, Clone)]
pub enum SplitState {
    Model(ThreeModeState),
    Grid(Wavefunction2D),
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub state: SplitState,
    /// Overlap-squared with (ψ_A − ψ_B)/√2, global phase ignored.
    pub fidelity: f64,
    pub populations: [f64; 3],
}

fn check_beta(beta: f64) -> Result<()> {
    if ((beta - CRITICAL_ANGLE) / CRITICAL_ANGLE).abs() > BETA_TOLERANCE {
        return Err(Error::validation(format!(
            "splitting requires beta within 1% of the critical angle 2pi/3, got {beta}"
        )));
    }
    Ok(())
}

/// Runs the splitting stage without enforcing the fidelity threshold; used
/// by robustness sweeps that must complete even in strongly perturbed cells.
pub fn split_unchecked(setup: &InterferometerSetup) -> Result<SplitOutcome> {
    check_beta(setup.beta)?;
    match setup.backend {
        BackendSpec::Model { dt } => {
            let traj = evolve(
                &setup.schedule,
                setup.beta,
                &ThreeModeState::trap(Trap::A),
                &EvolveOptions {
                    dt,
                    sample_every: usize::MAX,
                },
            )?;
            let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
            let target = ThreeModeState::new(
                Complex64::new(inv_sqrt2, 0.0),
                Complex64::new(-inv_sqrt2, 0.0),
                Complex64::new(0.0, 0.0),
            )?;
            let fidelity = target.inner(&traj.final_state).norm_sqr();
            Ok(SplitOutcome {
                populations: traj.final_populations(),
                fidelity,
                state: SplitState::Model(traj.final_state),
            })
        }
        BackendSpec::Grid {
            grid,
            dt,
            nonlinearity_g,
        } => {
            let psi0 = asymptotic_state(Trap::A, &setup.layout_at(0.0)?, &grid)?;
            let traj = propagate_schedule(
                &psi0,
                &setup.schedule,
                setup.beta,
                &PropagateOptions {
                    dt,
                    nonlinearity_g,
                    sample_every: usize::MAX,
                    enforce_spectral_limit: false,
                },
            )?;
            let layout_t = setup.layout_at(setup.half_time())?;
            let a = asymptotic_state(Trap::A, &layout_t, &grid)?;
            let b = asymptotic_state(Trap::B, &layout_t, &grid)?;
            let target = Wavefunction2D::superposition(&[
                (Complex64::new(1.0, 0.0), &a),
                (Complex64::new(-1.0, 0.0), &b),
            ])?;
            let fidelity = target.inner(&traj.final_state).norm_sqr();
            Ok(SplitOutcome {
                populations: traj.final_populations(),
                fidelity,
                state: SplitState::Grid(traj.final_state),
            })
        }
    }
}

/// Splitting stage with the adiabaticity gate: errors when the fidelity
/// against (ψ_A − ψ_B)/√2 falls below the backend threshold.
pub fn split(setup: &InterferometerSetup) -> Result<SplitOutcome> {
    let outcome = split_unchecked(setup)?;
    let threshold = match setup.backend {
        BackendSpec::Model { .. } => SPLIT_FIDELITY_MODEL,
        BackendSpec::Grid { .. } => SPLIT_FIDELITY_GRID,
    };
    if outcome.fidelity < threshold {
        return Err(Error::numerical(format!(
            "split fidelity {:.4} below {threshold} at T = {}: the passage is not adiabatic \
             enough; increase the total time (e.g. double T)",
            outcome.fidelity,
            setup.half_time()
        )));
    }
    Ok(outcome)
}

/// Imprints the relative phase φ on the B component of a split state.
pub fn imprint(state: &SplitState, setup: &InterferometerSetup, phi: f64) -> Result<SplitState> {
    match state {
        SplitState::Model(s) => Ok(SplitState::Model(s.with_phase_on_b(phi))),
        SplitState::Grid(psi) => {
            let layout = setup.layout_at(setup.half_time())?;
            Ok(SplitState::Grid(imprint_phase(psi, &layout, phi)?))
        }
    }
}

/// Populations at 2T after running the time-reversed schedule.
pub fn recombine(state: &SplitState, setup: &InterferometerSetup) -> Result<[f64; 3]> {
    let reversed = setup
        .schedule
        .reverse()
        .with_shake_origin(setup.half_time());
    match state {
        SplitState::Model(s) => {
            let dt = match setup.backend {
                BackendSpec::Model { dt } => dt,
                _ => return Err(Error::validation("model state with grid backend")),
            };
            let traj = evolve(
                &reversed,
                setup.beta,
                s,
                &EvolveOptions {
                    dt,
                    sample_every: usize::MAX,
                },
            )?;
            Ok(traj.final_populations())
        }
        SplitState::Grid(psi) => {
            let (dt, nonlinearity_g) = match setup.backend {
                BackendSpec::Grid {
                    dt, nonlinearity_g, ..
                } => (dt, nonlinearity_g),
                _ => return Err(Error::validation("grid state with model backend")),
            };
            let mut start = psi.clone();
            start.time = 0.0;
            let traj = propagate_schedule(
                &start,
                &reversed,
                setup.beta,
                &PropagateOptions {
                    dt,
                    nonlinearity_g,
                    sample_every: usize::MAX,
                    enforce_spectral_limit: false,
                },
            )?;
            let layout = setup.layout_at(setup.half_time())?;
            Ok(project_populations(&traj.final_state, &layout)?.populations)
        }
    }
}

/// φ = arccos[(P_A − (P_B + P_C)) / (P_A + P_B + P_C)] on the branch [0, π].
/// Arguments up to 1e−6 outside [−1, 1] are clamped; anything further out
/// is rejected as an invalid population triple.
pub fn read_phase(populations: [f64; 3]) -> Result<f64> {
    let [p_a, p_b, p_c] = populations;
    if populations.iter().any(|p| !p.is_finite() || *p < -1e-9) {
        return Err(Error::validation(format!(
            "populations must be non-negative and finite, got {populations:?}"
        )));
    }
    let total = p_a + p_b + p_c;
    if total <= 0.0 {
        return Err(Error::validation("total population is zero"));
    }
    let arg = (p_a - (p_b + p_c)) / total;
    if !(-1.0 - 1e-6..=1.0 + 1e-6).contains(&arg) {
        return Err(Error::validation(format!(
            "readout argument {arg} outside [-1 - 1e-6, 1 + 1e-6]"
        )));
    }
    Ok(arg.clamp(-1.0, 1.0).acos())
}

/// Folds an imprinted phase onto the arccos branch: min(φ mod 2π, 2π − φ mod 2π).
pub fn fold_phase(phi: f64) -> f64 {
    let f = phi.rem_euclid(2.0 * std::f64::consts::PI);
    f.min(2.0 * std::f64::consts::PI - f)
}

/// One full split–imprint–recombine–read run.
#[derive(Debug, Clone, Copy)]
pub struct InterferometerRun {
    pub phi_imprint: f64,
    pub populations: [f64; 3],
    pub p_a: f64,
    pub p_bc: f64,
    pub phi_measured: f64,
    /// |φ_measured − fold(φ_imprint)|.
    pub deviation: f64,
    pub split_fidelity: f64,
}

fn finish_run(
    setup: &InterferometerSetup,
    split_outcome: &SplitOutcome,
    phi: f64,
) -> Result<InterferometerRun> {
    let imprinted = imprint(&split_outcome.state, setup, phi)?;
    let populations = recombine(&imprinted, setup)?;
    let phi_measured = read_phase(populations)?;
    Ok(InterferometerRun {
        phi_imprint: phi,
        populations,
        p_a: populations[0],
        p_bc: populations[1] + populations[2],
        phi_measured,
        deviation: (phi_measured - fold_phase(phi)).abs(),
        split_fidelity: split_outcome.fidelity,
    })
}

/// Full protocol at a single imprinted phase.
pub fn run_once(setup: &InterferometerSetup, phi: f64) -> Result<InterferometerRun> {
    let s = split(setup)?;
    finish_run(setup, &s, phi)
}

/// Runs the protocol over a set of imprinted phases, computing the
/// splitting stage once and recombining per phase. Rows come back in input
/// order regardless of scheduling.
pub fn phase_sweep(setup: &InterferometerSetup, phis: &[f64]) -> Result<Vec<InterferometerRun>> {
    let s = split(setup)?;
    phis.par_iter()
        .map(|&phi| finish_run(setup, &s, phi))
        .collect()
}

/// One cell of the shaking-robustness map.
#[derive(Debug, Clone, Copy)]
pub struct ShakeCell {
    pub a_shake: f64,
    pub omega_shake: f64,
    pub phi_imprint: f64,
    /// |φ_shaken − φ_unshaken| for this imprint.
    pub delta_phi: f64,
}

/// Shaking-noise map: for every (A_shake, ω_shake) cell and every imprint
/// phase, the difference between the shaken and noiseless phase readouts.
/// Cells are evaluated independently (parallel) and returned ordered by
/// (amplitude, frequency, phase) of the input grids.
pub fn shake_robustness(
    setup: &InterferometerSetup,
    amplitudes: &[f64],
    frequencies: &[f64],
    phis: &[f64],
) -> Result<Vec<ShakeCell>> {
    // noiseless baseline, one split shared across phases
    let base_split = split_unchecked(setup)?;
    let mut baseline = Vec::with_capacity(phis.len());
    for &phi in phis {
        baseline.push(finish_run(setup, &base_split, phi)?.phi_measured);
    }

    let cells: Vec<(f64, f64)> = amplitudes
        .iter()
        .flat_map(|&a| frequencies.iter().map(move |&w| (a, w)))
        .collect();

    let rows: Result<Vec<Vec<ShakeCell>>> = cells
        .par_iter()
        .map(|&(a, w)| {
            let mut cell_setup = *setup;
            cell_setup.schedule = setup.schedule.with_shake(a, w)?;
            let s = split_unchecked(&cell_setup)?;
            let mut out = Vec::with_capacity(phis.len());
            for (k, &phi) in phis.iter().enumerate() {
                let run = finish_run(&cell_setup, &s, phi)?;
                out.push(ShakeCell {
                    a_shake: a,
                    omega_shake: w,
                    phi_imprint: phi,
                    delta_phi: (run.phi_measured - baseline[k]).abs(),
                });
            }
            Ok(out)
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}
