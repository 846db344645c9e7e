//! Full 2D time-dependent Schrödinger (optionally Gross–Pitaevskii) solver
//! over the moving truncated-harmonic landscape, with projections onto the
//! asymptotic trap states and regional phase imprinting.
//!
//! Discretization is spectral: periodic grid, Strang split-operator steps
//! with the kinetic factor applied in k-space and the potential rebuilt
//! every step from the instantaneous trap centers. Adjacent kinetic
//! half-steps are merged between samples, so each step costs one FFT pair.

use ndarray::{Array1, Array2, Zip};
use ndrustfft::{ndfft, ndifft, FftHandler};
use num_complex::Complex64;

use crate::couplings::{Trap, TrapLayout};
use crate::pulses::PulseSchedule;
use crate::{Error, Result};

/// Trap centers must stay at least this far from the domain edge (α⁻¹).
pub const DOMAIN_MARGIN: f64 = 6.0;

/// Below this pairwise trap separation the asymptotic states overlap enough
/// that population projections are flagged as non-orthogonal.
pub const ORTHOGONALITY_SEPARATION: f64 = 8.0;

/// |ψ|² below this is treated as vacuum when applying the potential phase;
/// the skipped rotation changes the state by less than 1e-12 in amplitude.
const VACUUM_DENSITY: f64 = 1e-24;

/// Uniform rectangular grid over [−L_x, L_x) × [−L_y, L_y), periodic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl Grid2D {
    /// Point counts must be powers of two (spectral transform efficiency).
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if !nx.is_power_of_two() || !ny.is_power_of_two() || nx < 8 || ny < 8 {
            return Err(Error::validation(format!(
                "grid point counts must be powers of two (>= 8), got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0) || !(ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::validation(format!(
                "grid half-extents must be positive, got {lx}, {ly}"
            )));
        }
        Ok(Grid2D { nx, ny, lx, ly })
    }

    pub fn square(n: usize, l: f64) -> Result<Self> {
        Grid2D::new(n, n, l, l)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.lx + i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.ly + j as f64 * self.dy()
    }

    /// FFT wavenumbers along one axis (standard order, Δk = π/L).
    fn wavenumbers(n: usize, l: f64) -> Array1<f64> {
        let dk = std::f64::consts::PI / l;
        Array1::from_iter((0..n).map(|i| {
            if i <= n / 2 {
                i as f64 * dk
            } else {
                (i as f64 - n as f64) * dk
            }
        }))
    }

    pub fn kx(&self) -> Array1<f64> {
        Self::wavenumbers(self.nx, self.lx)
    }

    pub fn ky(&self) -> Array1<f64> {
        Self::wavenumbers(self.ny, self.ly)
    }

    fn contains_with_margin(&self, center: [f64; 2], margin: f64) -> bool {
        center[0].abs() <= self.lx - margin && center[1].abs() <= self.ly - margin
    }
}

/// Complex field over a [`Grid2D`], indexed `field[(ix, iy)]`.
#[derive(Debug, Clone)]
pub struct Wavefunction2D {
    pub field: Array2<Complex64>,
    grid: Grid2D,
    pub time: f64,
}

impl Wavefunction2D {
    pub fn new(field: Array2<Complex64>, grid: Grid2D, time: f64) -> Result<Self> {
        if field.dim() != (grid.nx, grid.ny) {
            return Err(Error::validation(format!(
                "field shape {:?} does not match grid {}x{}",
                field.dim(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Wavefunction2D { field, grid, time })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// √(∬|ψ|² dx dy).
    pub fn norm(&self) -> f64 {
        let s: f64 = self.field.iter().map(|c| c.norm_sqr()).sum();
        (s * self.grid.cell_area()).sqrt()
    }

    /// ⟨self|other⟩ = ∬ self* · other dx dy.
    pub fn inner(&self, other: &Wavefunction2D) -> Complex64 {
        let s: Complex64 = self
            .field
            .iter()
            .zip(other.field.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.grid.cell_area()
    }

    /// Normalized linear combination Σ cᵢ ψᵢ.
    pub fn superposition(terms: &[(Complex64, &Wavefunction2D)]) -> Result<Wavefunction2D> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::validation("empty superposition"))?;
        let grid = first.grid;
        let mut field = Array2::<Complex64>::zeros((grid.nx, grid.ny));
        for (c, psi) in terms {
            if psi.grid != grid {
                return Err(Error::validation("superposition terms on different grids"));
            }
            Zip::from(&mut field)
                .and(&psi.field)
                .for_each(|f, p| *f += c * p);
        }
        let mut out = Wavefunction2D::new(field, grid, first.time)?;
        let n = out.norm();
        if n < 1e-12 {
            return Err(Error::validation("superposition has vanishing norm"));
        }
        out.field.mapv_inplace(|c| c / n);
        Ok(out)
    }
}

/// Truncated-harmonic landscape: pointwise minimum of the three displaced
/// parabolas, plus the cubic nonlinearity coefficient for mean-field runs.
#[derive(Debug, Clone, Copy)]
pub struct PotentialLandscape {
    pub centers: [[f64; 2]; 3],
    pub omega: f64,
    pub nonlinearity_g: f64,
}

impl PotentialLandscape {
    pub fn from_layout(layout: &TrapLayout, nonlinearity_g: f64) -> Self {
        PotentialLandscape {
            centers: [layout.pos_a(), layout.pos_b(), layout.pos_c()],
            omega: 1.0,
            nonlinearity_g,
        }
    }

    /// V(x, y) = min over traps of ½ ω² r².
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let mut r2 = f64::INFINITY;
        for c in &self.centers {
            let dx = x - c[0];
            let dy = y - c[1];
            r2 = r2.min(dx * dx + dy * dy);
        }
        0.5 * self.omega * self.omega * r2
    }
}

/// Ground state of one trap as if isolated: the product of 1D harmonic
/// oscillator ground states centered on the trap, normalized on the grid.
pub fn asymptotic_state(trap: Trap, layout: &TrapLayout, grid: &Grid2D) -> Result<Wavefunction2D> {
    let center = layout.position(trap);
    if !grid.contains_with_margin(center, DOMAIN_MARGIN) {
        return Err(Error::validation(format!(
            "trap {trap:?} center ({}, {}) is closer than {DOMAIN_MARGIN} to the domain edge",
            center[0], center[1]
        )));
    }
    let mut field = Array2::<Complex64>::zeros((grid.nx, grid.ny));
    for i in 0..grid.nx {
        let gx = (-0.5 * (grid.x(i) - center[0]).powi(2)).exp();
        for j in 0..grid.ny {
            let gy = (-0.5 * (grid.y(j) - center[1]).powi(2)).exp();
            field[(i, j)] = Complex64::new(gx * gy, 0.0);
        }
    }
    let mut psi = Wavefunction2D::new(field, *grid, 0.0)?;
    let n = psi.norm();
    psi.field.mapv_inplace(|c| c / n);
    Ok(psi)
}

/// Populations from projecting onto the asymptotic ground states at the
/// given layout, with a warning flag when the traps are close enough that
/// those states are significantly non-orthogonal.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    pub populations: [f64; 3],
    pub nonorthogonal_warning: bool,
}

pub fn project_populations(psi: &Wavefunction2D, layout: &TrapLayout) -> Result<Projection> {
    let mut populations = [0.0; 3];
    for trap in Trap::ALL {
        let basis = asymptotic_state(trap, layout, psi.grid())?;
        populations[trap.index()] = basis.inner(psi).norm_sqr();
    }
    Ok(Projection {
        populations,
        nonorthogonal_warning: layout.min_separation() < ORTHOGONALITY_SEPARATION,
    })
}

/// Multiplies ψ by e^{iφ} on the Voronoi cell of trap B (grid points
/// strictly closer to B than to A and C). Requires the A and B traps to be
/// far enough apart that the regional cut is clean.
pub fn imprint_phase(
    psi: &Wavefunction2D,
    layout: &TrapLayout,
    phi: f64,
) -> Result<Wavefunction2D> {
    if layout.d_ab() <= ORTHOGONALITY_SEPARATION {
        return Err(Error::validation(format!(
            "phase imprint requires d_AB > {ORTHOGONALITY_SEPARATION}, got {}",
            layout.d_ab()
        )));
    }
    if phi == 0.0 {
        return Ok(psi.clone());
    }
    let grid = *psi.grid();
    let factor = Complex64::from_polar(1.0, phi);
    let [a, b, c] = [layout.pos_a(), layout.pos_b(), layout.pos_c()];
    let mut out = psi.clone();
    for i in 0..grid.nx() {
        let x = grid.x(i);
        for j in 0..grid.ny() {
            let y = grid.y(j);
            let d2 = |p: [f64; 2]| (x - p[0]).powi(2) + (y - p[1]).powi(2);
            let db = d2(b);
            if db < d2(a) && db < d2(c) {
                out.field[(i, j)] *= factor;
            }
        }
    }
    Ok(out)
}

/// Total energy ⟨ψ|H|ψ⟩ with the Gross–Pitaevskii functional convention
/// (the interaction term enters with weight g/2).
pub fn energy_expectation(psi: &Wavefunction2D, potential: &PotentialLandscape) -> f64 {
    let grid = psi.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut work = Array2::<Complex64>::zeros((nx, ny));
    let mut hat = Array2::<Complex64>::zeros((nx, ny));
    let mut hx = FftHandler::<f64>::new(nx);
    let mut hy = FftHandler::<f64>::new(ny);
    ndfft(&psi.field, &mut work, &mut hy, 1);
    ndfft(&work, &mut hat, &mut hx, 0);
    let kx = grid.kx();
    let ky = grid.ky();
    let mut kinetic = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            kinetic += 0.5 * (kx[i] * kx[i] + ky[j] * ky[j]) * hat[(i, j)].norm_sqr();
        }
    }
    kinetic *= grid.cell_area() / (nx * ny) as f64;
    let mut pot = 0.0;
    for i in 0..nx {
        let x = grid.x(i);
        for j in 0..ny {
            let rho = psi.field[(i, j)].norm_sqr();
            pot += (potential.value(x, grid.y(j)) + 0.5 * potential.nonlinearity_g * rho) * rho;
        }
    }
    pot *= grid.cell_area();
    kinetic + pot
}

#[derive(Debug, Clone, Copy)]
pub struct PropagateOptions {
    /// Split-operator step, ω⁻¹.
    pub dt: f64,
    /// Cubic nonlinearity coefficient g (natural units); 0 for a single atom.
    pub nonlinearity_g: f64,
    /// Record a sample every this many steps.
    pub sample_every: usize,
    /// When set, refuse steps whose kinetic phase at the grid cutoff exceeds
    /// π/4 (dt·k_max²/2 ≥ π/4). Off by default: the spectral propagator is
    /// unconditionally unitary and the occupied modes sit far below the
    /// cutoff, so the production step sizes would otherwise be rejected.
    pub enforce_spectral_limit: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions {
            dt: 0.05,
            nonlinearity_g: 0.0,
            sample_every: 200,
            enforce_spectral_limit: false,
        }
    }
}

/// One recorded instant of a grid trajectory.
#[derive(Debug, Clone, Copy)]
pub struct GridSample {
    pub t: f64,
    pub populations: [f64; 3],
    pub norm: f64,
    pub nonorthogonal_warning: bool,
}

/// Sampled history of a grid propagation.
#[derive(Debug)]
pub struct GridTrajectory {
    pub samples: Vec<GridSample>,
    pub final_state: Wavefunction2D,
}

impl GridTrajectory {
    pub fn final_populations(&self) -> [f64; 3] {
        self.samples
            .last()
            .map(|s| s.populations)
            .unwrap_or([f64::NAN; 3])
    }
}

/// Propagates over a pulse schedule (layouts derived from the schedule's
/// distances at fixed β), from t = 0 to t = T.
pub fn propagate_schedule(
    psi: &Wavefunction2D,
    schedule: &PulseSchedule,
    beta: f64,
    opts: &PropagateOptions,
) -> Result<GridTrajectory> {
    let provider = |t: f64| -> Result<TrapLayout> {
        let (d_ab, d_bc) = schedule.distances_at(t)?;
        TrapLayout::new(beta, d_ab, d_bc)
    };
    propagate_observed(psi, provider, schedule.total_time(), opts, |_, _| {})
}

/// Propagates in a frozen trap layout for the given duration.
pub fn propagate_static(
    psi: &Wavefunction2D,
    layout: &TrapLayout,
    duration: f64,
    opts: &PropagateOptions,
) -> Result<GridTrajectory> {
    let layout = *layout;
    propagate_observed(psi, move |_| Ok(layout), duration, opts, |_, _| {})
}

/// Core split-operator loop. `observer` is invoked at every recorded sample
/// with the freshly synchronized state (used by the CLI for field dumps).
pub fn propagate_observed(
    psi: &Wavefunction2D,
    layouts: impl Fn(f64) -> Result<TrapLayout>,
    duration: f64,
    opts: &PropagateOptions,
    mut observer: impl FnMut(&GridSample, &Wavefunction2D),
) -> Result<GridTrajectory> {
    if !(opts.dt > 0.0) || !(duration > 0.0) {
        return Err(Error::validation(format!(
            "need positive dt and duration, got dt={}, duration={duration}",
            opts.dt
        )));
    }
    let norm0 = psi.norm();
    if (norm0 - 1.0).abs() > 1e-6 {
        return Err(Error::validation(format!(
            "initial state must be normalized, got norm {norm0}"
        )));
    }
    let grid = *psi.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let n_steps = ((duration / opts.dt - 1e-9).ceil() as usize).max(1);
    let dt = duration / n_steps as f64;
    let sample_every = opts.sample_every.max(1);

    let kx = grid.kx();
    let ky = grid.ky();
    if opts.enforce_spectral_limit {
        let kmax2 = kx.iter().chain(ky.iter()).fold(0.0f64, |m, k| m.max(k * k));
        if dt * kmax2 >= 0.5 * std::f64::consts::PI {
            return Err(Error::validation(format!(
                "dt = {dt} violates the spectral phase limit dt k_max^2/2 < pi/4 \
                 (k_max^2 = {kmax2:.3})"
            )));
        }
    }

    // kinetic phase tables for a half and a full step
    let phase_table = |step: f64| -> Array2<Complex64> {
        let mut t = Array2::<Complex64>::zeros((nx, ny));
        for i in 0..nx {
            for j in 0..ny {
                let k2 = kx[i] * kx[i] + ky[j] * ky[j];
                t[(i, j)] = Complex64::from_polar(1.0, -0.5 * k2 * step);
            }
        }
        t
    };
    let kin_half = phase_table(0.5 * dt);
    let kin_full = phase_table(dt);

    let mut hx = FftHandler::<f64>::new(nx);
    let mut hy = FftHandler::<f64>::new(ny);
    let mut field = psi.field.clone();
    let mut work = Array2::<Complex64>::zeros((nx, ny));

    let mut apply_kinetic = |field: &mut Array2<Complex64>,
                             work: &mut Array2<Complex64>,
                             table: &Array2<Complex64>| {
        ndfft(field, work, &mut hy, 1);
        ndfft(work, field, &mut hx, 0);
        Zip::from(field.view_mut())
            .and(table)
            .for_each(|f, p| *f *= p);
        ndifft(field, work, &mut hx, 0);
        ndifft(work, field, &mut hy, 1);
    };

    let xs: Vec<f64> = (0..nx).map(|i| grid.x(i)).collect();
    let ys: Vec<f64> = (0..ny).map(|j| grid.y(j)).collect();
    let g = opts.nonlinearity_g;

    let mut samples = Vec::new();
    let mut record = |t: f64,
                      field: &Array2<Complex64>,
                      observer: &mut dyn FnMut(&GridSample, &Wavefunction2D)|
     -> Result<()> {
        let layout = layouts(t)?;
        let state = Wavefunction2D::new(field.clone(), grid, t)?;
        let proj = project_populations(&state, &layout)?;
        let sample = GridSample {
            t,
            populations: proj.populations,
            norm: state.norm(),
            nonorthogonal_warning: proj.nonorthogonal_warning,
        };
        samples.push(sample);
        observer(&sample, &state);
        Ok(())
    };

    record(0.0, &field, &mut observer)?;
    apply_kinetic(&mut field, &mut work, &kin_half);
    for step in 0..n_steps {
        let t_mid = (step as f64 + 0.5) * dt;
        let layout = layouts(t_mid)?;
        for center in [layout.pos_a(), layout.pos_b(), layout.pos_c()] {
            if !grid.contains_with_margin(center, DOMAIN_MARGIN) {
                return Err(Error::validation(format!(
                    "trap center ({}, {}) left the padded domain at t = {t_mid}",
                    center[0], center[1]
                )));
            }
        }
        // potential phase, rebuilt from the instantaneous trap centers
        let [ca, cb, cc] = [layout.pos_a(), layout.pos_b(), layout.pos_c()];
        let dya: Vec<f64> = ys.iter().map(|y| (y - ca[1]) * (y - ca[1])).collect();
        let dyb: Vec<f64> = ys.iter().map(|y| (y - cb[1]) * (y - cb[1])).collect();
        let dyc: Vec<f64> = ys.iter().map(|y| (y - cc[1]) * (y - cc[1])).collect();
        for i in 0..nx {
            let dxa = (xs[i] - ca[0]) * (xs[i] - ca[0]);
            let dxb = (xs[i] - cb[0]) * (xs[i] - cb[0]);
            let dxc = (xs[i] - cc[0]) * (xs[i] - cc[0]);
            let mut row = field.row_mut(i);
            let row = row.as_slice_mut().expect("contiguous row");
            for (j, f) in row.iter_mut().enumerate() {
                let rho = f.norm_sqr();
                if rho < VACUUM_DENSITY {
                    continue;
                }
                let r2 = (dxa + dya[j]).min(dxb + dyb[j]).min(dxc + dyc[j]);
                let (s, c) = (-dt * (0.5 * r2 + g * rho)).sin_cos();
                *f *= Complex64::new(c, s);
            }
        }
        let at_end = step + 1 == n_steps;
        let at_sample = (step + 1) % sample_every == 0;
        if at_end || at_sample {
            apply_kinetic(&mut field, &mut work, &kin_half);
            record((step + 1) as f64 * dt, &field, &mut observer)?;
            if !at_end {
                apply_kinetic(&mut field, &mut work, &kin_half);
            }
        } else {
            apply_kinetic(&mut field, &mut work, &kin_full);
        }
    }

    let final_state = Wavefunction2D::new(field, grid, duration)?;
    Ok(GridTrajectory {
        samples,
        final_state,
    })
}
