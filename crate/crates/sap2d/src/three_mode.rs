//! The 3×3 model restricted to the asymptotic trap ground states
//! {ψ_A, ψ_B, ψ_C}: Hamiltonian construction, closed-form spectrum,
//! eigenstates, level-crossing detection, and unitary time evolution over a
//! pulse schedule.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::couplings::{couplings_of, CouplingTriple, Trap, TrapLayout};
use crate::pulses::PulseSchedule;
use crate::{Error, Result};

/// Two coinciding upper energies closer than this count as a level crossing.
pub const CROSSING_GAP_TOL: f64 = 1e-9;

/// Crossings are only reported while at least one coupling exceeds this, so
/// the trivial degeneracy of fully decoupled traps is not flagged.
pub const CROSSING_COUPLING_FLOOR: f64 = 1e-6;

/// Complex amplitude triple over {ψ_A, ψ_B, ψ_C}.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeModeState {
    amps: Vector3<Complex64>,
}

impl ThreeModeState {
    /// Requires |c_A|² + |c_B|² + |c_C|² = 1 within 1e−10.
    pub fn new(c_a: Complex64, c_b: Complex64, c_c: Complex64) -> Result<Self> {
        let amps = Vector3::new(c_a, c_b, c_c);
        let norm = amps.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::validation(format!(
                "state must be normalized to 1 within 1e-10, got norm {norm}"
            )));
        }
        Ok(ThreeModeState { amps })
    }

    /// Basis state localized in one trap.
    pub fn trap(trap: Trap) -> Self {
        let mut amps = Vector3::zeros();
        amps[trap.index()] = Complex64::new(1.0, 0.0);
        ThreeModeState { amps }
    }

    pub(crate) fn from_vector(amps: Vector3<Complex64>) -> Self {
        ThreeModeState { amps }
    }

    pub fn amplitude(&self, trap: Trap) -> Complex64 {
        self.amps[trap.index()]
    }

    pub fn amplitudes(&self) -> &Vector3<Complex64> {
        &self.amps
    }

    pub fn populations(&self) -> [f64; 3] {
        [
            self.amps[0].norm_sqr(),
            self.amps[1].norm_sqr(),
            self.amps[2].norm_sqr(),
        ]
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn inner(&self, other: &ThreeModeState) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    /// Multiplies the ψ_B amplitude by e^{iφ}; the model-side phase imprint.
    pub fn with_phase_on_b(&self, phi: f64) -> Self {
        let mut amps = self.amps;
        amps[1] *= Complex64::from_polar(1.0, phi);
        ThreeModeState { amps }
    }
}

/// Spectrum of the coupling Hamiltonian at one instant: energies sorted
/// ascending, matching orthonormal eigenvectors, and the depressed-cubic
/// data (p, q, discriminant) they came from.
#[derive(Debug, Clone)]
pub struct SpectrumSnapshot {
    pub energies: [f64; 3],
    pub eigenvectors: [Vector3<f64>; 3],
    pub p: f64,
    pub q: f64,
    pub discriminant: f64,
}

impl SpectrumSnapshot {
    /// Gap between the two upper energies.
    pub fn upper_gap(&self) -> f64 {
        self.energies[2] - self.energies[1]
    }
}

/// H = (1/2)·[[0, −J_AB, −J_AC], [−J_AB, 0, −J_BC], [−J_AC, −J_BC, 0]] in
/// units of ħω (ħ = 1).
pub fn hamiltonian(j: &CouplingTriple) -> Matrix3<f64> {
    0.5 * Matrix3::new(
        0.0, -j.j_ab, -j.j_ac, //
        -j.j_ab, 0.0, -j.j_bc, //
        -j.j_ac, -j.j_bc, 0.0,
    )
}

/// 4p³ + 27q² of the characteristic cubic E³ + pE + q = 0; non-positive for
/// every real coupling triple and zero exactly when all three rates agree.
pub fn discriminant(j: &CouplingTriple) -> f64 {
    let p = -0.25 * (j.j_ab * j.j_ab + j.j_bc * j.j_bc + j.j_ac * j.j_ac);
    let q = 0.25 * j.j_ab * j.j_bc * j.j_ac;
    4.0 * p * p * p + 27.0 * q * q
}

/// Closed-form eigendecomposition of `hamiltonian(j)`.
///
/// Energies come from the trigonometric solution of the depressed cubic;
/// with the k-convention used here they emerge already sorted ascending.
/// Eigenvectors use the rational closed form where it is well conditioned
/// and fall back to null-space / orthogonal-completion constructions near
/// degeneracies, so the returned frame is always orthonormal.
pub fn spectrum(j: &CouplingTriple) -> SpectrumSnapshot {
    let p = -0.25 * (j.j_ab * j.j_ab + j.j_bc * j.j_bc + j.j_ac * j.j_ac);
    let q = 0.25 * j.j_ab * j.j_bc * j.j_ac;
    let disc = 4.0 * p * p * p + 27.0 * q * q;

    let scale = j.max_rate();
    if scale == 0.0 {
        // all couplings zero: triple degeneracy at E = 0, canonical basis
        return SpectrumSnapshot {
            energies: [0.0; 3],
            eigenvectors: [Vector3::x(), Vector3::y(), Vector3::z()],
            p,
            q,
            discriminant: disc,
        };
    }

    // solve on couplings normalized by the largest rate; p̂ ≤ -1/4 there, so
    // the arccos argument never degenerates
    let js = CouplingTriple {
        j_ab: j.j_ab / scale,
        j_bc: j.j_bc / scale,
        j_ac: j.j_ac / scale,
    };
    let ps = -0.25 * (js.j_ab * js.j_ab + js.j_bc * js.j_bc + js.j_ac * js.j_ac);
    let qs = 0.25 * js.j_ab * js.j_bc * js.j_ac;

    let m = 2.0 * (-ps / 3.0).sqrt();
    let arg = (1.5 * qs / ps) * (-3.0 / ps).sqrt();
    let theta = arg.clamp(-1.0, 1.0).acos();
    let mut energies = [0.0; 3];
    for (k, e) in energies.iter_mut().enumerate() {
        // k = 1, 2, 3 gives ascending order for theta in [0, pi]
        *e = scale * m * (theta / 3.0 + (k + 1) as f64 * 2.0 * std::f64::consts::PI / 3.0).cos();
    }

    let h = hamiltonian(&js);
    let e_scaled = [energies[0] / scale, energies[1] / scale, energies[2] / scale];
    let eigenvectors = eigenvector_frame(&h, &js, &e_scaled);

    SpectrumSnapshot {
        energies,
        eigenvectors,
        p,
        q,
        discriminant: disc,
    }
}

/// Residual-checked eigenvector construction for the (scaled) Hamiltonian.
///
/// Near a degeneracy the arccos branch limits the energy accuracy to about
/// ε·m²/gap, so candidates cannot beat ~1e-10 there; the acceptance gate
/// reflects that, and anything worse falls through to an exactly
/// orthonormal completion whose residual is bounded by the gap itself.
fn eigenvector_frame(h: &Matrix3<f64>, js: &CouplingTriple, e: &[f64; 3]) -> [Vector3<f64>; 3] {
    const RESIDUAL_TOL: f64 = 1e-10;

    let isolation = |k: usize| -> f64 {
        (0..3)
            .filter(|&m| m != k)
            .map(|m| (e[k] - e[m]).abs())
            .fold(f64::INFINITY, f64::min)
    };
    // claim well-isolated eigenvalues first
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| isolation(b).partial_cmp(&isolation(a)).unwrap());

    let mut vecs: [Option<Vector3<f64>>; 3] = [None, None, None];
    let mut accepted: Vec<Vector3<f64>> = Vec::new();

    // project a candidate off the vectors already claimed, so the returned
    // frame is orthonormal to machine precision (the per-step propagator is
    // only as unitary as this frame)
    let orthogonalize = |v: Vector3<f64>, accepted: &[Vector3<f64>]| -> Option<Vector3<f64>> {
        let mut w = v;
        for u in accepted {
            w -= u * u.dot(&w);
        }
        let n = w.norm();
        (n > 1e-3).then(|| w / n)
    };

    for &k in &order {
        let ek = e[k];
        let mut candidate: Option<Vector3<f64>> = None;
        // closed-form components a_k, b_k, -c_k
        if js.j_ab != 0.0 {
            let a = js.j_bc - 2.0 * ek * js.j_ac / js.j_ab;
            let b = js.j_ac - 2.0 * ek * js.j_bc / js.j_ab;
            let c = js.j_ab - 4.0 * ek * ek / js.j_ab;
            let v = Vector3::new(a, b, -c);
            let n = v.norm();
            if n.is_finite() && n > 0.0 {
                candidate = Some(v / n);
            }
        }
        let ok = |v: &Vector3<f64>| (h * v - ek * v).amax() <= RESIDUAL_TOL;
        let candidate = match candidate.and_then(|v| orthogonalize(v, &accepted)) {
            Some(v) if ok(&v) => Some(v),
            _ => {
                // null space of (H - E) via the largest row cross product
                let m = h - Matrix3::identity() * ek;
                let rows = [
                    m.row(0).transpose(),
                    m.row(1).transpose(),
                    m.row(2).transpose(),
                ];
                [(0, 1), (1, 2), (0, 2)]
                    .iter()
                    .map(|&(i, l)| rows[i].cross(&rows[l]))
                    .max_by(|a, b| a.norm_squared().partial_cmp(&b.norm_squared()).unwrap())
                    .filter(|v| v.norm_squared() > 0.0 && v.iter().all(|x| x.is_finite()))
                    .and_then(|v| orthogonalize(v / v.norm(), &accepted))
                    .filter(ok)
            }
        };
        if let Some(v) = candidate {
            vecs[k] = Some(v);
            accepted.push(v);
        }
    }

    // degenerate leftovers: complete an orthonormal frame around what we have
    for k in 0..3 {
        if vecs[k].is_some() {
            continue;
        }
        let others: Vec<Vector3<f64>> = vecs.iter().flatten().copied().collect();
        let v = match others.len() {
            2 => others[0].cross(&others[1]).normalize(),
            1 => {
                let u = others[0];
                // seed with the basis vector least aligned with u
                let seed = (0..3)
                    .min_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).unwrap())
                    .unwrap();
                let mut w = Vector3::zeros();
                w[seed] = 1.0;
                (w - u * u.dot(&w)).normalize()
            }
            _ => Vector3::x(),
        };
        vecs[k] = Some(v);
    }

    let mut frame = [Vector3::zeros(); 3];
    for (k, slot) in frame.iter_mut().enumerate() {
        let mut v = vecs[k].unwrap();
        // canonical sign: largest-magnitude component positive
        let lead = (0..3)
            .max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap())
            .unwrap();
        if v[lead] < 0.0 {
            v = -v;
        }
        *slot = v;
    }
    frame
}

/// One recorded instant of a model trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub d_ab: f64,
    pub d_bc: f64,
    pub d_ac: f64,
    pub couplings: CouplingTriple,
    pub energies: [f64; 3],
    pub populations: [f64; 3],
}

/// Sampled history of an `evolve` run. `points` and `snapshots` are aligned.
#[derive(Debug, Clone)]
pub struct ModelTrajectory {
    pub points: Vec<TrajectoryPoint>,
    pub snapshots: Vec<SpectrumSnapshot>,
    pub final_state: ThreeModeState,
}

impl ModelTrajectory {
    pub fn final_populations(&self) -> [f64; 3] {
        self.final_state.populations()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Integrator step, ω⁻¹.
    pub dt: f64,
    /// Record every this many steps (the endpoint is always recorded).
    pub sample_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            dt: 0.1,
            sample_every: 50,
        }
    }
}

fn layout_at(schedule: &PulseSchedule, beta: f64, t: f64) -> Result<TrapLayout> {
    let (d_ab, d_bc) = schedule.distances_at(t)?;
    TrapLayout::new(beta, d_ab, d_bc)
}

/// Propagates `psi0` over the schedule with per-step unitaries
/// exp(−i H(t_mid) dt) built from the analytic spectrum at the step
/// midpoint. Unconditionally unitary; norm drift stays at rounding level.
pub fn evolve(
    schedule: &PulseSchedule,
    beta: f64,
    psi0: &ThreeModeState,
    opts: &EvolveOptions,
) -> Result<ModelTrajectory> {
    if !(opts.dt > 0.0) {
        return Err(Error::validation(format!(
            "time step must be positive, got {}",
            opts.dt
        )));
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::validation(format!(
            "initial state must be normalized, got norm {norm}"
        )));
    }
    let total = schedule.total_time();
    let n_steps = ((total / opts.dt - 1e-9).ceil() as usize).max(1);
    let dt = total / n_steps as f64;
    let sample_every = opts.sample_every.max(1);

    let mut psi = psi0.amplitudes().to_owned();
    let mut points = Vec::new();
    let mut snapshots = Vec::new();

    let mut record = |t: f64, psi: &Vector3<Complex64>| -> Result<()> {
        let layout = layout_at(schedule, beta, t)?;
        let j = couplings_of(&layout);
        let snap = spectrum(&j);
        points.push(TrajectoryPoint {
            t,
            d_ab: layout.d_ab(),
            d_bc: layout.d_bc(),
            d_ac: layout.distance_ac(),
            couplings: j,
            energies: snap.energies,
            populations: [psi[0].norm_sqr(), psi[1].norm_sqr(), psi[2].norm_sqr()],
        });
        snapshots.push(snap);
        Ok(())
    };

    record(0.0, &psi)?;
    for step in 0..n_steps {
        let t_mid = (step as f64 + 0.5) * dt;
        let layout = layout_at(schedule, beta, t_mid)?;
        let snap = spectrum(&couplings_of(&layout));
        // psi <- sum_k e^{-i E_k dt} v_k (v_k . psi)
        let mut next = Vector3::zeros();
        for k in 0..3 {
            let v = &snap.eigenvectors[k];
            let proj = v.x * psi[0] + v.y * psi[1] + v.z * psi[2];
            let phase = Complex64::from_polar(1.0, -snap.energies[k] * dt);
            let w = proj * phase;
            next[0] += v.x * w;
            next[1] += v.y * w;
            next[2] += v.z * w;
        }
        psi = next;
        let t_now = (step + 1) as f64 * dt;
        if (step + 1) % sample_every == 0 || step + 1 == n_steps {
            record(t_now.min(total), &psi)?;
        }
    }

    Ok(ModelTrajectory {
        points,
        snapshots,
        final_state: ThreeModeState::from_vector(psi),
    })
}

/// Times in `t_grid`'s span where the two upper energies of the schedule's
/// spectrum become degenerate (gap < [`CROSSING_GAP_TOL`]) while the traps
/// are still coupled. Bracketed grid minima are refined by golden-section
/// search before applying the tolerance.
pub fn find_crossings(schedule: &PulseSchedule, beta: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    let gap_at = |t: f64| -> Result<(f64, f64)> {
        let layout = layout_at(schedule, beta, t)?;
        let j = couplings_of(&layout);
        Ok((spectrum(&j).upper_gap(), j.max_rate()))
    };

    let mut gaps = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        gaps.push(gap_at(t)?);
    }

    let mut crossings: Vec<f64> = Vec::new();
    for i in 1..t_grid.len().saturating_sub(1) {
        let (g, jmax) = gaps[i];
        if jmax <= CROSSING_COUPLING_FLOOR {
            continue;
        }
        if g > gaps[i - 1].0 || g > gaps[i + 1].0 {
            continue;
        }
        // golden-section refinement of the bracketed minimum; near an exact
        // crossing the evaluated gap bottoms out in rounding noise, so keep
        // the best sample seen rather than the final midpoint value
        let (mut lo, mut hi) = (t_grid[i - 1], t_grid[i + 1]);
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = gap_at(x1)?.0;
        let mut f2 = gap_at(x2)?.0;
        let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        for _ in 0..200 {
            if hi - lo < 1e-13 * schedule.total_time().max(1.0) {
                break;
            }
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = gap_at(x1)?.0;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = gap_at(x2)?.0;
            }
            for (x, f) in [(x1, f1), (x2, f2)] {
                if f < best.1 {
                    best = (x, f);
                }
            }
        }
        let (t_star, g_star) = best;
        let j_star = gap_at(t_star)?.1;
        if g_star < CROSSING_GAP_TOL && j_star > CROSSING_COUPLING_FLOOR {
            let spacing = if t_grid.len() > 1 {
                t_grid[1] - t_grid[0]
            } else {
                0.0
            };
            if crossings
                .last()
                .map_or(true, |&prev| (t_star - prev).abs() > spacing)
            {
                crossings.push(t_star);
            }
        }
    }
    Ok(crossings)
}

/// Eigenstate paths relabeled for continuity across a trajectory.
#[derive(Debug, Clone)]
pub struct TrackedEigenstates {
    /// `vectors[i][l]` is the sign-continuous eigenvector of label l
    /// (Ψ_{l+1}) at snapshot i.
    pub vectors: Vec<[Vector3<f64>; 3]>,
    /// Energy along each labeled path.
    pub energies: Vec<[f64; 3]>,
    /// True where the best available overlap fell below 0.9 for some label.
    pub ambiguous: Vec<bool>,
}

/// Relabels the eigenpairs of consecutive snapshots by maximal overlap with
/// the previous step, fixing signs so overlaps stay positive. Labels seed at
/// the first snapshot in ascending energy order (Ψ₂ is the ψ_A-dominant
/// state for the counterintuitive schedules used here).
pub fn track_eigenstates(snapshots: &[SpectrumSnapshot]) -> Result<TrackedEigenstates> {
    if snapshots.is_empty() {
        return Err(Error::validation("cannot track an empty trajectory"));
    }
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];

    let mut vectors = Vec::with_capacity(snapshots.len());
    let mut energies = Vec::with_capacity(snapshots.len());
    let mut ambiguous = Vec::with_capacity(snapshots.len());

    vectors.push(snapshots[0].eigenvectors);
    energies.push(snapshots[0].energies);
    ambiguous.push(false);

    for snap in &snapshots[1..] {
        let prev: &[Vector3<f64>; 3] = vectors.last().unwrap();
        let mut overlaps = [[0.0f64; 3]; 3];
        for (l, pv) in prev.iter().enumerate() {
            for (m, nv) in snap.eigenvectors.iter().enumerate() {
                overlaps[l][m] = pv.dot(nv);
            }
        }
        let best = PERMS
            .iter()
            .max_by(|pa, pb| {
                let sa: f64 = (0..3).map(|l| overlaps[l][pa[l]].abs()).sum();
                let sb: f64 = (0..3).map(|l| overlaps[l][pb[l]].abs()).sum();
                sa.partial_cmp(&sb).unwrap()
            })
            .unwrap();
        let mut vecs = [Vector3::zeros(); 3];
        let mut ens = [0.0; 3];
        let mut ambig = false;
        for l in 0..3 {
            let m = best[l];
            let o = overlaps[l][m];
            if o.abs() < 0.9 {
                ambig = true;
            }
            vecs[l] = if o < 0.0 {
                -snap.eigenvectors[m]
            } else {
                snap.eigenvectors[m]
            };
            ens[l] = snap.energies[m];
        }
        vectors.push(vecs);
        energies.push(ens);
        ambiguous.push(ambig);
    }

    Ok(TrackedEigenstates {
        vectors,
        energies,
        ambiguous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn triple(a: f64, b: f64, c: f64) -> CouplingTriple {
        CouplingTriple {
            j_ab: a,
            j_bc: b,
            j_ac: c,
        }
    }

    #[test]
    fn hamiltonian_examples() {
        assert_eq!(hamiltonian(&triple(0.0, 0.0, 0.0)), Matrix3::zeros());
        let h = hamiltonian(&triple(2.0, 2.0, 2.0));
        let expected = -(Matrix3::repeat(1.0) - Matrix3::identity());
        assert_eq!(h, expected);
        let h = hamiltonian(&triple(0.3, 0.7, 0.1));
        assert_eq!(h, h.transpose());
        assert_eq!(h.trace(), 0.0);
    }

    #[test]
    fn spectrum_equal_couplings() {
        let s = spectrum(&triple(0.8, 0.8, 0.8));
        assert_relative_eq!(s.energies[0], -0.8, max_relative = 1e-12);
        assert_relative_eq!(s.energies[1], 0.4, max_relative = 1e-12);
        assert_relative_eq!(s.energies[2], 0.4, max_relative = 1e-12);
        // degenerate pair still yields an orthonormal frame
        for k in 0..3 {
            for m in 0..3 {
                let d = s.eigenvectors[k].dot(&s.eigenvectors[m]);
                let expected = if k == m { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(d, expected, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn spectrum_dark_state() {
        let j = triple(0.3, 0.4, 0.0);
        let s = spectrum(&j);
        assert_abs_diff_eq!(s.energies[1], 0.0, epsilon = 1e-12);
        let theta = (j.j_ab / j.j_bc).atan();
        let v = s.eigenvectors[1];
        let expected = Vector3::new(theta.cos(), 0.0, -theta.sin());
        // same ray up to the canonical sign
        let overlap = v.dot(&expected).abs();
        assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_zero_couplings() {
        let s = spectrum(&triple(0.0, 0.0, 0.0));
        assert_eq!(s.energies, [0.0; 3]);
        assert_eq!(s.discriminant, 0.0);
        assert_eq!(s.eigenvectors[0], Vector3::x());
    }

    #[test]
    fn spectrum_residuals_and_trace() {
        let cases = [
            triple(0.3, 0.7, 0.1),
            triple(1.0, 1.0, 0.999_999),
            triple(1e-9, 2e-9, 0.5e-9),
            triple(0.0, 0.4, 0.0),
            triple(0.5, 0.5, 0.5),
        ];
        for j in cases {
            let s = spectrum(&j);
            let h = hamiltonian(&j);
            assert_abs_diff_eq!(
                s.energies.iter().sum::<f64>(),
                0.0,
                epsilon = 1e-10 * j.max_rate().max(1e-300)
            );
            for k in 0..3 {
                let v = s.eigenvectors[k];
                let r = (h * v - s.energies[k] * v).amax();
                assert!(
                    r < 1e-10 * j.max_rate().max(1e-300),
                    "residual {r} for {j:?}"
                );
            }
        }
    }

    #[test]
    fn discriminant_examples() {
        assert_abs_diff_eq!(discriminant(&triple(0.7, 0.7, 0.7)), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(discriminant(&triple(1.0, 1.0, 0.0)), -0.5, epsilon = 1e-15);
        assert_eq!(discriminant(&triple(0.0, 0.0, 0.0)), 0.0);
    }

    fn default_schedule(total: f64) -> PulseSchedule {
        PulseSchedule::new(total, 0.2 * total, 3.0, 10.0).unwrap()
    }

    #[test]
    fn evolve_transfers_at_right_angle() {
        let s = default_schedule(2000.0);
        let traj = evolve(
            &s,
            std::f64::consts::FRAC_PI_2,
            &ThreeModeState::trap(Trap::A),
            &EvolveOptions {
                dt: 0.2,
                sample_every: 500,
            },
        )
        .unwrap();
        let p = traj.final_populations();
        assert!(p[2] > 0.98, "expected near-complete transfer, got {p:?}");
        assert_abs_diff_eq!(traj.final_state.norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn evolve_splits_at_critical_angle() {
        let s = default_schedule(2000.0);
        let traj = evolve(
            &s,
            crate::couplings::CRITICAL_ANGLE,
            &ThreeModeState::trap(Trap::A),
            &EvolveOptions {
                dt: 0.2,
                sample_every: 500,
            },
        )
        .unwrap();
        let p = traj.final_populations();
        assert!((p[0] - 0.5).abs() < 0.05, "P_A = {}", p[0]);
        assert!((p[1] - 0.5).abs() < 0.05, "P_B = {}", p[1]);
        assert!(p[2] < 0.05, "P_C = {}", p[2]);
    }

    #[test]
    fn evolve_decoupled_is_identity() {
        // traps stay far apart: couplings below 4e-10, state frozen
        let s = PulseSchedule::new(100.0, 20.0, 9.5, 12.0).unwrap();
        let psi0 = ThreeModeState::new(
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
            Complex64::new(0.0, 0.0),
        )
        .unwrap();
        let traj = evolve(
            &s,
            1.0,
            &psi0,
            &EvolveOptions {
                dt: 0.1,
                sample_every: 100,
            },
        )
        .unwrap();
        let p = traj.final_populations();
        assert_abs_diff_eq!(p[0], 0.36, epsilon = 1e-6);
        assert_abs_diff_eq!(p[1], 0.64, epsilon = 1e-6);
    }

    #[test]
    fn evolve_rejects_bad_input() {
        let s = default_schedule(10.0);
        let bad = ThreeModeState::from_vector(Vector3::new(
            Complex64::new(0.7, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ));
        assert!(evolve(&s, 1.0, &bad, &EvolveOptions::default()).is_err());
        assert!(evolve(
            &s,
            1.0,
            &ThreeModeState::trap(Trap::A),
            &EvolveOptions {
                dt: 0.0,
                sample_every: 1
            }
        )
        .is_err());
    }

    #[test]
    fn crossing_found_at_half_time_for_critical_angle() {
        let total = 1000.0;
        let s = default_schedule(total);
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * total / 200.0).collect();
        let found = find_crossings(&s, crate::couplings::CRITICAL_ANGLE, &grid).unwrap();
        assert_eq!(found.len(), 1, "crossings: {found:?}");
        assert_abs_diff_eq!(found[0], 0.5 * total, epsilon = 0.5);
    }

    #[test]
    fn no_crossing_away_from_critical_angle() {
        let total = 1000.0;
        let s = default_schedule(total);
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * total / 200.0).collect();
        let found = find_crossings(&s, std::f64::consts::FRAC_PI_2, &grid).unwrap();
        assert!(found.is_empty(), "unexpected crossings: {found:?}");
    }

    #[test]
    fn no_crossing_reported_when_decoupled() {
        // flat far-apart schedule: spectrum is triply degenerate at 0 but the
        // coupling floor suppresses the report
        let s = PulseSchedule::new(100.0, 10.0, 10.0, 12.0).unwrap();
        let grid: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let found = find_crossings(&s, crate::couplings::CRITICAL_ANGLE, &grid).unwrap();
        assert!(found.is_empty());
    }

    #[test]
    fn tracking_constant_schedule_keeps_labels() {
        let j = triple(0.2, 0.5, 0.1);
        let snaps: Vec<SpectrumSnapshot> = (0..50).map(|_| spectrum(&j)).collect();
        let tracked = track_eigenstates(&snaps).unwrap();
        for i in 0..50 {
            assert!(!tracked.ambiguous[i]);
            for l in 0..3 {
                assert_eq!(tracked.energies[i][l], snaps[0].energies[l]);
                assert_abs_diff_eq!(
                    tracked.vectors[i][l].dot(&snaps[0].eigenvectors[l]),
                    1.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn tracking_follows_transfer_path() {
        // at beta = pi/2 the label seeded as psi_A ends as psi_C
        let s = default_schedule(2000.0);
        let traj = evolve(
            &s,
            std::f64::consts::FRAC_PI_2,
            &ThreeModeState::trap(Trap::A),
            &EvolveOptions {
                dt: 0.2,
                sample_every: 20,
            },
        )
        .unwrap();
        let tracked = track_eigenstates(&traj.snapshots).unwrap();
        let first = tracked.vectors.first().unwrap();
        let last = tracked.vectors.last().unwrap();
        // label 1 (middle energy at t = 0) is the transfer path Psi_2
        assert!(first[1].x.abs() > 0.99, "Psi_2(0) = {:?}", first[1]);
        assert!(last[1].z.abs() > 0.99, "Psi_2(T) = {:?}", last[1]);
    }

    #[test]
    fn tracking_crosses_to_superposition_at_critical_angle() {
        let s = default_schedule(2000.0);
        let traj = evolve(
            &s,
            crate::couplings::CRITICAL_ANGLE,
            &ThreeModeState::trap(Trap::A),
            &EvolveOptions {
                dt: 0.2,
                sample_every: 10,
            },
        )
        .unwrap();
        let tracked = track_eigenstates(&traj.snapshots).unwrap();
        // the path that starts on psi_A (label 1, middle energy) ends in
        // (psi_A - psi_B)/sqrt(2) up to sign after passing the crossing
        let last = tracked.vectors.last().unwrap();
        let target = Vector3::new(1.0, -1.0, 0.0) / 2.0f64.sqrt();
        let overlap = last[1].dot(&target).abs();
        assert!(overlap > 0.99, "path end {:?}", last[1]);
    }
}
