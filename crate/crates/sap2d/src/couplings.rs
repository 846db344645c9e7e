//! Trap geometry and the separation-dependent tunneling-rate law.
//!
//! Three identical 2D harmonic traps (frequency ω) sit at the corners of a
//! triangle: B at the origin, C on the positive x axis, A below the x axis at
//! angle β. The tunneling rate between two traps depends only on their
//! separation; all lengths are in units of α⁻¹ = √(ħ/mω).

use crate::{Error, Result};

/// Trap label, also used as an index into population triples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trap {
    A,
    B,
    C,
}

impl Trap {
    pub const ALL: [Trap; 3] = [Trap::A, Trap::B, Trap::C];

    pub fn index(self) -> usize {
        match self {
            Trap::A => 0,
            Trap::B => 1,
            Trap::C => 2,
        }
    }
}

/// The triangle angle at which the level crossing (and hence the coherent
/// splitting) occurs when the traps are equidistant.
pub const CRITICAL_ANGLE: f64 = 2.0 * std::f64::consts::PI / 3.0;

/// Trap-center geometry: angle β and the two control distances.
///
/// Positions follow from the convention pos_B = (0,0), pos_C = (d_BC, 0),
/// pos_A = (−d_AB cos β, −d_AB sin β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapLayout {
    beta: f64,
    d_ab: f64,
    d_bc: f64,
}

impl TrapLayout {
    /// Requires d_AB > 0, d_BC > 0 and 0 ≤ β < π.
    pub fn new(beta: f64, d_ab: f64, d_bc: f64) -> Result<Self> {
        if !beta.is_finite() || !(0.0..std::f64::consts::PI).contains(&beta) {
            return Err(Error::validation(format!(
                "trap angle beta must lie in [0, pi), got {beta}"
            )));
        }
        if !(d_ab > 0.0) || !(d_bc > 0.0) || !d_ab.is_finite() || !d_bc.is_finite() {
            return Err(Error::validation(format!(
                "trap separations must be positive and finite, got d_ab={d_ab}, d_bc={d_bc}"
            )));
        }
        Ok(TrapLayout { beta, d_ab, d_bc })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn d_ab(&self) -> f64 {
        self.d_ab
    }

    pub fn d_bc(&self) -> f64 {
        self.d_bc
    }

    pub fn pos_a(&self) -> [f64; 2] {
        [-self.d_ab * self.beta.cos(), -self.d_ab * self.beta.sin()]
    }

    pub fn pos_b(&self) -> [f64; 2] {
        [0.0, 0.0]
    }

    pub fn pos_c(&self) -> [f64; 2] {
        [self.d_bc, 0.0]
    }

    pub fn position(&self, trap: Trap) -> [f64; 2] {
        match trap {
            Trap::A => self.pos_a(),
            Trap::B => self.pos_b(),
            Trap::C => self.pos_c(),
        }
    }

    /// Distance between the outer traps, d_AC = √(d_AB² + d_BC² + 2 d_AB d_BC cos β).
    pub fn distance_ac(&self) -> f64 {
        (self.d_ab * self.d_ab
            + self.d_bc * self.d_bc
            + 2.0 * self.d_ab * self.d_bc * self.beta.cos())
        .sqrt()
    }

    /// Smallest of the three pairwise separations.
    pub fn min_separation(&self) -> f64 {
        self.d_ab.min(self.d_bc).min(self.distance_ac())
    }
}

/// The three tunneling rates, in units of ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingTriple {
    pub j_ab: f64,
    pub j_bc: f64,
    pub j_ac: f64,
}

impl CouplingTriple {
    pub fn max_rate(&self) -> f64 {
        self.j_ab.max(self.j_bc).max(self.j_ac)
    }
}

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Tunneling rate J/ω between two harmonic traps separated by `d` (units of
/// α⁻¹, so the trap width already divides out).
///
/// The textbook expression has e^{(αd)²/2} in the denominator and overflows
/// near αd ≈ 38; here it is rearranged so every factor is bounded:
///
///   J = d · [ (e^{-d²/4} − e^{-d²/2}) + (√π d/2) e^{-d²/4} erfc(d/2) ]
///       / ( √π (1 − e^{-d²/2}) )
///
/// Both bracketed terms are positive, so there is no cancellation; expm1
/// keeps the small-d limit exact and the function tends smoothly to 1 at
/// d = 0 and underflows gracefully to 0 for very large d.
pub fn coupling_rate(d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::validation(format!(
            "trap separation must be non-negative, got {d}"
        )));
    }
    if d == 0.0 {
        return Ok(1.0); // analytic limit of the rate law
    }
    let s = d * d;
    // e^{-s/4} - e^{-s/2}, grouped to avoid cancellation on either side of s = 4
    let gap = if s < 4.0 {
        (-s / 2.0).exp() * (s / 4.0).exp_m1()
    } else {
        (-s / 4.0).exp() * (-(-s / 4.0).exp_m1())
    };
    let tail = 0.5 * SQRT_PI * d * (-s / 4.0).exp() * libm::erfc(0.5 * d);
    let denom = SQRT_PI * (-(-s / 2.0).exp_m1());
    Ok(d * (gap + tail) / denom)
}

/// Applies the rate law to all three separations of a layout.
pub fn couplings_of(layout: &TrapLayout) -> CouplingTriple {
    // separations of a valid layout are positive, so the rate law is total
    CouplingTriple {
        j_ab: coupling_rate(layout.d_ab()).expect("valid layout separation"),
        j_bc: coupling_rate(layout.d_bc()).expect("valid layout separation"),
        j_ac: coupling_rate(layout.distance_ac()).expect("valid layout separation"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn distance_ac_pythagorean() {
        let l = TrapLayout::new(std::f64::consts::FRAC_PI_2, 3.0, 4.0).unwrap();
        assert_abs_diff_eq!(l.distance_ac(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn distance_ac_equilateral() {
        let l = TrapLayout::new(CRITICAL_ANGLE, 5.0, 5.0).unwrap();
        assert_abs_diff_eq!(l.distance_ac(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn distance_ac_collinear() {
        let l = TrapLayout::new(0.0, 2.0, 3.0).unwrap();
        assert_abs_diff_eq!(l.distance_ac(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn positions_match_convention() {
        let l = TrapLayout::new(std::f64::consts::FRAC_PI_2, 4.0, 6.0).unwrap();
        assert_eq!(l.pos_b(), [0.0, 0.0]);
        assert_eq!(l.pos_c(), [6.0, 0.0]);
        let [ax, ay] = l.pos_a();
        assert_abs_diff_eq!(ax, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ay, -4.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_layout() {
        assert!(TrapLayout::new(-0.1, 1.0, 1.0).is_err());
        assert!(TrapLayout::new(std::f64::consts::PI, 1.0, 1.0).is_err());
        assert!(TrapLayout::new(1.0, 0.0, 1.0).is_err());
        assert!(TrapLayout::new(1.0, 1.0, -2.0).is_err());
    }

    #[test]
    fn rate_small_d_limit() {
        // limit value J -> 1, approached linearly; extrapolation from two
        // small arguments lands on 1
        assert_eq!(coupling_rate(0.0).unwrap(), 1.0);
        let j3 = coupling_rate(1e-3).unwrap();
        let j4 = coupling_rate(1e-4).unwrap();
        let extrapolated = j3 + (j3 - j4) / (1e-4 - 1e-3) * 1e-3;
        assert_abs_diff_eq!(extrapolated, 1.0, epsilon = 1e-6);
        // 60-digit reference values
        assert_relative_eq!(j3, 0.999_717_905_219_969_7, max_relative = 1e-12);
        assert_relative_eq!(j4, 0.999_971_790_520_834_4, max_relative = 1e-12);
    }

    #[test]
    fn rate_reference_points() {
        // 60-digit evaluations of the rate law
        assert_relative_eq!(
            coupling_rate(4.0).unwrap(),
            0.041_276_164_875_434_834,
            max_relative = 1e-12
        );
        assert!(coupling_rate(10.0).unwrap() < 1e-9);
        assert_relative_eq!(
            coupling_rate(10.0).unwrap(),
            7.835_433_265_506_61e-11,
            max_relative = 1e-11
        );
    }

    #[test]
    fn rate_extreme_arguments() {
        // no overflow anywhere; the far tail underflows to exactly 0
        for d in [38.0, 54.0, 100.0, 1e3, 1e6] {
            let j = coupling_rate(d).unwrap();
            assert!(j.is_finite() && j >= 0.0, "J({d}) = {j}");
        }
        assert!(coupling_rate(1e3).unwrap() == 0.0);
        assert!(coupling_rate(-1.0).is_err());
    }

    #[test]
    fn couplings_equilateral_all_equal() {
        let l = TrapLayout::new(CRITICAL_ANGLE, 4.0, 4.0).unwrap();
        let j = couplings_of(&l);
        assert_relative_eq!(j.j_ab, j.j_bc, max_relative = 1e-14);
        assert_relative_eq!(j.j_ab, j.j_ac, max_relative = 1e-12);
    }

    #[test]
    fn couplings_far_outer_trap_decouples() {
        // nearly collinear: d_AC is much larger than the control distances
        let l = TrapLayout::new(0.1, 5.0, 5.0).unwrap();
        let j = couplings_of(&l);
        assert!(j.j_ac < 1e-6 * j.j_ab);
    }

    #[test]
    fn couplings_equal_separations_equal_rates() {
        let l = TrapLayout::new(std::f64::consts::FRAC_PI_2, 6.0, 6.0).unwrap();
        let j = couplings_of(&l);
        assert_eq!(j.j_ab, j.j_bc);
    }
}
