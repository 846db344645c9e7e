//! Counterintuitive trap-motion schedules, their time reversal, and
//! shaking-noise injection.
//!
//! A forward schedule first brings the C trap toward B and, after a delay δ,
//! the A trap toward B: d_BC reaches its minimum at (T−δ)/2, d_AB at
//! (T+δ)/2. The reversed schedule plays the same distance curves backwards
//! in time, so the A trap approaches first; for the symmetric cos² profile
//! this coincides with swapping the roles of d_AB and d_BC.

use crate::{Error, Result};

/// Pulse profile identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseShape {
    /// d(t) = d_max − (d_max − d_min)·cos²(π(t − t_c)/T) on |t − t_c| ≤ T/2,
    /// d_max outside.
    CosSquared,
}

/// Time-parameterized trap-distance schedule on [0, T].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSchedule {
    total_time: f64,
    delay: f64,
    d_min: f64,
    d_max: f64,
    shape: PulseShape,
    shake_amp: f64,
    shake_freq: f64,
    shake_t0: f64,
    reversed: bool,
}

impl PulseSchedule {
    /// Requires 0 < d_min < d_max and 0 ≤ δ < T.
    pub fn new(total_time: f64, delay: f64, d_min: f64, d_max: f64) -> Result<Self> {
        if !(total_time > 0.0) || !total_time.is_finite() {
            return Err(Error::validation(format!(
                "total time must be positive, got {total_time}"
            )));
        }
        if !(0.0..total_time).contains(&delay) {
            return Err(Error::validation(format!(
                "delay must lie in [0, T), got {delay} with T = {total_time}"
            )));
        }
        if !(d_min > 0.0) || !(d_min < d_max) || !d_max.is_finite() {
            return Err(Error::validation(format!(
                "distances must satisfy 0 < d_min < d_max, got d_min={d_min}, d_max={d_max}"
            )));
        }
        Ok(PulseSchedule {
            total_time,
            delay,
            d_min,
            d_max,
            shape: PulseShape::CosSquared,
            shake_amp: 0.0,
            shake_freq: 0.0,
            shake_t0: 0.0,
            reversed: false,
        })
    }

    /// Adds the shaking term A_shake·sin(ω_shake t). The sign of the
    /// amplitude selects in-phase (A > 0) or out-of-phase (A < 0)
    /// oscillations of d_AB and d_BC.
    pub fn with_shake(mut self, amp: f64, freq: f64) -> Result<Self> {
        if !amp.is_finite() || !freq.is_finite() || freq < 0.0 {
            return Err(Error::validation(format!(
                "shake parameters must be finite with freq >= 0, got amp={amp}, freq={freq}"
            )));
        }
        if self.d_min - amp.abs() <= 0.0 {
            return Err(Error::validation(format!(
                "shake amplitude {amp} would drive distances below zero (d_min = {})",
                self.d_min
            )));
        }
        self.shake_amp = amp;
        self.shake_freq = freq;
        Ok(self)
    }

    /// Shifts the time origin of the shaking term; used to keep the noise
    /// continuous across the two stages of the interferometer.
    pub fn with_shake_origin(mut self, t0: f64) -> Self {
        self.shake_t0 = t0;
        self
    }

    /// Time-reverses the schedule: the returned schedule at time t runs the
    /// distance curves of `self` at time T − t (A approaches B first).
    pub fn reverse(&self) -> Self {
        let mut rev = *self;
        rev.reversed = !self.reversed;
        rev
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn shake_amp(&self) -> f64 {
        self.shake_amp
    }

    pub fn shake_freq(&self) -> f64 {
        self.shake_freq
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    /// Largest distance the schedule can produce, shake included.
    pub fn max_excursion(&self) -> f64 {
        self.d_max + self.shake_amp.abs()
    }

    fn profile(&self, u: f64) -> f64 {
        match self.shape {
            PulseShape::CosSquared => {
                if u.abs() <= 0.5 * self.total_time {
                    let c = (std::f64::consts::PI * u / self.total_time).cos();
                    self.d_max - (self.d_max - self.d_min) * c * c
                } else {
                    self.d_max
                }
            }
        }
    }

    /// Control distances (d_AB, d_BC) at time t ∈ [0, T].
    pub fn distances_at(&self, t: f64) -> Result<(f64, f64)> {
        if !(0.0..=self.total_time).contains(&t) {
            return Err(Error::validation(format!(
                "schedule evaluated outside [0, T]: t = {t}, T = {}",
                self.total_time
            )));
        }
        let tau = if self.reversed { self.total_time - t } else { t };
        let c_bc = 0.5 * (self.total_time - self.delay);
        let c_ab = 0.5 * (self.total_time + self.delay);
        let mut d_ab = self.profile(tau - c_ab);
        let mut d_bc = self.profile(tau - c_bc);
        if self.shake_amp != 0.0 {
            // noise rides in lab time, not protocol time
            let s = (self.shake_freq * (t + self.shake_t0)).sin();
            d_ab += self.shake_amp * s;
            d_bc += self.shake_amp.abs() * s;
        }
        Ok((d_ab, d_bc))
    }
}
