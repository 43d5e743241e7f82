//! Central pattern generator for the hip and knee references, and the stiff
//! PD position servo that turns references into actuator torques.
//!
//! The oscillator phase `Phi` progresses linearly with time; a virtual duty
//! factor warps it so the power half of the cycle (`Theta` in `[0, pi)`, the
//! backward sweep) takes a `d_vir` fraction of the period and the recovery
//! half the rest.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// CPG parameters; defaults give the nominal 1.5 Hz paddling gait.
#[derive(Debug, Clone, PartialEq)]
pub struct CpgParams {
    /// Hip amplitude, rad.
    pub a_hip: f64,
    /// Knee amplitude, rad.
    pub a_knee: f64,
    /// Hip offset, rad.
    pub o_hip: f64,
    /// Knee offset, rad.
    pub o_knee: f64,
    /// Knee phase lag relative to the hip, rad.
    pub phase_diff: f64,
    /// Virtual duty factor in (0, 1): fraction of the cycle spent in the
    /// power half.
    pub d_vir: f64,
    /// Gait frequency, Hz.
    pub f_gait: f64,
}

impl Default for CpgParams {
    fn default() -> Self {
        // The knee runs in antiphase with the hip: the knee-driven ankle
        // stroke then sweeps the foot backward across exactly the power half
        // of the cycle, so the recovery-to-power transition falls just after
        // the phase boundary where the transition metrics measure it.
        CpgParams {
            a_hip: 0.35,
            a_knee: 0.35,
            o_hip: 0.0,
            o_knee: -0.3,
            phase_diff: PI,
            d_vir: 0.4,
            f_gait: 1.5,
        }
    }
}

impl CpgParams {
    pub fn validate(&self) -> Result<()> {
        if self.a_hip < 0.0 || self.a_knee < 0.0 {
            return Err(Error::InvalidConfig {
                what: format!("CPG amplitudes must be >= 0 (hip {}, knee {})", self.a_hip, self.a_knee),
            });
        }
        if !(self.d_vir > 0.0 && self.d_vir < 1.0) {
            return Err(Error::InvalidConfig {
                what: format!("virtual duty factor {} must be in (0, 1)", self.d_vir),
            });
        }
        if !(self.f_gait > 0.0) {
            return Err(Error::InvalidConfig {
                what: format!("gait frequency {} Hz must be > 0", self.f_gait),
            });
        }
        Ok(())
    }

    /// Gait period, s.
    pub fn period(&self) -> f64 {
        1.0 / self.f_gait
    }

    /// Duration of the power half of the cycle, s.
    pub fn power_duration(&self) -> f64 {
        self.d_vir * self.period()
    }
}

/// Warp the linear oscillator phase by the virtual duty factor.
///
/// Piecewise linear, continuous, surjective onto `[0, 2pi)`; the power branch
/// (`Phi < 2pi d_vir`) has slope `1/(2 d_vir)`, the recovery branch
/// `1/(2(1 - d_vir))`.
pub fn phase_warp(phi: f64, d_vir: f64) -> f64 {
    if phi < TAU * d_vir {
        phi / (2.0 * d_vir)
    } else {
        (phi + TAU * (1.0 - 2.0 * d_vir)) / (2.0 * (1.0 - d_vir))
    }
}

/// Wrap an angle into `[0, 2pi)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w == TAU {
        0.0
    } else {
        w
    }
}

/// Warped phase at time `t`, rad in `[0, 2pi)`.
pub fn theta_at(t: f64, params: &CpgParams) -> f64 {
    phase_warp(wrap_phase(TAU * params.f_gait * t), params.d_vir)
}

/// Hip and knee reference angles at time `t`.
pub fn joint_targets(t: f64, params: &CpgParams) -> (f64, f64) {
    let theta = theta_at(t, params);
    (
        params.a_hip * theta.cos() + params.o_hip,
        params.a_knee * (theta + params.phase_diff).cos() + params.o_knee,
    )
}

/// PD position servo gains with torque saturation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoGains {
    /// Proportional gain, N·mm/rad.
    pub kp: f64,
    /// Derivative gain on the joint rate, N·mm·s/rad.
    pub kd: f64,
    /// Torque saturation, N·mm.
    pub saturation: f64,
}

impl Default for ServoGains {
    fn default() -> Self {
        ServoGains {
            kp: 2.0e5,
            kd: 2.0e3,
            saturation: 1.0e5,
        }
    }
}

impl ServoGains {
    pub fn validate(&self) -> Result<()> {
        if self.kp < 0.0 || self.kd < 0.0 || self.saturation < 0.0 {
            return Err(Error::InvalidConfig {
                what: format!(
                    "servo gains must be >= 0 (kp {}, kd {}, sat {})",
                    self.kp, self.kd, self.saturation
                ),
            });
        }
        Ok(())
    }
}

/// Saturated PD torque tracking a reference angle, N·mm.
pub fn servo_torque(reference: f64, angle: f64, rate: f64, gains: &ServoGains) -> f64 {
    (gains.kp * (reference - angle) - gains.kd * rate).clamp(-gains.saturation, gains.saturation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn symmetric_duty_is_identity() {
        for i in 0..100 {
            let phi = TAU * i as f64 / 100.0;
            assert_relative_eq!(phase_warp(phi, 0.5), phi, epsilon = 1e-15);
        }
    }

    #[test]
    fn branch_boundary_is_continuous() {
        for d in [0.1, 0.25, 0.4, 0.5, 0.73, 0.9] {
            let phi = TAU * d;
            let left = phi / (2.0 * d);
            let right = (phi + TAU * (1.0 - 2.0 * d)) / (2.0 * (1.0 - d));
            assert_relative_eq!(left, PI, epsilon = 1e-12);
            assert_relative_eq!(right, PI, epsilon = 1e-12);
        }
    }

    #[test]
    fn quarter_duty_example() {
        // d_vir = 0.25, Phi = 0.2 pi: power branch gives Theta = Phi / 0.5.
        assert_relative_eq!(phase_warp(0.2 * PI, 0.25), 0.4 * PI, epsilon = 1e-14);
    }

    #[test]
    fn targets_at_zero_and_periodicity() {
        let p = CpgParams::default();
        let (hip, knee) = joint_targets(0.0, &p);
        assert_relative_eq!(hip, p.a_hip + p.o_hip, epsilon = 1e-12);
        assert_relative_eq!(knee, p.a_knee * p.phase_diff.cos() + p.o_knee, epsilon = 1e-12);
        for i in 0..25 {
            let t = 0.0137 + i as f64 * 0.031;
            let (h0, k0) = joint_targets(t, &p);
            let (h1, k1) = joint_targets(t + p.period(), &p);
            assert_relative_eq!(h0, h1, epsilon = 1e-9);
            assert_relative_eq!(k0, k1, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_amplitude_hip_is_constant() {
        let p = CpgParams {
            a_hip: 0.0,
            ..CpgParams::default()
        };
        for i in 0..50 {
            let (hip, _) = joint_targets(i as f64 * 0.017, &p);
            assert_relative_eq!(hip, p.o_hip, epsilon = 1e-14);
        }
    }

    #[test]
    fn duty_fraction_of_power_half() {
        // Fraction of the cycle with Theta in [0, pi) equals d_vir.
        for d in [0.25, 0.4, 0.5, 0.65] {
            let n = 1_000_000u64;
            let mut in_power = 0u64;
            for i in 0..n {
                let phi = TAU * (i as f64 + 0.5) / n as f64;
                if phase_warp(phi, d) < PI {
                    in_power += 1;
                }
            }
            let frac = in_power as f64 / n as f64;
            assert!((frac - d).abs() < 1e-5, "duty {d}: fraction {frac}");
        }
    }

    #[test]
    fn servo_examples() {
        let g = ServoGains {
            kp: 1000.0,
            kd: 0.0,
            saturation: 500.0,
        };
        assert_eq!(servo_torque(0.3, 0.3, 0.0, &g), 0.0);
        // Linear region.
        let g2 = ServoGains {
            kp: 1000.0,
            kd: 0.0,
            saturation: 500_000.0,
        };
        assert_relative_eq!(servo_torque(0.1, 0.0, 0.0, &g2), 100.0);
        // Clamp.
        assert_relative_eq!(servo_torque(10.0, 0.0, 0.0, &g), 500.0);
        assert_relative_eq!(servo_torque(-10.0, 0.0, 0.0, &g), -500.0);
    }

    proptest! {
        #[test]
        fn warp_monotone_and_onto(d in 0.05f64..0.95, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (phi_lo, phi_hi) = (TAU * lo, TAU * hi);
            let (th_lo, th_hi) = (phase_warp(phi_lo, d), phase_warp(phi_hi, d));
            prop_assert!(th_lo <= th_hi + 1e-12);
            prop_assert!((0.0..TAU + 1e-9).contains(&th_lo));
            prop_assert!(phase_warp(0.0, d) == 0.0);
        }
    }
}
