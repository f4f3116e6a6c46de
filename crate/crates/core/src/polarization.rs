//! Jones calculus for the waveplate displacement chain.
//!
//! The local oscillator leaves the waveguide polarized along H (the ordinary
//! axis) with the squeezed field in the orthogonal V polarization. A
//! quarter-wave plate at 45° converts the pair into left- and right-handed
//! circular polarizations, a half-wave plate sets their relative phase (the
//! squeezing angle), and a second quarter-wave plate brings the field back
//! toward linear, which fixes the splitting ratio at the polarizing beam
//! splitter. Convention: Jones vectors in the (H, V) basis with time
//! dependence e^(−iωt); the PBS transmits H.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use thiserror::Error;

use crate::noise_model::{self, NoiseModelError};

type CMat2 = Matrix2<Complex64>;
type CVec2 = Vector2<Complex64>;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("target split {0} must lie strictly inside (0, 1)")]
    BadSplit(f64),
    #[error("no waveplate setting reaches the target; closest achievable split {closest:.9}")]
    Unreachable { closest: f64 },
    #[error(transparent)]
    Model(#[from] NoiseModelError),
}

/// Two-component complex polarization amplitude; the squared norm of the
/// amplitudes carries the optical power in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct JonesState {
    pub amplitudes: CVec2,
}

impl JonesState {
    pub fn new(h: Complex64, v: Complex64) -> Self {
        Self {
            amplitudes: Vector2::new(h, v),
        }
    }

    /// Horizontally polarized state carrying `power` watts.
    pub fn horizontal(power: f64) -> Self {
        Self::new(Complex64::new(power.sqrt(), 0.0), Complex64::ZERO)
    }

    /// Vertically polarized state carrying `power` watts.
    pub fn vertical(power: f64) -> Self {
        Self::new(Complex64::ZERO, Complex64::new(power.sqrt(), 0.0))
    }

    /// Linear polarization at `angle` radians from H.
    pub fn linear(angle: f64, power: f64) -> Self {
        let a = power.sqrt();
        Self::new(
            Complex64::new(a * angle.cos(), 0.0),
            Complex64::new(a * angle.sin(), 0.0),
        )
    }

    pub fn power(&self) -> f64 {
        self.amplitudes.x.norm_sqr() + self.amplitudes.y.norm_sqr()
    }

    pub fn transformed(&self, mat: &CMat2) -> Self {
        Self {
            amplitudes: mat * self.amplitudes,
        }
    }
}

/// A retarder with the given retardance and fast-axis angle (radians from H).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waveplate {
    pub retardance: f64,
    pub fast_axis: f64,
}

impl Waveplate {
    pub fn quarter(fast_axis: f64) -> Self {
        Self {
            retardance: std::f64::consts::FRAC_PI_2,
            fast_axis,
        }
    }

    pub fn half(fast_axis: f64) -> Self {
        Self {
            retardance: std::f64::consts::PI,
            fast_axis,
        }
    }
}

/// Jones matrix of a waveplate: R(−θ)·diag(1, e^{iΓ})·R(θ).
pub fn waveplate_matrix(wp: &Waveplate) -> CMat2 {
    let (s, c) = wp.fast_axis.sin_cos();
    let rot = Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(c, 0.0),
    );
    let rot_inv = rot.transpose();
    let retard = Matrix2::new(
        Complex64::ONE,
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::from_polar(1.0, wp.retardance),
    );
    rot_inv * retard * rot
}

/// Projection onto H (transmitted) and V (reflected); power conserving.
pub fn pbs_split(state: &JonesState) -> (JonesState, JonesState) {
    (
        JonesState::new(state.amplitudes.x, Complex64::ZERO),
        JonesState::new(Complex64::ZERO, state.amplitudes.y),
    )
}

/// Solved waveplate angles for the displacement chain, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainAngles {
    /// Quarter-wave plate, linear → circular.
    pub wp1: f64,
    /// Half-wave plate, relative phase / squeezing angle.
    pub wp2: f64,
    /// Quarter-wave plate, circular → linear, sets the PBS split.
    pub wp3: f64,
}

/// Combined Jones matrix of WP1 (quarter), WP2 (half), WP3 (quarter).
pub fn chain_matrix(angles: &ChainAngles) -> CMat2 {
    waveplate_matrix(&Waveplate::quarter(angles.wp3))
        * waveplate_matrix(&Waveplate::half(angles.wp2))
        * waveplate_matrix(&Waveplate::quarter(angles.wp1))
}

/// Fraction of the squeezed (V-input) field reaching the transmitted port.
pub fn squeezed_split(angles: &ChainAngles) -> f64 {
    let m = chain_matrix(angles);
    let sq_out = m * Vector2::new(Complex64::ZERO, Complex64::ONE);
    sq_out.x.norm_sqr()
}

/// Relative phase between the LO and squeezed components at the transmitted
/// (bright) port, in [0, 2π).
pub fn bright_port_phase(angles: &ChainAngles) -> f64 {
    let m = chain_matrix(angles);
    let lo = (m * Vector2::new(Complex64::ONE, Complex64::ZERO)).x;
    let sq = (m * Vector2::new(Complex64::ZERO, Complex64::ONE)).x;
    let phase = (lo * sq.conj()).arg();
    phase.rem_euclid(std::f64::consts::TAU)
}

/// Finds waveplate angles such that the squeezed field keeps `target_split`
/// of its power at the bright port (the LO contributes the complementary
/// 1 − split there) and the LO↔squeezed relative phase at that port equals
/// `target_phase`.
///
/// WP1 is held at 45°; a 0.1° grid scan brackets each remaining angle and
/// bisection refines it.
pub fn solve_chain_angles(target_split: f64, target_phase: f64) -> Result<ChainAngles, ChainError> {
    if !(target_split > 0.0 && target_split < 1.0) {
        return Err(ChainError::BadSplit(target_split));
    }
    let wp1 = std::f64::consts::FRAC_PI_4;
    let step = 0.1_f64.to_radians();

    // Split depends on WP3 alone once WP1 sits at 45°; solve it first with
    // WP2 parked at zero.
    let split_at = |wp3: f64| squeezed_split(&ChainAngles { wp1, wp2: 0.0, wp3 }) - target_split;
    let mut bracket = None;
    let mut closest = (f64::INFINITY, 0.0);
    let n_steps = (std::f64::consts::PI / step) as usize + 1;
    for i in 0..n_steps {
        let a = i as f64 * step;
        let b = a + step;
        let (fa, fb) = (split_at(a), split_at(b));
        if fa.abs() < closest.0 {
            closest = (fa.abs(), a);
        }
        if fa == 0.0 || fa * fb < 0.0 {
            bracket = Some((a, b));
            break;
        }
    }
    let (mut a, mut b) = bracket.ok_or(ChainError::Unreachable {
        closest: target_split + closest.0,
    })?;
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if split_at(a) * split_at(mid) <= 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    let wp3 = 0.5 * (a + b);

    // The relative phase at the bright port is a monotone function of the
    // WP2 angle over one period; locate the wrapped zero crossing.
    let target = target_phase.rem_euclid(std::f64::consts::TAU);
    let phase_err = |wp2: f64| -> f64 {
        let phase = bright_port_phase(&ChainAngles { wp1, wp2, wp3 });
        let mut diff = phase - target;
        if diff > std::f64::consts::PI {
            diff -= std::f64::consts::TAU;
        } else if diff < -std::f64::consts::PI {
            diff += std::f64::consts::TAU;
        }
        diff
    };
    let mut bracket = None;
    for i in 0..n_steps {
        let a = i as f64 * step;
        let b = a + step;
        let (fa, fb) = (phase_err(a), phase_err(b));
        if fa == 0.0 || (fa * fb < 0.0 && fa.abs() + fb.abs() < std::f64::consts::PI) {
            bracket = Some((a, b));
            break;
        }
    }
    let (mut a, mut b) = bracket.ok_or(ChainError::Unreachable {
        closest: target_split,
    })?;
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if phase_err(a) * phase_err(mid) <= 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    let wp2 = 0.5 * (a + b);

    Ok(ChainAngles { wp1, wp2, wp3 })
}

/// Variance of the squeezed field after displacement at the PBS: the bright
/// port keeps fraction `split` of the squeezed field and admits (1 − split)
/// of vacuum shot noise, i.e. the beam-splitter loss relation.
pub fn displaced_variance(v_sq: f64, split: f64) -> Result<f64, ChainError> {
    if !(split > 0.0 && split < 1.0 || split == 1.0) {
        return Err(ChainError::BadSplit(split));
    }
    Ok(noise_model::apply_loss(v_sq, split)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

    fn unitarity_defect(m: &CMat2) -> f64 {
        let gram = m.adjoint() * m;
        let id = CMat2::identity();
        (gram - id).norm()
    }

    #[test]
    fn waveplate_matrices_are_unitary() {
        for i in 0..180 {
            let theta = i as f64 * PI / 180.0;
            for wp in [Waveplate::quarter(theta), Waveplate::half(theta)] {
                assert!(unitarity_defect(&waveplate_matrix(&wp)) < 1e-12);
            }
        }
        let odd = Waveplate {
            retardance: 1.234,
            fast_axis: 0.777,
        };
        assert!(unitarity_defect(&waveplate_matrix(&odd)) < 1e-12);
    }

    #[test]
    fn qwp_at_zero_leaves_h_unchanged() {
        let qwp = waveplate_matrix(&Waveplate::quarter(0.0));
        let out = JonesState::horizontal(1.0).transformed(&qwp);
        assert_abs_diff_eq!(out.amplitudes.x.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitudes.y.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hwp_at_45_maps_h_to_v() {
        let hwp = waveplate_matrix(&Waveplate::half(FRAC_PI_4));
        let out = JonesState::horizontal(1.0).transformed(&hwp);
        assert_abs_diff_eq!(out.amplitudes.x.norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitudes.y.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn qwp_at_45_makes_circular() {
        let qwp = waveplate_matrix(&Waveplate::quarter(FRAC_PI_4));
        let out = JonesState::horizontal(1.0).transformed(&qwp);
        assert_abs_diff_eq!(
            out.amplitudes.x.norm(),
            out.amplitudes.y.norm(),
            epsilon = 1e-12
        );
        let rel = (out.amplitudes.y / out.amplitudes.x).arg();
        assert_abs_diff_eq!(rel.abs(), FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn pbs_projects_and_conserves_power() {
        let (t, r) = pbs_split(&JonesState::horizontal(2.5));
        assert_abs_diff_eq!(t.power(), 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.power(), 0.0, epsilon = 1e-12);

        let diag = JonesState::linear(FRAC_PI_4, 1.0);
        let (t, r) = pbs_split(&diag);
        assert_abs_diff_eq!(t.power(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.power(), 0.5, epsilon = 1e-12);

        let odd = JonesState::new(Complex64::new(0.3, 0.4), Complex64::new(-0.1, 0.9));
        let (t, r) = pbs_split(&odd);
        assert_abs_diff_eq!(t.power() + r.power(), odd.power(), epsilon = 1e-12);
    }

    #[test]
    fn chain_conserves_power() {
        let angles = ChainAngles {
            wp1: FRAC_PI_4,
            wp2: 0.3,
            wp3: 1.1,
        };
        let m = chain_matrix(&angles);
        let state = JonesState::new(Complex64::new(0.7, 0.1), Complex64::new(0.2, -0.5));
        let out = state.transformed(&m);
        assert_abs_diff_eq!(out.power(), state.power(), epsilon = 1e-12);
        let (t, r) = pbs_split(&out);
        assert_abs_diff_eq!(t.power() + r.power(), state.power(), epsilon = 1e-12);
    }

    #[test]
    fn solves_homodyne_and_bright_splits() {
        for &target in &[0.5, 0.9] {
            let angles = solve_chain_angles(target, 0.0).unwrap();
            let achieved = squeezed_split(&angles);
            assert_abs_diff_eq!(achieved, target, epsilon = 1e-9);
            // LO gets the complementary fraction at the bright port.
            let m = chain_matrix(&angles);
            let lo_t = (m * Vector2::new(Complex64::ONE, Complex64::ZERO))
                .x
                .norm_sqr();
            assert_abs_diff_eq!(lo_t, 1.0 - target, epsilon = 1e-9);
            let phase = bright_port_phase(&angles);
            let wrapped = phase.min(TAU - phase);
            assert_abs_diff_eq!(wrapped, 0.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn split_matches_half_wave_rotation_oracle() {
        // Closed form: a half-wave rotation carrying H to angle χ transmits
        // cos²χ through the PBS; cos²χ = 0.9 at χ = 18.43°.
        let chi = (0.9_f64).sqrt().acos();
        assert_abs_diff_eq!(chi.to_degrees(), 18.43, epsilon = 0.01);
        let hwp = waveplate_matrix(&Waveplate::half(chi / 2.0));
        let out = JonesState::horizontal(1.0).transformed(&hwp);
        let (t, _) = pbs_split(&out);
        assert_abs_diff_eq!(t.power(), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn brute_force_scan_confirms_solved_split() {
        let target = 0.9;
        let angles = solve_chain_angles(target, 1.0).unwrap();
        // Independent 0.02° scan over WP3: no setting beats the solved one by
        // more than the scan resolution allows.
        let mut best = f64::INFINITY;
        let step = 0.02_f64.to_radians();
        let mut theta = 0.0;
        while theta < PI {
            let err = (squeezed_split(&ChainAngles {
                wp3: theta,
                ..angles
            }) - target)
                .abs();
            best = best.min(err);
            theta += step;
        }
        let solved_err = (squeezed_split(&angles) - target).abs();
        assert!(solved_err <= best + 1e-9);
        assert!(solved_err < 1e-6);
    }

    #[test]
    fn wp2_controls_phase_without_moving_split() {
        let angles = solve_chain_angles(0.9, 0.0).unwrap();
        let base_split = squeezed_split(&angles);
        let mut phases = Vec::new();
        let n = 720;
        for i in 0..n {
            let wp2 = i as f64 / n as f64 * PI;
            let a = ChainAngles { wp2, ..angles };
            assert!(
                (squeezed_split(&a) - base_split).abs() < 1e-9,
                "split moved at wp2={wp2}"
            );
            phases.push(bright_port_phase(&a));
        }
        // Unwrap and check strict monotonicity over the revolution.
        let mut unwrapped = vec![phases[0]];
        for w in phases.windows(2) {
            let mut d = w[1] - w[0];
            while d > PI {
                d -= TAU;
            }
            while d < -PI {
                d += TAU;
            }
            unwrapped.push(unwrapped.last().unwrap() + d);
        }
        let increasing = unwrapped[1] > unwrapped[0];
        for w in unwrapped.windows(2) {
            assert!(
                (w[1] > w[0]) == increasing,
                "phase not monotone in the WP2 angle"
            );
        }
        let total = (unwrapped[n - 1] - unwrapped[0]).abs();
        assert!(
            total > 0.9 * TAU,
            "phase should sweep a full turn, got {total}"
        );
    }

    #[test]
    fn phase_targets_are_reached_across_a_period() {
        for i in 0..8 {
            let target = i as f64 / 8.0 * TAU;
            let angles = solve_chain_angles(0.9, target).unwrap();
            let phase = bright_port_phase(&angles);
            let mut diff = (phase - target).abs();
            diff = diff.min(TAU - diff);
            assert_abs_diff_eq!(diff, 0.0, epsilon = 1e-6);
            assert_abs_diff_eq!(squeezed_split(&angles), 0.9, epsilon = 1e-9);
        }
    }

    #[test]
    fn displaced_variance_known_values() {
        let v = displaced_variance(0.40713, 0.9).unwrap();
        assert_abs_diff_eq!(
            crate::noise_model::lin_to_db(v).unwrap(),
            -3.31,
            epsilon = 0.005
        );
        assert_relative_eq!(displaced_variance(0.7, 1.0).unwrap(), 0.7);
        assert_relative_eq!(displaced_variance(1.0, 0.37).unwrap(), 1.0);
        assert!(displaced_variance(0.5, 0.0).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn arbitrary_retarders_are_unitary(
                retardance in 0.0_f64..TAU,
                fast_axis in 0.0_f64..PI,
            ) {
                let wp = Waveplate { retardance, fast_axis };
                prop_assert!(unitarity_defect(&waveplate_matrix(&wp)) < 1e-12);
            }

            #[test]
            fn chain_and_pbs_conserve_power(
                wp1 in 0.0_f64..PI,
                wp2 in 0.0_f64..PI,
                wp3 in 0.0_f64..PI,
                re_h in -2.0_f64..2.0,
                im_h in -2.0_f64..2.0,
                re_v in -2.0_f64..2.0,
                im_v in -2.0_f64..2.0,
            ) {
                let state = JonesState::new(
                    Complex64::new(re_h, im_h),
                    Complex64::new(re_v, im_v),
                );
                let m = chain_matrix(&ChainAngles { wp1, wp2, wp3 });
                let (t, r) = pbs_split(&state.transformed(&m));
                prop_assert!(
                    (t.power() + r.power() - state.power()).abs() <= 1e-12 * state.power().max(1.0)
                );
            }

            #[test]
            fn squeezed_and_lo_splits_are_complementary(
                wp1 in 0.0_f64..PI,
                wp2 in 0.0_f64..PI,
                wp3 in 0.0_f64..PI,
            ) {
                let angles = ChainAngles { wp1, wp2, wp3 };
                let m = chain_matrix(&angles);
                let lo_t = (m * Vector2::new(Complex64::ONE, Complex64::ZERO)).x.norm_sqr();
                let sq_t = squeezed_split(&angles);
                prop_assert!((lo_t + sq_t - 1.0).abs() < 1e-12);
            }
        }
    }
}
