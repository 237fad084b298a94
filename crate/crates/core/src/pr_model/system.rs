use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64;

use super::PhotoreceptorModel;
use crate::error::{check_non_negative, Error, Result};

/// Continuous-time state-space form `dx/dt = A x + b_c c(t) + b_in i_in + b_out i_out`
/// over the state `(v_d, v_p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpace {
    pub dynamics: Matrix2<f64>,
    /// Response to unit contrast (log-intensity) input.
    pub signal_input: Vector2<f64>,
    /// Response to unit current injected at the photodiode node.
    pub input_node: Vector2<f64>,
    /// Response to unit current injected at the amplifier output node.
    pub output_node: Vector2<f64>,
}

/// Complex gains from each input to `v_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferGains {
    /// V per log-unit.
    pub signal: Complex64,
    /// V per A.
    pub input_node: Complex64,
    /// V per A.
    pub output_node: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaturalParams {
    /// Natural frequency `sqrt(|λ1 λ2|)/2π` (Hz).
    pub f_n: f64,
    pub q_factor: f64,
    /// -3 dB frequency of the contrast-to-`v_p` transfer (Hz).
    pub f_3db: f64,
    /// System eigenvalues (rad/s), slower first.
    pub eigenvalues: [Complex64; 2],
}

impl NaturalParams {
    pub fn slowest_pole_hz(&self) -> f64 {
        self.eigenvalues[0].norm() / (2.0 * PI)
    }

    pub fn fastest_pole_hz(&self) -> f64 {
        self.eigenvalues[1].norm() / (2.0 * PI)
    }

    pub fn is_stable(&self) -> bool {
        self.eigenvalues.iter().all(|l| l.re < 0.0)
    }
}

impl PhotoreceptorModel {
    pub fn system_matrices(&self) -> StateSpace {
        let p = &self.params;
        let kappa = p.constants.kappa;
        let (g_fb, g_amp, g_o) = (p.g_feedback(), p.g_amp(), p.g_out());
        StateSpace {
            dynamics: Matrix2::new(
                -g_fb / p.c_in,
                kappa * g_fb / p.c_in,
                -g_amp / p.c_out,
                -g_o / p.c_out,
            ),
            signal_input: Vector2::new(-p.diode_current() / p.c_in, 0.0),
            input_node: Vector2::new(1.0 / p.c_in, 0.0),
            output_node: Vector2::new(0.0, 1.0 / p.c_out),
        }
    }

    /// Steady-state `v_p` per log-unit of contrast.
    pub fn dc_signal_gain(&self) -> f64 {
        self.transfer_at(0.0).map(|g| g.signal.re).unwrap_or(f64::NAN)
    }

    pub fn transfer_at(&self, f: f64) -> Result<TransferGains> {
        check_non_negative("f", f)?;
        let ss = self.system_matrices();
        let a = &ss.dynamics;
        let s = Complex64::new(0.0, 2.0 * PI * f);
        let det = (s - a[(0, 0)]) * (s - a[(1, 1)]) - a[(0, 1)] * a[(1, 0)];
        // v_p row of (sI - A)^-1 b by Cramer's rule.
        let vp = |b: &Vector2<f64>| ((s - a[(0, 0)]) * b[1] + a[(1, 0)] * b[0]) / det;
        Ok(TransferGains {
            signal: vp(&ss.signal_input),
            input_node: vp(&ss.input_node),
            output_node: vp(&ss.output_node),
        })
    }

    pub fn natural_params(&self) -> NaturalParams {
        let a = self.system_matrices().dynamics;
        let trace = a.trace();
        let det = a.determinant();
        let half = 0.5 * trace;
        let disc = Complex64::new(half * half - det, 0.0).sqrt();
        let mut eig = [half + disc, half - disc];
        eig.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
        let omega_n = det.abs().sqrt();
        NaturalParams {
            f_n: omega_n / (2.0 * PI),
            q_factor: omega_n / -trace,
            f_3db: self.signal_corner_frequency(eig[0].norm() / (2.0 * PI)),
            eigenvalues: eig,
        }
    }

    /// Finds where |H(f)| falls to |H(0)|/√2 by marching up from well below the
    /// slow pole and bisecting in log-frequency.
    fn signal_corner_frequency(&self, slow_pole_hz: f64) -> f64 {
        let mag = |f: f64| self.transfer_at(f).map(|g| g.signal.norm()).unwrap_or(0.0);
        let target = mag(0.0) / SQRT_2;
        let mut lo = slow_pole_hz * 1e-3;
        let mut hi = lo;
        while mag(hi) >= target {
            lo = hi;
            hi *= 1.25;
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if mag(mid) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - 1.0 < 1e-13 {
                break;
            }
        }
        (lo * hi).sqrt()
    }

    /// Continuous Lyapunov solution `A P + P Aᵀ + Q = 0` for the stationary
    /// state covariance under the configured (one-sided) noise PSDs.
    pub fn stationary_covariance(&self) -> Result<Matrix2<f64>> {
        let ss = self.system_matrices();
        let q = self.diffusion_matrix(&ss);
        solve_lyapunov(&ss.dynamics, &q)
    }

    /// Covariance rate of the white-noise drive. A one-sided PSD `S` is a
    /// two-sided density `S/2`.
    pub(crate) fn diffusion_matrix(&self, ss: &StateSpace) -> Matrix2<f64> {
        let s_in = self.sources.s_pd + self.sources.s_fb;
        let s_out = self.sources.s_amp;
        ss.input_node * ss.input_node.transpose() * (0.5 * s_in)
            + ss.output_node * ss.output_node.transpose() * (0.5 * s_out)
    }
}

pub(crate) fn solve_lyapunov(a: &Matrix2<f64>, q: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    // Unknowns (p11, p12, p22) of the symmetric solution.
    let m = Matrix3::new(
        2.0 * a[(0, 0)],
        2.0 * a[(0, 1)],
        0.0,
        a[(1, 0)],
        a[(0, 0)] + a[(1, 1)],
        a[(0, 1)],
        0.0,
        2.0 * a[(1, 0)],
        2.0 * a[(1, 1)],
    );
    let rhs = -Vector3::new(q[(0, 0)], 0.5 * (q[(0, 1)] + q[(1, 0)]), q[(1, 1)]);
    let p = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Integration("Lyapunov system is singular".into()))?;
    Ok(Matrix2::new(p[0], p[1], p[1], p[2]))
}
