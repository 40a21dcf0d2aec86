//! Periodic pulse-stream signal model.
//!
//! A signal is a T-periodic train of `L` copies of a known prototype pulse,
//! each with its own amplitude and delay. Because the pulse shape is known
//! and has a closed-form spectrum, every Fourier-series coefficient of the
//! signal is available exactly:
//!
//! ```text
//! x(t)   = sum_p sum_l a_l h(t - tau_l - p T)
//! x^[k]  = (1/T) h^(k w0) sum_l a_l exp(-j k w0 tau_l),   w0 = 2 pi / T
//! ```
//!
//! The `2L` unknowns `(a_l, tau_l)` are what the sampling and recovery
//! pipeline is ultimately after; this module is the ground truth side.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance used to declare two delays "the same pulse".
const DELAY_DISTINCT_TOL: f64 = 1e-9;

/// Prototype pulse with a closed-form continuous-time Fourier transform.
///
/// Only shapes whose spectrum is real and exactly evaluable are supported,
/// which keeps the coefficient computation free of quadrature error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseShape {
    /// Unit-mass impulse; flat spectrum.
    Dirac,
    /// Third-order (cubic) B-spline, unit mass, support `[-2s, 2s]` for time
    /// scale `s`. At `scale = 1` this is the unit-knot spline with
    /// `h^(w) = (sin(w/2)/(w/2))^4`; the scale exists because the unit spline's
    /// spectral nulls sit exactly on the harmonics of a 1 s period, which
    /// would zero out every working coefficient.
    CubicBSpline { scale: f64 },
    /// Unit-height rectangle of the given width, centered at 0.
    Rect { width: f64 },
}

impl PulseShape {
    /// Continuous-time Fourier transform of the pulse at angular frequency
    /// `omega`. Real-valued for all supported shapes (all are even in time).
    pub fn transform(&self, omega: f64) -> f64 {
        match self {
            PulseShape::Dirac => 1.0,
            PulseShape::CubicBSpline { scale } => {
                let s = sinc(omega * scale / 2.0);
                s * s * s * s
            }
            PulseShape::Rect { width } => width * sinc(omega * width / 2.0),
        }
    }

    /// L1 norm of the time-domain pulse.
    pub fn l1_norm(&self) -> f64 {
        match self {
            PulseShape::Dirac => 1.0,
            PulseShape::CubicBSpline { .. } => 1.0,
            PulseShape::Rect { width } => *width,
        }
    }

    /// First spectral null in Hz, used as the effective one-sided bandwidth
    /// when reporting sub-Nyquist factors. `None` for the impulse, whose
    /// spectrum never decays.
    pub fn first_null_hz(&self) -> Option<f64> {
        match self {
            PulseShape::Dirac => None,
            // sinc^4(omega s / 2) first vanishes at omega = 2 pi / s.
            PulseShape::CubicBSpline { scale } => Some(1.0 / scale),
            PulseShape::Rect { width } => Some(1.0 / width),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            PulseShape::Rect { width } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidSignal(format!(
                        "rect width must be positive, got {width}"
                    )));
                }
            }
            PulseShape::CubicBSpline { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::InvalidSignal(format!(
                        "spline scale must be positive, got {scale}"
                    )));
                }
            }
            PulseShape::Dirac => {}
        }
        Ok(())
    }
}

/// `sin(x)/x` with the removable singularity filled in.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// One pulse of the train: amplitude and delay inside `(0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub amplitude: f64,
    pub delay: f64,
}

/// A T-periodic stream of `L` pulses; the recovery target.
#[derive(Debug, Clone, PartialEq)]
pub struct FriSignal {
    period: f64,
    shape: PulseShape,
    pulses: Vec<Pulse>,
}

impl FriSignal {
    /// Validates and builds a signal. Delays must lie in `(0, T]` and be
    /// pairwise distinct in the circular metric (tolerance `1e-9 T`).
    pub fn new(period: f64, shape: PulseShape, pulses: Vec<Pulse>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidSignal(format!(
                "period must be positive, got {period}"
            )));
        }
        shape.validate()?;
        if pulses.is_empty() {
            return Err(Error::InvalidSignal("at least one pulse required".into()));
        }
        for p in &pulses {
            if !p.amplitude.is_finite() {
                return Err(Error::InvalidSignal("non-finite amplitude".into()));
            }
            if !(p.delay > 0.0 && p.delay <= period) {
                return Err(Error::InvalidSignal(format!(
                    "delay {} outside (0, {period}]",
                    p.delay
                )));
            }
        }
        let tol = DELAY_DISTINCT_TOL * period;
        for i in 0..pulses.len() {
            for j in (i + 1)..pulses.len() {
                let d = (pulses[i].delay - pulses[j].delay).abs();
                let circ = d.min(period - d);
                if circ <= tol {
                    return Err(Error::InvalidSignal(format!(
                        "delays {} and {} coincide within {tol}",
                        pulses[i].delay, pulses[j].delay
                    )));
                }
            }
        }
        Ok(Self {
            period,
            shape,
            pulses,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Fundamental angular frequency `2 pi / T`.
    pub fn omega0(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }

    pub fn shape(&self) -> &PulseShape {
        &self.shape
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn num_pulses(&self) -> usize {
        self.pulses.len()
    }

    /// Innovation rate `2L / T`: the number of free parameters per second.
    pub fn rate_of_innovation(&self) -> f64 {
        2.0 * self.pulses.len() as f64 / self.period
    }

    /// Exact Fourier-series coefficient at harmonic `k`.
    pub fn fsc(&self, k: i64) -> Complex64 {
        let omega0 = self.omega0();
        let spectrum = self.shape.transform(k as f64 * omega0);
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &self.pulses {
            let phase = -(k as f64) * omega0 * p.delay;
            acc += p.amplitude * Complex64::from_polar(1.0, phase);
        }
        acc * (spectrum / self.period)
    }

    /// Truncated Fourier synthesis over `|k| <= k_max`.
    ///
    /// For impulse trains this is a Dirichlet-smoothed rendering meant for
    /// plotting and comparison, never for recovery. The imaginary part of the
    /// symmetric sum cancels identically, so only the real part is returned.
    pub fn eval(&self, t: f64, k_max: usize) -> f64 {
        let omega0 = self.omega0();
        let mut acc = self.fsc(0).re;
        for k in 1..=k_max as i64 {
            let term = self.fsc(k) * Complex64::from_polar(1.0, k as f64 * omega0 * t);
            acc += 2.0 * term.re;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirac(period: f64, pairs: &[(f64, f64)]) -> FriSignal {
        let pulses = pairs
            .iter()
            .map(|&(amplitude, delay)| Pulse { amplitude, delay })
            .collect();
        FriSignal::new(period, PulseShape::Dirac, pulses).unwrap()
    }

    #[test]
    fn fsc_single_impulse_midperiod() {
        let s = dirac(1.0, &[(1.0, 0.5)]);
        // exp(-j pi) = -1
        let x1 = s.fsc(1);
        assert!((x1.re + 1.0).abs() < 1e-14 && x1.im.abs() < 1e-14, "{x1}");
        // exp(-j 2 pi) = 1
        let x2 = s.fsc(2);
        assert!((x2.re - 1.0).abs() < 1e-14 && x2.im.abs() < 1e-14, "{x2}");
    }

    #[test]
    fn fsc_symmetric_pair_cancels() {
        let s = dirac(1.0, &[(1.0, 0.25), (1.0, 0.75)]);
        // exp(-j pi/2) + exp(-j 3 pi/2) = 0
        assert!(s.fsc(1).norm() < 1e-14);
    }

    #[test]
    fn fsc_conjugate_symmetry() {
        let s = dirac(2.0, &[(0.7, 0.3), (-1.2, 1.1), (0.4, 1.9)]);
        for k in 1..=12 {
            let d = (s.fsc(-k) - s.fsc(k).conj()).norm();
            assert!(d < 1e-14, "k={k}: {d}");
        }
    }

    #[test]
    fn fsc_linearity_in_pulses() {
        let a = dirac(1.0, &[(0.9, 0.21)]);
        let b = dirac(1.0, &[(-0.5, 0.68)]);
        let ab = dirac(1.0, &[(0.9, 0.21), (-0.5, 0.68)]);
        for k in [-5, -1, 2, 7] {
            let d = (ab.fsc(k) - (a.fsc(k) + b.fsc(k))).norm();
            assert!(d < 1e-14);
        }
    }

    #[test]
    fn fsc_dirac_magnitude_bound() {
        let s = dirac(1.0, &[(0.8, 0.13), (-1.5, 0.42), (0.3, 0.97)]);
        let bound = (0.8f64 + 1.5 + 0.3) / 1.0;
        for k in -20..=20 {
            assert!(s.fsc(k).norm() <= bound + 1e-12);
        }
    }

    /// Cubic B-spline on its `[-2, 2]` support, written from the piecewise
    /// polynomial definition so the quadrature oracle below shares nothing
    /// with `PulseShape::transform`.
    fn bspline3(t: f64) -> f64 {
        let a = t.abs();
        if a < 1.0 {
            2.0 / 3.0 - a * a + a * a * a / 2.0
        } else if a < 2.0 {
            (2.0 - a).powi(3) / 6.0
        } else {
            0.0
        }
    }

    /// Quadrature oracle: (1/T) * integral over one period of x(t) e^{-j k w0 t},
    /// with the periodized pulse tails wrapped in explicitly. `scale` must
    /// match the signal's spline scale.
    fn fsc_by_quadrature(signal: &FriSignal, scale: f64, k: i64) -> Complex64 {
        let t_per = signal.period();
        let omega0 = signal.omega0();
        let x = |t: f64| -> f64 {
            let mut v = 0.0;
            for p in signal.pulses() {
                for wrap in -4..=4 {
                    v += p.amplitude * bspline3((t - p.delay - wrap as f64 * t_per) / scale) / scale;
                }
            }
            v
        };
        // Composite Simpson on a dense grid.
        let n = 1 << 15; // even
        let h = t_per / n as f64;
        let f = |t: f64| -> Complex64 { x(t) * Complex64::from_polar(1.0, -(k as f64) * omega0 * t) };
        let mut acc = f(0.0) + f(t_per);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        acc * (h / 3.0) / t_per
    }

    #[test]
    fn fsc_matches_quadrature_for_bspline() {
        let pulses = vec![
            Pulse {
                amplitude: 1.3,
                delay: 0.23,
            },
            Pulse {
                amplitude: -0.7,
                delay: 0.55,
            },
            Pulse {
                amplitude: 2.1,
                delay: 0.86,
            },
        ];
        // Scale chosen so no tested harmonic sits near a spectral null.
        let scale = 0.1;
        let s = FriSignal::new(1.0, PulseShape::CubicBSpline { scale }, pulses).unwrap();
        for k in [-7, -3, -1, 0, 1, 2, 5] {
            let exact = s.fsc(k);
            let quad = fsc_by_quadrature(&s, scale, k);
            let d = (exact - quad).norm();
            assert!(d < 1e-8, "k={k}: exact={exact} quad={quad} d={d:e}");
            let h = s.shape().transform(k as f64 * s.omega0());
            assert!(h.abs() > 1e-3, "k={k}: degenerate spectrum {h:e}");
        }
    }

    #[test]
    fn unit_spline_nulls_every_harmonic_of_unit_period() {
        let shape = PulseShape::CubicBSpline { scale: 1.0 };
        let omega0 = 2.0 * std::f64::consts::PI;
        assert_eq!(shape.transform(0.0), 1.0);
        for k in 1..=10 {
            assert!(shape.transform(k as f64 * omega0).abs() < 1e-60);
        }
    }

    #[test]
    fn eval_zero_amplitudes_is_zero() {
        let s = dirac(1.0, &[(0.0, 0.4)]);
        for t in [0.0, 0.3, 1.7, -2.2] {
            assert_eq!(s.eval(t, 50), 0.0);
        }
    }

    #[test]
    fn eval_rect_midpulse_close_to_amplitude() {
        let s = FriSignal::new(
            1.0,
            PulseShape::Rect { width: 0.2 },
            vec![Pulse {
                amplitude: 1.0,
                delay: 0.5,
            }],
        )
        .unwrap();
        // Direct time-domain value at the pulse center is exactly 1.0.
        let v = s.eval(0.5, 200);
        assert!((v - 1.0).abs() < 0.01, "v={v}");
    }

    #[test]
    fn eval_is_periodic() {
        let s = dirac(1.0, &[(1.0, 0.3), (0.5, 0.8)]);
        for t in [0.05, 0.44, 0.91] {
            let d = (s.eval(t, 30) - s.eval(t + 1.0, 30)).abs();
            assert!(d < 1e-12, "t={t}: {d:e}");
        }
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(FriSignal::new(1.0, PulseShape::Dirac, vec![]).is_err());
        assert!(FriSignal::new(
            1.0,
            PulseShape::Dirac,
            vec![Pulse {
                amplitude: 1.0,
                delay: 0.0
            }]
        )
        .is_err());
        assert!(FriSignal::new(
            1.0,
            PulseShape::Dirac,
            vec![Pulse {
                amplitude: 1.0,
                delay: 1.5
            }]
        )
        .is_err());
        // duplicate delays, including the circular wrap T <-> 0+
        assert!(FriSignal::new(
            1.0,
            PulseShape::Dirac,
            vec![
                Pulse {
                    amplitude: 1.0,
                    delay: 0.5
                },
                Pulse {
                    amplitude: 2.0,
                    delay: 0.5 + 1e-12
                }
            ]
        )
        .is_err());
        assert!(FriSignal::new(1.0, PulseShape::Rect { width: -0.1 }, vec![]).is_err());
    }

    #[test]
    fn rate_of_innovation() {
        let s = dirac(2.0, &[(1.0, 0.5), (1.0, 1.0), (1.0, 1.5)]);
        assert_eq!(s.rate_of_innovation(), 3.0);
    }
}
