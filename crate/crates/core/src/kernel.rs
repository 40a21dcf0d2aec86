//! Sum-of-sincs sampling kernel and the band-limited signal it produces.
//!
//! The kernel's frequency response is 1 on the harmonic set
//! `𝒦 = {-K,…,-1,1,…,K}` and 0 on every other harmonic — note the zeroth
//! frequency is deliberately excluded, so the filtered signal has zero mean.
//! Filtering a periodic pulse stream through it therefore keeps exactly the
//! `2K` coefficients the recovery stage needs:
//!
//! ```text
//! y(t) = sum_{k in 𝒦} x^[k] exp(j k w0 t)
//! ```
//!
//! Both `y` and its antiderivative `Y` have closed forms, which lets the
//! encoder solve for firing times without numerical integration.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::FriSignal;

/// Sampling kernel: flat unit response on `𝒦`, zero on all other harmonics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SosKernel {
    k_half: usize,
    omega0: f64,
}

impl SosKernel {
    /// Kernel for period `period` keeping harmonics `1..=k_half` and their
    /// mirrors.
    pub fn new(period: f64, k_half: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidKernel(format!(
                "period must be positive, got {period}"
            )));
        }
        if k_half == 0 {
            return Err(Error::InvalidKernel("K must be at least 1".into()));
        }
        Ok(Self {
            k_half,
            omega0: 2.0 * std::f64::consts::PI / period,
        })
    }

    pub fn k_half(&self) -> usize {
        self.k_half
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega0
    }

    /// The harmonic set `𝒦` in ascending order, zero omitted.
    pub fn freq_set(&self) -> impl Iterator<Item = i64> + '_ {
        let k = self.k_half as i64;
        (-k..=k).filter(|&m| m != 0)
    }

    /// Frequency response: a sum of unit-spaced normalized sincs centered on
    /// each kept harmonic.
    pub fn ghat(&self, omega: f64) -> f64 {
        self.freq_set()
            .map(|k| sinc_norm(omega / self.omega0 - k as f64))
            .sum()
    }

    /// Time-domain kernel: supported on `[-T/2, T/2]`, a windowed Dirichlet
    /// comb normalized so that `ghat` is exactly 1 on `𝒦`.
    pub fn g_time(&self, t: f64) -> f64 {
        let t_per = self.period();
        if t.abs() > t_per / 2.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for k in 1..=self.k_half as i64 {
            acc += 2.0 * (k as f64 * self.omega0 * t).cos();
        }
        acc / t_per
    }

    /// `max_t |g(t)| = 2K/T`, attained at the origin.
    pub fn g_inf_norm(&self) -> f64 {
        2.0 * self.k_half as f64 / self.period()
    }
}

/// `sin(pi x)/(pi x)`.
fn sinc_norm(x: f64) -> f64 {
    let px = std::f64::consts::PI * x;
    if px.abs() < 1e-8 {
        1.0 - px * px / 6.0
    } else {
        px.sin() / px
    }
}

/// Output of the sampling kernel: the retained Fourier coefficients plus the
/// amplitude bound `c >= max_t |y(t)|` the encoder needs for its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSignal {
    k_half: usize,
    omega0: f64,
    /// Coefficients for k = -K..-1, 1..K in ascending order (length 2K).
    coeffs: Vec<Complex64>,
    bound_c: f64,
}

impl FilteredSignal {
    /// Assembles a filtered signal from explicit coefficients; used by tests
    /// and synthetic-trace tooling. Computes the bound from scratch.
    pub fn from_coeffs(period: f64, k_half: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * k_half {
            return Err(Error::LengthMismatch {
                left: coeffs.len(),
                right: 2 * k_half,
            });
        }
        let mut f = Self {
            k_half,
            omega0: 2.0 * std::f64::consts::PI / period,
            coeffs,
            bound_c: 0.0,
        };
        f.bound_c = empirical_max(&f) * (1.0 + 1e-9);
        Ok(f)
    }

    pub fn k_half(&self) -> usize {
        self.k_half
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega0
    }

    /// Amplitude bound used as the encoder's `c`.
    pub fn bound_c(&self) -> f64 {
        self.bound_c
    }

    fn index_of(&self, k: i64) -> usize {
        let kk = self.k_half as i64;
        debug_assert!(k != 0 && k.abs() <= kk);
        if k < 0 {
            (k + kk) as usize
        } else {
            (k + kk - 1) as usize
        }
    }

    /// Coefficient `x^[k]` for `k` in `𝒦`.
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs[self.index_of(k)]
    }

    /// The harmonic set in ascending order.
    pub fn freq_set(&self) -> impl Iterator<Item = i64> + '_ {
        let k = self.k_half as i64;
        (-k..=k).filter(|&m| m != 0)
    }

    /// `y(t)`: real by conjugate symmetry of the coefficients.
    pub fn eval_y(&self, t: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in self.freq_set() {
            acc += self.coeff(k) * Complex64::from_polar(1.0, k as f64 * self.omega0 * t);
        }
        acc.re
    }

    /// `Y(t) = ∫₀ᵗ y(s) ds`, in closed form. Because `0 ∉ 𝒦` every term is
    /// `x^[k] (e^{jkw0 t} - 1)/(jkw0)`, and `Y(0) = 0` by construction.
    pub fn antiderivative(&self, t: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in self.freq_set() {
            let jkw = Complex64::new(0.0, k as f64 * self.omega0);
            let phasor = Complex64::from_polar(1.0, k as f64 * self.omega0 * t);
            acc += self.coeff(k) * (phasor - 1.0) / jkw;
        }
        acc.re
    }
}

/// Applies the kernel to a signal, keeping exactly the `𝒦` coefficients.
pub fn filter(signal: &FriSignal, kernel: &SosKernel) -> Result<FilteredSignal> {
    let signal_omega0 = signal.omega0();
    let rel = (signal_omega0 - kernel.omega0()).abs() / signal_omega0;
    if rel > 1e-12 {
        return Err(Error::KernelSignalMismatch {
            signal_omega0,
            kernel_omega0: kernel.omega0(),
        });
    }
    for k in kernel.freq_set() {
        let omega = k as f64 * signal_omega0;
        let h = signal.shape().transform(omega);
        if h.abs() <= 1e-12 * signal.shape().l1_norm().max(1.0) {
            return Err(Error::PulseSpectrumZero { k, omega });
        }
    }
    let coeffs: Vec<Complex64> = kernel.freq_set().map(|k| signal.fsc(k)).collect();
    FilteredSignal::from_coeffs(signal.period(), kernel.k_half(), coeffs)
}

/// The two readings of the amplitude bound: the loose analytic product
/// `L · a_max · ‖g‖∞ · ‖h‖₁` and the tight empirical maximum of `|y(t)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeBound {
    pub analytic: f64,
    pub empirical: f64,
}

/// Computes both amplitude bounds for a signal/kernel pair. The encoder uses
/// the empirical one (as `FilteredSignal::bound_c`); the analytic product is
/// reported for rate budgeting.
pub fn amplitude_bound(signal: &FriSignal, kernel: &SosKernel) -> Result<AmplitudeBound> {
    let filtered = filter(signal, kernel)?;
    let a_max = signal
        .pulses()
        .iter()
        .map(|p| p.amplitude.abs())
        .fold(0.0, f64::max);
    let analytic =
        signal.num_pulses() as f64 * a_max * kernel.g_inf_norm() * signal.shape().l1_norm();
    Ok(AmplitudeBound {
        analytic,
        empirical: empirical_max(&filtered),
    })
}

/// Max of `|y|` over one period: 10^4-point grid scan followed by
/// golden-section refinement around the best cell.
fn empirical_max(f: &FilteredSignal) -> f64 {
    empirical_max_grid(f, 10_000)
}

/// Grid-resolution-controlled variant; the encoder re-runs this denser when a
/// firing bracket unexpectedly fails.
pub(crate) fn empirical_max_grid(f: &FilteredSignal, grid: usize) -> f64 {
    let t_per = f.period();
    let mut best = 0.0f64;
    let mut best_i = 0usize;
    for i in 0..grid {
        let v = f.eval_y(i as f64 * t_per / grid as f64).abs();
        if v > best {
            best = v;
            best_i = i;
        }
    }
    if best == 0.0 {
        return 0.0;
    }
    let h = t_per / grid as f64;
    let lo = best_i as f64 * h - h;
    let hi = best_i as f64 * h + h;
    best.max(golden_max(|t| f.eval_y(t).abs(), lo, hi))
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..100 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if b - a < 1e-15 {
            break;
        }
    }
    fc.max(fd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Pulse, PulseShape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dirac(period: f64, pairs: &[(f64, f64)]) -> FriSignal {
        let pulses = pairs
            .iter()
            .map(|&(amplitude, delay)| Pulse { amplitude, delay })
            .collect();
        FriSignal::new(period, PulseShape::Dirac, pulses).unwrap()
    }

    /// The Fig. 5-style test signal: five off-grid impulses in T = 1.
    fn five_impulses() -> FriSignal {
        dirac(
            1.0,
            &[
                (1.2, 0.107),
                (-0.8, 0.283),
                (0.9, 0.461),
                (1.5, 0.672),
                (-1.1, 0.854),
            ],
        )
    }

    #[test]
    fn ghat_is_one_on_freq_set_zero_elsewhere() {
        let k = SosKernel::new(1.0, 4).unwrap();
        for m in -7i64..=7 {
            let g = k.ghat(m as f64 * k.omega0());
            let want = if m != 0 && m.abs() <= 4 { 1.0 } else { 0.0 };
            assert!((g - want).abs() < 1e-12, "m={m}: ghat={g}");
        }
    }

    #[test]
    fn freq_set_excludes_zero_and_is_symmetric() {
        let k = SosKernel::new(2.0, 3).unwrap();
        let set: Vec<i64> = k.freq_set().collect();
        assert_eq!(set, vec![-3, -2, -1, 1, 2, 3]);
    }

    #[test]
    fn filter_single_impulse() {
        let s = dirac(1.0, &[(1.0, 0.5)]);
        let k = SosKernel::new(1.0, 1).unwrap();
        let f = filter(&s, &k).unwrap();
        assert!((f.coeff(1) - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
        assert!((f.coeff(-1) - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn filter_zero_signal() {
        let s = dirac(1.0, &[(0.0, 0.5)]);
        let k = SosKernel::new(1.0, 3).unwrap();
        let f = filter(&s, &k).unwrap();
        for k in f.freq_set() {
            assert_eq!(f.coeff(k), Complex64::new(0.0, 0.0));
        }
        assert_eq!(f.bound_c(), 0.0);
    }

    #[test]
    fn filter_coeffs_equal_fsc() {
        let s = five_impulses();
        let k = SosKernel::new(1.0, 5).unwrap();
        let f = filter(&s, &k).unwrap();
        for m in f.freq_set() {
            assert_eq!(f.coeff(m), s.fsc(m));
        }
    }

    #[test]
    fn filter_mismatched_period_rejected() {
        let s = dirac(1.0, &[(1.0, 0.5)]);
        let k = SosKernel::new(2.0, 1).unwrap();
        assert!(matches!(
            filter(&s, &k),
            Err(Error::KernelSignalMismatch { .. })
        ));
    }

    #[test]
    fn filter_rejects_spectral_null() {
        // Rect of width T/2 has nulls at even harmonics: omega w/2 = 2pi.
        let s = FriSignal::new(
            1.0,
            PulseShape::Rect { width: 0.5 },
            vec![Pulse {
                amplitude: 1.0,
                delay: 0.5,
            }],
        )
        .unwrap();
        let k = SosKernel::new(1.0, 2).unwrap();
        match filter(&s, &k) {
            Err(Error::PulseSpectrumZero { k, .. }) => assert_eq!(k.abs(), 2),
            other => panic!("expected spectral-null rejection, got {other:?}"),
        }
    }

    #[test]
    fn filter_rejects_unit_spline_at_unit_period() {
        // Every harmonic of T = 1 sits on a null of the unit-scale spline.
        let s = FriSignal::new(
            1.0,
            PulseShape::CubicBSpline { scale: 1.0 },
            vec![Pulse {
                amplitude: 1.0,
                delay: 0.5,
            }],
        )
        .unwrap();
        let k = SosKernel::new(1.0, 3).unwrap();
        assert!(matches!(
            filter(&s, &k),
            Err(Error::PulseSpectrumZero { .. })
        ));
    }

    #[test]
    fn filtered_matches_time_domain_convolution() {
        // For impulses the convolution with g collapses to shifted copies of
        // g itself, so the time-domain oracle is exact.
        let s = five_impulses();
        let kern = SosKernel::new(1.0, 5).unwrap();
        let f = filter(&s, &kern).unwrap();
        for i in 0..400 {
            let t = i as f64 / 400.0;
            let mut oracle = 0.0;
            for p in s.pulses() {
                for wrap in -2..=2 {
                    oracle += p.amplitude * kern.g_time(t - p.delay - wrap as f64);
                }
            }
            let v = f.eval_y(t);
            assert!((v - oracle).abs() < 1e-6, "t={t}: {v} vs {oracle}");
        }
    }

    #[test]
    fn eval_periodic_and_bounded() {
        let s = five_impulses();
        let k = SosKernel::new(1.0, 5).unwrap();
        let f = filter(&s, &k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let t: f64 = rng.gen_range(-3.0..3.0);
            assert!((f.eval_y(t) - f.eval_y(t + 1.0)).abs() < 1e-12);
            assert!(f.eval_y(t).abs() <= f.bound_c());
        }
    }

    #[test]
    fn antiderivative_zero_signal() {
        let f = FilteredSignal::from_coeffs(1.0, 2, vec![Complex64::new(0.0, 0.0); 4]).unwrap();
        for t in [0.0, 0.3, 1.7] {
            assert_eq!(f.antiderivative(t), 0.0);
        }
    }

    #[test]
    fn antiderivative_cosine_closed_form() {
        // coeffs {±1: -1} → y = -2cos(2πt), Y = -sin(2πt)/π.
        let f = FilteredSignal::from_coeffs(
            1.0,
            1,
            vec![Complex64::new(-1.0, 0.0), Complex64::new(-1.0, 0.0)],
        )
        .unwrap();
        let y = f.antiderivative(0.25);
        let want = -1.0 / std::f64::consts::PI;
        assert!((y - want).abs() < 1e-14, "{y} vs {want}");
        assert_eq!(f.antiderivative(0.0), 0.0);
    }

    #[test]
    fn antiderivative_matches_finite_difference() {
        let s = five_impulses();
        let k = SosKernel::new(1.0, 5).unwrap();
        let f = filter(&s, &k).unwrap();
        let eps = 1e-7;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let t: f64 = rng.gen_range(0.0..1.0);
            let slope = (f.antiderivative(t + eps) - f.antiderivative(t)) / eps;
            let y = f.eval_y(t + eps / 2.0);
            let denom = y.abs().max(1.0);
            assert!(
                ((slope - y) / denom).abs() < 1e-5,
                "t={t}: {slope} vs {y}"
            );
        }
    }

    #[test]
    fn y_has_zero_mean_over_period() {
        let s = five_impulses();
        let k = SosKernel::new(1.0, 5).unwrap();
        let f = filter(&s, &k).unwrap();
        let integral = f.antiderivative(1.0) - f.antiderivative(0.0);
        assert!(integral.abs() <= 1e-10 * f.period() * f.bound_c());
    }

    #[test]
    fn amplitude_bound_zero_signal() {
        let s = dirac(1.0, &[(0.0, 0.5)]);
        let k = SosKernel::new(1.0, 3).unwrap();
        let b = amplitude_bound(&s, &k).unwrap();
        assert_eq!(b.analytic, 0.0);
        assert_eq!(b.empirical, 0.0);
    }

    #[test]
    fn amplitude_bound_aligned_phasors() {
        // One unit impulse, K = 2: all four phasors align at t = τ, so the
        // true max is 4/T and the analytic product gives exactly the same.
        let s = dirac(1.0, &[(1.0, 0.5)]);
        let k = SosKernel::new(1.0, 2).unwrap();
        let b = amplitude_bound(&s, &k).unwrap();
        assert!((b.empirical - 4.0).abs() < 1e-9, "{}", b.empirical);
        assert!((b.analytic - 4.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_bound_dominates_empirical() {
        let s = FriSignal::new(
            1.0,
            PulseShape::CubicBSpline { scale: 0.02 },
            vec![
                Pulse {
                    amplitude: 1.4,
                    delay: 0.21,
                },
                Pulse {
                    amplitude: -0.9,
                    delay: 0.52,
                },
                Pulse {
                    amplitude: 1.1,
                    delay: 0.83,
                },
            ],
        )
        .unwrap();
        let k = SosKernel::new(1.0, 7).unwrap();
        let b = amplitude_bound(&s, &k).unwrap();
        assert!(b.analytic >= b.empirical, "{b:?}");
        assert!(b.empirical > 0.0);
    }

    #[test]
    fn g_time_peak_and_support() {
        let k = SosKernel::new(1.0, 5).unwrap();
        assert!((k.g_time(0.0) - 10.0).abs() < 1e-12);
        assert_eq!(k.g_time(0.51), 0.0);
        assert!((k.g_inf_norm() - 10.0).abs() < 1e-12);
    }
}
