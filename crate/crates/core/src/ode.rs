//! Dormand–Prince 5(4) integrator for complex linear-algebra state vectors,
//! with FSAL stepping and fifth-order-consistent dense output.

use crate::error::{Error, Result};
use crate::operators::{C64, ZERO};

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
    /// Largest angular frequency of the generator, reported on stiffness.
    fn frequency_scale(&self) -> f64 {
        f64::NAN
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-8, atol: 1e-10, max_steps: 50_000_000, h_init: None, h_max: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

fn rms_scaled(v: &[C64], y0: &[C64], y1: Option<&[C64]>, o: &OdeOptions) -> f64 {
    let n = v.len().max(1) as f64;
    let s: f64 = v
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let m = match y1 {
                Some(y1) => y0[i].norm().max(y1[i].norm()),
                None => y0[i].norm(),
            };
            let sk = o.atol + o.rtol * m;
            (x.norm() / sk).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn axpy_into(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = ZERO;
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

struct Stepper {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
    err: Vec<C64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Stepper {
            k: std::array::from_fn(|_| vec![ZERO; n]),
            tmp: vec![ZERO; n],
            y_new: vec![ZERO; n],
            err: vec![ZERO; n],
        }
    }

    /// One trial step from (t, y) with k[0] = f(t, y) already set.
    fn step<S: OdeSystem + ?Sized>(&mut self, sys: &S, t: f64, y: &[C64], h: f64) {
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        axpy_into(&mut self.tmp, y, h, &[(A21, k1)]);
        sys.rhs(t + C2 * h, &self.tmp, k2);
        axpy_into(&mut self.tmp, y, h, &[(A31, k1), (A32, k2)]);
        sys.rhs(t + C3 * h, &self.tmp, k3);
        axpy_into(&mut self.tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
        sys.rhs(t + C4 * h, &self.tmp, k4);
        axpy_into(&mut self.tmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
        sys.rhs(t + C5 * h, &self.tmp, k5);
        axpy_into(&mut self.tmp, y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
        sys.rhs(t + h, &self.tmp, k6);
        axpy_into(&mut self.y_new, y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        sys.rhs(t + h, &self.y_new, k7);
        for i in 0..y.len() {
            self.err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
    }

    /// Dense output at `t_old + θh` for the step just accepted.
    fn interpolate(&self, y_old: &[C64], h: f64, theta: f64, out: &mut [C64]) {
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        let t1 = 1.0 - theta;
        for i in 0..out.len() {
            let ydiff = self.y_new[i] - y_old[i];
            let bspl = k1[i] * h - ydiff;
            let r4 = ydiff - k7[i] * h - bspl;
            let r5 = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
            out[i] = y_old[i] + (ydiff + (bspl + (r4 + r5 * t1) * theta) * t1) * theta;
        }
    }
}

fn initial_step<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[C64], f0: &[C64], span: f64, o: &OdeOptions) -> f64 {
    let d0 = rms_scaled(y, y, None, o);
    let d1 = rms_scaled(f0, y, None, o);
    let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 * span } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<C64> = y.iter().zip(f0).map(|(a, b)| a + b * h0).collect();
    let mut f1 = vec![ZERO; y.len()];
    sys.rhs(t + h0, &y1, &mut f1);
    let diff: Vec<C64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_scaled(&diff, y, None, o) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6 * span) } else { (0.01 / dm).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates from `t0` through every time in `t_out` (ascending, `≥ t0`),
/// calling `on_output(t, y)` at each. Returns the state at the last output.
pub fn integrate<S, F>(
    sys: &S,
    t0: f64,
    y0: &[C64],
    t_out: &[f64],
    opts: &OdeOptions,
    mut on_output: F,
) -> Result<(Vec<C64>, OdeStats)>
where
    S: OdeSystem + ?Sized,
    F: FnMut(f64, &[C64]),
{
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::DimensionMismatch { expected: vec![n], found: vec![y0.len()] });
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::param("tolerance", "rtol and atol must be positive"));
    }
    if t_out.windows(2).any(|w| !(w[1] >= w[0])) || t_out.first().is_some_and(|&t| t < t0) {
        return Err(Error::param("times", "output times must be ascending and not before t0"));
    }
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut idx = 0;
    while idx < t_out.len() && t_out[idx] == t0 {
        on_output(t0, &y);
        idx += 1;
    }
    let Some(&t_end) = t_out.last() else {
        return Ok((y, stats));
    };
    if idx == t_out.len() {
        return Ok((y, stats));
    }
    let span = t_end - t0;
    let h_max = opts.h_max.unwrap_or(span).min(span);

    let mut st = Stepper::new(n);
    sys.rhs(t, &y, &mut st.k[0]);
    stats.rhs_evals += 1;
    let mut h = match opts.h_init {
        Some(h) => h,
        None => {
            stats.rhs_evals += 1;
            initial_step(sys, t, &y, &st.k[0], span, opts)
        }
    }
    .min(h_max);
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut dense = vec![ZERO; n];

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps { max_steps: opts.max_steps, time: t });
        }
        if h.abs() <= 10.0 * f64::EPSILON * t.abs().max(span) {
            return Err(Error::Stiffness { time: t, step: h, fastest_frequency: sys.frequency_scale() });
        }
        let last = t + 1.01 * h >= t_end;
        if last {
            h = t_end - t;
        }
        st.step(sys, t, &y, h);
        stats.rhs_evals += 6;
        let err = rms_scaled(&st.err, &y, Some(&st.y_new), opts);
        if !err.is_finite() {
            h *= FAC_MIN;
            stats.rejected += 1;
            last_rejected = true;
            continue;
        }
        let fac11 = err.powf(0.2 - BETA * 0.75);
        if err <= 1.0 {
            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            fac_old = err.max(1e-4);
            stats.accepted += 1;
            let t_new = if last { t_end } else { t + h };
            while idx < t_out.len() && t_out[idx] <= t_new {
                let to = t_out[idx];
                if to == t_new {
                    on_output(to, &st.y_new);
                } else {
                    st.interpolate(&y, h, (to - t) / h, &mut dense);
                    on_output(to, &dense);
                }
                idx += 1;
            }
            // FSAL
            let (first, rest) = st.k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            std::mem::swap(&mut y, &mut st.y_new);
            t = t_new;
            if idx >= t_out.len() {
                return Ok((y, stats));
            }
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new.min(h_max);
        } else {
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            stats.rejected += 1;
            last_rejected = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotator {
        w: f64,
    }

    impl OdeSystem for Rotator {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = C64::new(0.0, -self.w) * y[0];
        }
    }

    struct Decay {
        rates: Vec<f64>,
    }

    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            self.rates.len()
        }
        fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
            for i in 0..y.len() {
                dy[i] = -y[i] * self.rates[i];
            }
        }
    }

    #[test]
    fn rotation_matches_exponential() {
        let sys = Rotator { w: 7.3 };
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let mut worst: f64 = 0.0;
        integrate(&sys, 0.0, &[C64::new(1.0, 0.0)], &times, &OdeOptions::default(), |t, y| {
            let exact = C64::new(0.0, -7.3 * t).exp();
            worst = worst.max((y[0] - exact).norm());
        })
        .unwrap();
        assert!(worst < 1e-6, "max error {worst}");
    }

    #[test]
    fn dense_output_is_accurate_between_steps() {
        let sys = Decay { rates: vec![1.0, 3.0] };
        let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.003).collect();
        let opts = OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let mut count = 0;
        let (_, stats) = integrate(&sys, 0.0, &[C64::new(1.0, 0.0), C64::new(2.0, 1.0)], &times, &opts, |t, y| {
            count += 1;
            assert!((y[0].re - (-t).exp()).abs() < 1e-8);
            assert!((y[1] - C64::new(2.0, 1.0) * (-3.0 * t).exp()).norm() < 1e-8);
        })
        .unwrap();
        assert_eq!(count, times.len());
        assert!(stats.accepted < times.len(), "dense output should not force steps");
    }

    #[test]
    fn rejects_bad_input() {
        let sys = Rotator { w: 1.0 };
        let y = [C64::new(1.0, 0.0)];
        assert!(integrate(&sys, 0.0, &y, &[1.0, 0.5], &OdeOptions::default(), |_, _| {}).is_err());
        assert!(integrate(&sys, 0.0, &[], &[1.0], &OdeOptions::default(), |_, _| {}).is_err());
        let opts = OdeOptions { max_steps: 3, ..Default::default() };
        let big = Rotator { w: 1e4 };
        assert!(matches!(
            integrate(&big, 0.0, &y, &[100.0], &opts, |_, _| {}),
            Err(Error::TooManySteps { .. })
        ));
    }

    #[test]
    fn empty_and_trivial_output() {
        let sys = Rotator { w: 1.0 };
        let y = [C64::new(1.0, 0.0)];
        let (out, _) = integrate(&sys, 0.0, &y, &[], &OdeOptions::default(), |_, _| panic!()).unwrap();
        assert_eq!(out, y);
        let mut hits = 0;
        integrate(&sys, 0.0, &y, &[0.0, 0.0], &OdeOptions::default(), |_, _| hits += 1).unwrap();
        assert_eq!(hits, 2);
    }
}
