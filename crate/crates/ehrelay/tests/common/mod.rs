//! Shared test oracles, independent of the library's special-function
//! implementation paths: adaptive Simpson quadrature applied to the
//! defining integrals.

/// Adaptive Simpson with Richardson correction; `rel_tol` is relative to
/// each subinterval's own estimate so recursion never chases sub-ulp noise.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        rel_tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * rel_tol * (left.abs() + right.abs()).max(1e-300) {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, rel_tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, rel_tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, rel_tol, 40)
}

/// E_n(x) = int_1^inf e^{-x t} t^{-n} dt by panel-doubling adaptive
/// quadrature of the defining integral (all panels positive, so per-panel
/// relative accuracy carries to the total).
pub fn en_quadrature(n: u32, x: f64) -> f64 {
    let f = move |t: f64| (-x * t).exp() * t.powi(-(n as i32));
    // truncate where the exponential kills everything representable
    let t_max = (1.0 + 745.0 / x).max(2.0);
    let mut total = 0.0;
    let mut lo = 1.0f64;
    while lo < t_max {
        let hi = (2.0 * lo).min(t_max);
        total += adaptive_simpson(&f, lo, hi, 1e-13);
        lo = hi;
    }
    total
}

/// Ei(x) = gamma + ln x + int_0^x (e^t - 1)/t dt; the integrand is entire,
/// so plain adaptive quadrature is an independent numerical route.
pub fn ei_quadrature(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let f = |t: f64| if t == 0.0 { 1.0 } else { t.exp_m1() / t };
    let mut total = 0.0;
    let mut lo = 0.0f64;
    // doubling panels keep the huge-slope region near x well resolved
    while lo < x {
        let hi = if lo == 0.0 {
            (x / 1024.0).min(1.0)
        } else {
            (2.0 * lo).min(x)
        };
        total += adaptive_simpson(&f, lo, hi, 1e-13);
        lo = hi;
    }
    EULER_GAMMA + x.ln() + total
}

/// Deterministic xorshift for oracle sampling (no dependency on the crate's
/// RNG choices).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    /// Uniform in [0,1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Log-uniform in [lo, hi].
    pub fn log_range(&mut self, lo: f64, hi: f64) -> f64 {
        (self.range(lo.ln(), hi.ln())).exp()
    }
}
