//! Power series in the relative cutoff r for the small-jump integrals of
//! the disk kernel at unit state.

const MAX_TERMS: usize = 240;

/// Σ_n coef[n] · r^(n + offset).
#[derive(Debug, Clone)]
pub struct PowSeries {
    offset: f64,
    coef: Vec<f64>,
}

impl PowSeries {
    /// Integrates Σ a[n] x^(n + p) from 0 to r term by term.
    fn integrated(p: f64, a: &[f64]) -> Self {
        let coef = a
            .iter()
            .enumerate()
            .map(|(n, &c)| c / (n as f64 + p + 1.0))
            .collect();
        Self {
            offset: p + 1.0,
            coef,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        debug_assert!(r > 0.0 && r < 1.0, "series evaluated at r = {r}");
        let n = ((43.0 / -r.ln()).ceil() as usize + 8).min(self.coef.len());
        let mut acc = 0.0;
        for &c in self.coef[..n].iter().rev() {
            acc = acc * r + c;
        }
        acc * r.powf(self.offset)
    }
}

/// Taylor coefficients of (1 + s·x)^e.
fn binomial_series(e: f64, s: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(MAX_TERMS);
    let mut c = 1.0;
    for n in 0..MAX_TERMS {
        out.push(c);
        c *= (e - n as f64) / (n as f64 + 1.0) * s;
    }
    out
}

/// Series for the unit-state kernel with upward weight a_+ and downward
/// weight a_−:
///   up(x)   = a_+ x^{−1−α} (1+x)^{−1−α}
///   down(x) = a_− x^{−1−α} (1−x)^{−1−α}, x < 1/2.
#[derive(Debug, Clone)]
pub struct KernelSeries {
    pub alpha: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    up_drift: PowSeries,
    down_drift: PowSeries,
    variance: PowSeries,
}

impl KernelSeries {
    pub fn new(alpha: f64, a_plus: f64, a_minus: f64) -> Self {
        let b = binomial_series(-alpha - 1.0, 1.0);
        let c = binomial_series(-alpha - 1.0, -1.0);
        // x^{−α}((1±x)^{−α−1} − 1) starts at x^{1−α}.
        let up_drift = PowSeries::integrated(1.0 - alpha, &b[1..]);
        let down_drift = PowSeries::integrated(1.0 - alpha, &c[1..]);
        let var: Vec<f64> = b
            .iter()
            .zip(&c)
            .map(|(bp, cm)| a_plus * bp + a_minus * cm)
            .collect();
        let variance = PowSeries::integrated(1.0 - alpha, &var);
        Self {
            alpha,
            a_plus,
            a_minus,
            up_drift,
            down_drift,
            variance,
        }
    }

    /// Drift at unit state when jumps of relative size below r are removed
    /// and the remaining ones are compensated against the stable law.
    pub fn drift(&self, r: f64) -> f64 {
        let a = self.alpha;
        (self.a_minus - self.a_plus) * r.powf(1.0 - a) / (a - 1.0) + self.a_plus * self.up_drift.eval(r)
            - self.a_minus * self.down_drift.eval(r)
    }

    /// Second moment of the removed jumps at unit state: ∫_0^r x² (up + down).
    pub fn variance(&self, r: f64) -> f64 {
        self.variance.eval(r)
    }

    pub fn compensation(&self, q: f64, gaussian: bool) -> Compensation {
        Compensation::new(self, q, gaussian)
    }
}

/// Expected per-unit-clock change of Σ label^q due to removed jumps of
/// relative size below r, at unit state, split into the split/drift part
/// and the part coming from removed loops.
#[derive(Debug, Clone)]
pub struct Compensation {
    pub q: f64,
    smooth_up: PowSeries,
    smooth_down: PowSeries,
    pieces: PowSeries,
    loops: PowSeries,
    a_plus: f64,
    a_minus: f64,
}

impl Compensation {
    fn new(k: &KernelSeries, q: f64, gaussian: bool) -> Self {
        let a = k.alpha;
        let m = if gaussian { 1.0 } else { 0.0 };
        let b = binomial_series(-a - 1.0, 1.0);
        let c = binomial_series(-a - 1.0, -1.0);
        let gp = binomial_series(q - 1.0 - a, 1.0);
        let gm = binomial_series(q - 1.0 - a, -1.0);
        let h = m * q * (q - 1.0) / 2.0;
        let at = |v: &[f64], n: usize, shift: usize| if n >= shift { v[n - shift] } else { 0.0 };
        // Coefficients of (1±x)^{−1−α}[(1±x)^q − 1 ∓ qx − h x²]; the first
        // two (three when h matches) vanish identically.
        let first = if gaussian { 3 } else { 2 };
        let mut up = vec![0.0; MAX_TERMS];
        let mut down = vec![0.0; MAX_TERMS];
        for n in first..MAX_TERMS {
            up[n] = gp[n] - at(&b, n, 0) - q * at(&b, n, 1) - h * at(&b, n, 2);
            down[n] = gm[n] - at(&c, n, 0) + q * at(&c, n, 1) - h * at(&c, n, 2);
        }
        // times x^{−1−α}
        let smooth_up = PowSeries::integrated(first as f64 - 1.0 - a, &up[first..]);
        let smooth_down = PowSeries::integrated(first as f64 - 1.0 - a, &down[first..]);
        let pieces = PowSeries::integrated(q - 1.0 - a, &c);
        let loops = PowSeries::integrated(q - 1.0 - a, &b);
        Self {
            q,
            smooth_up,
            smooth_down,
            pieces,
            loops,
            a_plus: k.a_plus,
            a_minus: k.a_minus,
        }
    }

    /// Contribution of the followed path and of removed split pieces.
    pub fn base(&self, r: f64) -> f64 {
        self.a_plus * self.smooth_up.eval(r)
            + self.a_minus * (self.smooth_down.eval(r) + self.pieces.eval(r))
    }

    /// Contribution of removed loops (counted only for the loop-carrying tree).
    pub fn loops(&self, r: f64) -> f64 {
        self.a_plus * self.loops.eval(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_log, Tolerance};

    fn kernel() -> KernelSeries {
        KernelSeries::new(4.0 / 3.0, 0.5, 1.0)
    }

    #[test]
    fn drift_matches_quadrature() {
        let k = kernel();
        let a = k.alpha;
        for &r in &[1e-4f64, 1e-2, 0.1, 0.3] {
            let g = |x: f64| {
                x.powf(-a)
                    * (0.5 * (-(a + 1.0) * x.ln_1p()).exp_m1()
                        - (-(a + 1.0) * (-x).ln_1p()).exp_m1())
            };
            let x0 = 1e-8 * r;
            let corr = integrate_log(g, x0, r, Tolerance::rel(1e-12)).unwrap()
                - 1.5 * (a + 1.0) * x0.powf(2.0 - a) / (2.0 - a);
            let expect = 0.5 * r.powf(1.0 - a) / (a - 1.0) + corr;
            assert!((k.drift(r) - expect).abs() < 1e-9 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn compensation_matches_quadrature() {
        let k = kernel();
        let a = k.alpha;
        let q = 11.0 / 6.0;
        for &gaussian in &[false, true] {
            let comp = k.compensation(q, gaussian);
            let m = if gaussian { 1.0 } else { 0.0 };
            let h = m * q * (q - 1.0) / 2.0;
            let f = |x: f64| {
                let up = ((q * x.ln_1p()).exp_m1() - q * x - h * x * x)
                    * 0.5
                    * (1.0 + x).powf(-1.0 - a);
                let down = ((q * (-x).ln_1p()).exp_m1() + q * x - h * x * x + x.powf(q))
                    * (1.0 - x).powf(-1.0 - a);
                (up + down) * x.powf(-1.0 - a)
            };
            for &r in &[1e-3f64, 0.0625, 0.25] {
                let x0 = 1e-5 * r;
                // leading behaviour on (0, x0): removed pieces and, without the
                // Gaussian part, the quadratic term of both jump directions
                let mut expect = x0.powf(q - a) / (q - a);
                if !gaussian {
                    expect += q * (q - 1.0) / 2.0 * 1.5 * x0.powf(2.0 - a) / (2.0 - a);
                }
                expect += integrate_log(f, x0, r, Tolerance::rel(1e-12)).unwrap();
                let got = comp.base(r);
                assert!(
                    (got - expect).abs() < 1e-7 * expect.abs(),
                    "r={r} gaussian={gaussian}: {got} vs {expect}"
                );
            }
        }
    }
}
