//! Gauss–Legendre and adaptive Gauss–Kronrod rules.

use crate::num::Real;

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Nodes by Newton iteration on the three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = n as f64;
        let two = T::lit(2.0);
        let tiny = T::epsilon() * T::lit(4.0);
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess.
            let mut x = T::lit(((i as f64 + 0.75) / (nf + 0.5) * std::f64::consts::PI).cos());
            let mut dp = T::one();
            for _ in 0..100 {
                let (mut p0, mut p1) = (T::one(), x);
                for k in 2..=n {
                    let kf = T::from_usize_lossy(k);
                    let p2 = ((two * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if n == 1 { x } else { p1 };
                let pm1 = if n == 1 { T::one() } else { p0 };
                dp = T::from_usize_lossy(n) * (x * p - pm1) / (x * x - T::one());
                let dx = p / dp;
                x = x - dx;
                if dx.abs() <= tiny {
                    break;
                }
            }
            let w = two / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b f`.
    #[inline]
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        let mut s = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s = s + *w * f(mid + half * *x);
        }
        s * half
    }

    /// `(∫_a^b f, ∫_a^b |f|)`, the second serving as a rounding scale.
    #[inline]
    pub fn integrate_with_abs<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> (T, T) {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        let (mut s, mut sa) = (T::zero(), T::zero());
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * *x);
            s = s + *w * v;
            sa = sa + *w * v.abs();
        }
        (s * half, sa * half.abs())
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * *x, *w * half))
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let fc = f(mid);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        k = k + T::lit(WGK[j]) * s;
        if j % 2 == 1 {
            g = g + T::lit(WG[j / 2]) * s;
        }
    }
    (k * half, ((k - g) * half).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub converged: bool,
}

/// Globally adaptive 15-point Gauss–Kronrod integration of `f` over `[a, b]`,
/// bisecting the interval with the largest error until the total error is
/// below `max(abs_tol, rel_tol·|value|)`.
pub fn adaptive<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
    max_intervals: usize,
) -> Integral<T> {
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let (mut value, mut error) = (v, e);
    while error > abs_tol.max(rel_tol * value.abs()) {
        if parts.len() >= max_intervals {
            return Integral {
                value,
                error,
                converged: false,
            };
        }
        let (idx, _) =
            parts.iter().enumerate().fold(
                (0, T::neg_infinity()),
                |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best },
            );
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = (lo + hi) / T::lit(2.0);
        let left = gk15(&mut f, lo, mid);
        let right = gk15(&mut f, mid, hi);
        parts.push((lo, mid, left.0, left.1));
        parts.push((mid, hi, right.0, right.1));
        // Re-sum to avoid drift from repeated subtraction.
        value = parts.iter().fold(T::zero(), |s, p| s + p.2);
        error = parts.iter().fold(T::zero(), |s, p| s + p.3);
    }
    Integral {
        value,
        error,
        converged: true,
    }
}

/// Trapezoid rule on tabulated values.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 32] {
            let gl = GaussLegendre::<f64>::new(n);
            assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = gl.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn legendre_in_single_precision() {
        let gl = GaussLegendre::<f32>::new(8);
        let got = gl.integrate(0.0, 1.0, |x| x.exp());
        assert!((got - (std::f32::consts::E - 1.0)).abs() < 1e-5);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let r = adaptive(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 1e-12, 2000);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!(r.converged);
        assert!((r.value - exact).abs() < 1e-8 * exact);
        let r = adaptive(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12, 1e-12, 2000);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn trapezoid_linear_exact() {
        let xs = [0.0, 0.5, 2.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((trapezoid(&xs, &ys) - 8.0).abs() < 1e-15);
    }
}
