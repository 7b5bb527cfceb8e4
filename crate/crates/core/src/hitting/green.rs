//! Lattice Green's function of the geometrically killed walk,
//!
//! ```text
//! G_T(x) = sum_n s^n p_n(0, x) = (d/s) ∫_0^∞ e^{-κ z} Π_j Ie_{x_j}(z) dz,
//! s = T/(T+1),  κ = d/T,  Ie_n(z) = e^{-z} I_n(z),
//! ```
//!
//! evaluated by composite Gauss–Legendre quadrature on geometrically growing
//! panels. `T = ∞` is the unkilled walk (`d >= 3`), whose `z^{-d/2}` tail past
//! the last panel is added analytically. Each value is computed with two
//! panel refinements; their difference is the reported quadrature error.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::marker::PhantomData;

use crate::lattice::{Point, MAX_DIM};
use crate::scalar::Real;

const GL_POINTS: usize = 20;
const UNKILLED_CUTOFF: f64 = 4_194_304.0; // 2^22

/// Gauss–Legendre nodes and weights on [-1, 1].
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `e^{-z} I_n(z)` for `n = 0..=order`.
pub(crate) fn scaled_bessel_i(z: f64, order: usize) -> Vec<f64> {
    let mut out = vec![0.0; order + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if z > 2000.0 && z > 8.0 * ((order * order) as f64 + 1.0) {
        for (n, o) in out.iter_mut().enumerate() {
            *o = hankel_scaled(z, n);
        }
        return out;
    }
    // Miller's backward recurrence I_{k-1} = (2k/z) I_k + I_{k+1}, normalised
    // by e^z = I_0 + 2 sum_{k>=1} I_k.
    let start = order + 30 + (2.0 * (45.0 * z).sqrt()).ceil() as usize;
    let mut next = 0.0f64;
    let mut cur = 1e-280f64;
    let mut sum = 0.0f64;
    for k in (1..=start).rev() {
        if k <= order {
            out[k] = cur;
        }
        sum += 2.0 * cur;
        let prev = (2.0 * k as f64 / z) * cur + next;
        next = cur;
        cur = prev;
        if cur > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            sum *= 1e-250;
            for o in out.iter_mut() {
                *o *= 1e-250;
            }
        }
    }
    out[0] = cur;
    sum += cur;
    for o in out.iter_mut() {
        *o /= sum;
    }
    out
}

/// Large-argument expansion of `e^{-z} I_n(z)`.
fn hankel_scaled(z: f64, n: usize) -> f64 {
    let mu = 4.0 * (n as f64).powi(2);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let next = -term * (mu - ((2 * k - 1) as f64).powi(2)) / (8.0 * k as f64 * z);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * z).sqrt()
}

#[derive(Clone, Debug)]
struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    table: Vec<Vec<f64>>,
}

impl Rule {
    fn build(breaks: &[f64], gl: &(Vec<f64>, Vec<f64>), prefactor: f64, kappa: f64) -> Rule {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, wt) in gl.0.iter().zip(&gl.1) {
                let z = mid + half * x;
                nodes.push(z);
                weights.push(prefactor * half * wt * (-kappa * z).exp());
            }
        }
        Rule { nodes, weights, table: Vec::new() }
    }

    fn ensure_order(&mut self, order: usize) {
        if self.table.first().is_some_and(|t| t.len() > order) {
            return;
        }
        let have = self.table.first().map_or(0, |t| t.len());
        let target = order.max(2 * have).max(8);
        self.table = self.nodes.iter().map(|&z| scaled_bessel_i(z, target)).collect();
    }

    fn integrate(&self, key: &[u32]) -> f64 {
        self.table
            .iter()
            .zip(&self.weights)
            .map(|(row, w)| w * key.iter().map(|&n| row[n as usize]).product::<f64>())
            .sum()
    }
}

/// Green's function of the killed (or, with `t = None`, unkilled) simple
/// random walk on `Z^d`, memoised by displacement up to lattice symmetry.
#[derive(Clone, Debug)]
pub struct GreenKernel<F: Real = f64> {
    d: usize,
    t: Option<f64>,
    prefactor: f64,
    cutoff: f64,
    fine: Rule,
    coarse: Rule,
    cache: HashMap<[u32; MAX_DIM], (f64, f64)>,
    _scalar: PhantomData<F>,
}

impl<F: Real> GreenKernel<F> {
    /// Kernel of the walk killed at rate `1/(t+1)`; `t > 0`.
    pub fn killed(d: usize, t: F) -> Self {
        let t = t.as_f64();
        assert!(t > 0.0 && t.is_finite(), "killed kernel needs finite T > 0");
        Self::build(d, Some(t))
    }

    /// Kernel of the unkilled walk; needs transience (`d >= 3`).
    pub fn unkilled(d: usize) -> Self {
        assert!(d >= 3, "unkilled Green's function diverges for d < 3");
        Self::build(d, None)
    }

    fn build(d: usize, t: Option<f64>) -> Self {
        let (s, kappa) = match t {
            Some(t) => (t / (t + 1.0), d as f64 / t),
            None => (1.0, 0.0),
        };
        let prefactor = d as f64 / s;
        let h = if kappa > 1.0 { 1.0 / kappa } else { 1.0 };
        let cutoff_target = if kappa > 0.0 {
            let decay = 60.0 / kappa;
            if d >= 3 { decay.min(UNKILLED_CUTOFF) } else { decay }
        } else {
            UNKILLED_CUTOFF
        };
        let mut breaks = vec![0.0, h];
        while *breaks.last().unwrap() < cutoff_target {
            let next = 2.0 * breaks.last().unwrap();
            breaks.push(next);
        }
        let cutoff = *breaks.last().unwrap();
        let mut halved = Vec::with_capacity(2 * breaks.len());
        for w in breaks.windows(2) {
            halved.push(w[0]);
            halved.push(0.5 * (w[0] + w[1]));
        }
        halved.push(cutoff);
        let gl = gauss_legendre(GL_POINTS);
        GreenKernel {
            d,
            t,
            prefactor,
            cutoff,
            coarse: Rule::build(&breaks, &gl, prefactor, kappa),
            fine: Rule::build(&halved, &gl, prefactor, kappa),
            cache: HashMap::new(),
            _scalar: PhantomData,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Mean walk length, `None` for the unkilled kernel.
    pub fn mean_length(&self) -> Option<f64> {
        self.t
    }

    fn key(&self, disp: &Point) -> [u32; MAX_DIM] {
        assert_eq!(disp.dim(), self.d, "displacement dimension");
        let mut k = [0u32; MAX_DIM];
        for (slot, &c) in k.iter_mut().zip(disp.coords()) {
            *slot = c.unsigned_abs();
        }
        k[..self.d].sort_unstable();
        k
    }

    /// Analytic remainder past the last panel, from the large-`z` expansion
    /// of the Bessel product.
    fn tail(&self, key: &[u32]) -> f64 {
        if self.d < 3 {
            return 0.0;
        }
        let kappa = self.t.map_or(0.0, |t| self.d as f64 / t);
        let half_d = self.d as f64 / 2.0;
        let a: f64 = key.iter().map(|&n| (4.0 * (n as f64).powi(2) - 1.0) / 8.0).sum();
        let z = self.cutoff;
        let lead = z.powf(1.0 - half_d) / (half_d - 1.0);
        let corr = a * z.powf(-half_d) / half_d;
        self.prefactor * (2.0 * PI).powf(-half_d) * (lead - corr) * (-kappa * z).exp()
    }

    fn evaluate(&mut self, disp: &Point) -> (f64, f64) {
        let key = self.key(disp);
        if let Some(&v) = self.cache.get(&key) {
            return v;
        }
        let key_d = &key[..self.d];
        let order = *key_d.iter().max().unwrap() as usize;
        self.fine.ensure_order(order);
        self.coarse.ensure_order(order);
        let tail = self.tail(key_d);
        let fine = self.fine.integrate(key_d) + tail;
        let coarse = self.coarse.integrate(key_d) + tail;
        let v = (fine, (fine - coarse).abs() + 1e-15 * fine.abs());
        self.cache.insert(key, v);
        v
    }

    /// `G(disp)`, expected number of visits to `disp` by the walk started at 0.
    pub fn value(&mut self, disp: &Point) -> F {
        F::lit(self.evaluate(disp).0)
    }

    /// `G(disp)` with its quadrature error estimate.
    pub fn value_with_error(&mut self, disp: &Point) -> (F, F) {
        let (v, e) = self.evaluate(disp);
        (F::lit(v), F::lit(e))
    }

    /// Dense matrix `G(x_i - x_j)` and the largest quadrature error seen.
    pub fn matrix(&mut self, points: &[Point]) -> (Vec<F>, F) {
        let n = points.len();
        let mut m = vec![F::zero(); n * n];
        let mut worst = F::zero();
        for i in 0..n {
            for j in i..n {
                let (v, e) = self.value_with_error(&(points[i] - points[j]));
                m[i * n + j] = v;
                m[j * n + i] = v;
                worst = worst.max(e);
            }
        }
        (m, worst)
    }
}

/// Leading-order coefficient `a_d` of `G(x) ~ a_d |x|^{2-d}` for the unkilled walk.
pub fn green_asymptotic_constant(d: usize) -> f64 {
    assert!(d >= 3);
    let half = d as f64 / 2.0;
    d as f64 * statrs::function::gamma::gamma(half - 1.0) / (2.0 * PI.powf(half))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i32]) -> Point {
        Point::new(c).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(GL_POINTS);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        let quad: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((quad - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn bessel_normalisation_and_reference_values() {
        // e^{-1} I_0(1) = 0.4657596075936404, e^{-1} I_1(1) = 0.2079104153497085
        let v = scaled_bessel_i(1.0, 3);
        assert!((v[0] - 0.465_759_607_593_640_4).abs() < 1e-14);
        assert!((v[1] - 0.207_910_415_349_708_5).abs() < 1e-14);
        for &z in &[0.01, 3.0, 150.0, 5000.0] {
            let v = scaled_bessel_i(z, 5);
            let direct = scaled_bessel_i(z, 400);
            for n in 0..=5 {
                assert!((v[n] - direct[n]).abs() <= 1e-13 * direct[n].max(1e-300), "z={z} n={n}");
            }
        }
        // the Hankel branch agrees with the recurrence where both are valid
        let z = 2.5e4;
        let rec = {
            let start_order = 60; // forces the recurrence branch (8*(60^2+1) > z)
            scaled_bessel_i(z, start_order)
        };
        for n in 0..5 {
            assert!((rec[n] - hankel_scaled(z, n)).abs() < 1e-13 * rec[n]);
        }
    }

    #[test]
    fn watson_integral_and_neighbor_identity() {
        // G(0) for d = 3 is Watson's constant 1.516386059151978...
        let mut g = GreenKernel::<f64>::unkilled(3);
        let g0 = g.value(&p(&[0, 0, 0]));
        assert!((g0 - 1.516_386_059_151_978).abs() < 1e-9, "{g0}");
        // harmonicity at the origin: G(e_1) = G(0) - 1
        let g1 = g.value(&p(&[1, 0, 0]));
        assert!((g1 - (g0 - 1.0)).abs() < 1e-9);
        // symmetric displacements share a value
        assert_eq!(g.value(&p(&[-1, 0, 0])), g1);
        assert_eq!(g.value(&p(&[0, 2, -1])), g.value(&p(&[1, 0, 2])));
    }

    #[test]
    fn killed_values_match_reference_quadrature() {
        // independent reference: scipy quad of ∫ e^{-t(1-s)} Π ive(|x_j|, t s/3) dt
        let cases: [(&[i32], f64, f64); 4] = [
            (&[0, 0, 0], 2.0, 1.0 / 0.915_041_264_360_757_6),
            (&[1, 0, 0], 2.0, 0.139_270_335_035_531_35),
            (&[3, 2, 1], 2.0, 0.000_281_868_466_270_658_27),
            (&[0, 0, 0], 200.0, 1.0 / 0.694_941_718_111_112_3),
        ];
        for (x, t, want) in cases {
            let mut g = GreenKernel::<f64>::killed(3, t);
            let got = g.value(&p(x));
            assert!((got - want).abs() < 1e-9 * want.max(1.0), "{x:?} T={t}: {got} vs {want}");
        }
        let mut g = GreenKernel::<f64>::unkilled(3);
        assert!((g.value(&p(&[3, 2, 1])) - 0.126_945_971_807_417_73).abs() < 1e-9);
    }

    #[test]
    fn killed_kernel_in_one_dimension() {
        // d = 1: G_s(0) = 1/sqrt(1 - s^2)
        for &t in &[0.01, 1.0, 25.0] {
            let s: f64 = t / (t + 1.0);
            let mut g = GreenKernel::<f64>::killed(1, t);
            let got = g.value(&p(&[0]));
            assert!((got - 1.0 / (1.0 - s * s).sqrt()).abs() < 1e-10, "T={t}");
            // G_s(n) = r^n / sqrt(1 - s^2), r = (1 - sqrt(1 - s^2)) / s
            let r = (1.0 - (1.0 - s * s).sqrt()) / s;
            let g3 = g.value(&p(&[3]));
            assert!((g3 - r.powi(3) / (1.0 - s * s).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn tiny_mean_length_is_nearly_identity() {
        let mut g = GreenKernel::<f64>::killed(3, 1e-3);
        let g0 = g.value(&p(&[0, 0, 0]));
        // G = 1 + s^2 p_2(0) + ... with p_2(0) = 1/6
        let s: f64 = 1e-3 / 1.001;
        assert!((g0 - (1.0 + s * s / 6.0)).abs() < 1e-9);
    }

    #[test]
    fn single_precision_kernel() {
        let mut g = GreenKernel::<f32>::unkilled(3);
        assert!((g.value(&p(&[0, 0, 0])) - 1.516_386_f32).abs() < 1e-5);
    }

    #[test]
    fn asymptotic_constant_three_dimensions() {
        assert!((green_asymptotic_constant(3) - 3.0 / (2.0 * PI)).abs() < 1e-12);
    }
}
