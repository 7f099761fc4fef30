//! Subdominant solutions of ħ³y‴ + φy = 0 and their Wronskian frames.
//!
//! Solutions are integrated in the scaled variables u = (y, ħy′, ħ²y″),
//! which keeps the three components of comparable size when ħ is small.
//! Each column starts from the formal asymptotic series at an anchor far out
//! in its Stokes sector and is integrated inward, where it is the dominant
//! (hence stable) solution.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::CubicDifferential;
use crate::invariants::{det3, VectorAssignment};
use crate::{par, Error, Result};

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// Which form of the equation the problem is stated in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    /// ħ³y‴ + φy = 0.
    Standard,
    /// y‴ − Φy = 0 (ħ = 1).
    UnitHbar,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OdeConfig {
    /// Relative tolerance of the Runge–Kutta integrator.
    pub rtol: f64,
    /// Number of subleading series terms kept in the seed.
    pub order: usize,
    /// R_anchor = max(factor·max|z_i|, (scale·|ħ|)^{3/(m+3)}).
    pub anchor_factor: f64,
    pub anchor_scale: f64,
    pub max_steps: usize,
    /// Minimal distance of the integration path from a zero.
    pub clearance: f64,
    /// Consecutive Wronskians (unit columns) below this count as vanishing.
    /// They are legitimately of size e^{−c/|ħ|}, so the default is tiny.
    pub degenerate_tol: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig { rtol: 1e-12, order: 2, anchor_factor: 4.0, anchor_scale: 40.0, max_steps: 2_000_000, clearance: 1e-3, degenerate_tol: 1e-250 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OdeProblem {
    /// φ (standard form) or Φ (ħ = 1 form).
    pub curve: CubicDifferential,
    pub hbar: C,
    pub convention: Convention,
    /// Angle used for the sector labels; arg ħ, continued from the caller's ray.
    pub label_angle: f64,
    pub config: OdeConfig,
}

impl OdeProblem {
    pub fn standard(curve: &CubicDifferential, hbar: C) -> Result<Self> {
        if hbar.norm() == 0.0 || !hbar.is_finite() {
            return Err(Error::InvalidInput(format!("hbar = {hbar}")));
        }
        Ok(OdeProblem { curve: curve.clone(), hbar, convention: Convention::Standard, label_angle: hbar.arg(), config: OdeConfig::default() })
    }

    /// y‴ = Φy.
    pub fn unit_hbar(phi: &CubicDifferential) -> Self {
        OdeProblem { curve: phi.clone(), hbar: c(1.0), convention: Convention::UnitHbar, label_angle: 0.0, config: OdeConfig::default() }
    }

    /// Continue the label angle from a reference direction (|Δ| ≤ π).
    pub fn with_label_near(mut self, reference: f64) -> Self {
        let a = self.hbar.arg();
        let d = (a - reference + PI).rem_euclid(2.0 * PI) - PI;
        self.label_angle = reference + d;
        self
    }

    pub fn with_config(mut self, config: OdeConfig) -> Self {
        self.config = config;
        self
    }

    /// The same equation in the other form: Φ = −φ/ħ³.
    pub fn to_unit_hbar(&self) -> Result<Self> {
        match self.convention {
            Convention::UnitHbar => Ok(self.clone()),
            Convention::Standard => {
                let s = -1.0 / (self.hbar * self.hbar * self.hbar);
                let coeffs: Vec<C> = self.curve.coeffs.iter().map(|a| a * s).collect();
                let phi = CubicDifferential::with_tolerance(&coeffs, self.curve.zero_tol)?;
                let mut p = OdeProblem::unit_hbar(&phi);
                p.label_angle = self.label_angle - self.hbar.arg();
                p.config = self.config.clone();
                Ok(p)
            }
        }
    }

    pub fn m(&self) -> usize {
        self.curve.m()
    }

    pub fn n(&self) -> usize {
        self.m() + 3
    }

    /// ħ used for the scaled variables.
    fn scale(&self) -> C {
        match self.convention {
            Convention::Standard => self.hbar,
            Convention::UnitHbar => c(1.0),
        }
    }

    /// Q with scale³·y‴ = Q·y.
    fn q(&self, z: C) -> C {
        match self.convention {
            Convention::Standard => -self.curve.eval(z),
            Convention::UnitHbar => self.curve.eval(z),
        }
    }

    /// Leading coefficient of y‴/y = Q/scale³.
    fn lambda(&self) -> C {
        let s = self.scale();
        let l = self.curve.lead / (s * s * s);
        match self.convention {
            Convention::Standard => -l,
            Convention::UnitHbar => l,
        }
    }

    /// Effective angle: the equation looks like ħ_eff³y‴ + z^m y = 0 with arg ħ_eff = θ_eff.
    pub fn theta_eff(&self) -> f64 {
        let base = match self.convention {
            Convention::Standard => self.curve.lead_cbrt().arg(),
            Convention::UnitHbar => (-self.curve.lead).powf(1.0 / 3.0).arg(),
        };
        self.label_angle - base
    }

    /// Asymptotic directions l_1..l_{m+3}.
    pub fn directions(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let t = self.theta_eff();
        (0..self.n()).map(|k| 3.0 * t / n + 2.0 * PI * k as f64 / n).collect()
    }

    pub fn anchor_radius(&self) -> f64 {
        let m = self.m() as f64;
        // |λ|^{−1/3} plays the role of |ħ| (λ = leading coefficient of y‴/y).
        let h = self.lambda().norm().powf(-1.0 / 3.0);
        (self.config.anchor_factor * self.curve.max_abs_zero()).max((self.config.anchor_scale * h).powf(3.0 / (m + 3.0))).max(1.0)
    }
}

/// Formal series of the subdominant solution at infinity.
///
/// With w = z^{1/3} the logarithmic derivative is P = Σ p_n w^{m−n}; it solves
/// P³ + 3PP′ + P″ = Q/ħ³ order by order. Integrating gives
/// y = z^{r} (1 + Σ B_N w^{−N}) exp(Σ A_N w^{m+3−N}), A_0 = 3p_0/(m+3).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticSeed {
    pub m: usize,
    /// p_0, a cube root of the leading coefficient of Q/ħ³.
    pub rho: C,
    pub p: Vec<C>,
    pub r: C,
    /// A_{m,N}, N = 0..m+2 (A_0 is the leading exponent coefficient).
    pub a: Vec<C>,
    pub b: Vec<C>,
    pub c: Vec<C>,
    pub d: Vec<C>,
}

impl AsymptoticSeed {
    /// `monic` = (a_1..a_m) of the monic polynomial, `lambda` its leading factor.
    pub fn compute(monic: &[C], lambda: C, rho: C, order: usize) -> Self {
        let m = monic.len();
        let nmax = m + 3 + order;
        let mut p: Vec<C> = vec![c(0.0); nmax + 1];
        p[0] = rho;
        let mf = m as f64;
        for n in 1..=nmax {
            let mut rest = c(0.0);
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let l = n - i - j;
                    if i == n || j == n || l == n {
                        continue;
                    }
                    rest += p[i] * p[j] * p[l];
                }
            }
            if n >= m + 3 {
                let s = n - m - 3;
                for i in 0..=s {
                    let j = s - i;
                    rest += p[i] * p[j] * (mf - j as f64);
                }
            }
            if n >= 2 * m + 6 {
                let l = n - 2 * m - 6;
                let e = (mf - l as f64) / 3.0;
                rest += p[l] * e * (e - 1.0);
            }
            let target = if n % 3 == 0 && n / 3 <= m { lambda * monic[n / 3 - 1] } else { c(0.0) };
            p[n] = (target - rest) / (3.0 * rho * rho);
        }
        let a: Vec<C> = (0..m + 3).map(|n| p[n] * 3.0 / ((m + 3 - n) as f64)).collect();
        let r = p[m + 3];
        // exp(Σ_k −3p_{m+3+k}/k · w^{−k}) = 1 + Σ B_N w^{−N}.
        let g: Vec<C> = (0..=order).map(|k| if k == 0 { c(0.0) } else { -p[m + 3 + k] * 3.0 / k as f64 }).collect();
        let mut b = vec![c(0.0); order + 1];
        b[0] = c(1.0);
        for nn in 1..=order {
            let mut s = c(0.0);
            for k in 1..=nn {
                s += g[k] * b[nn - k] * k as f64;
            }
            b[nn] = s / nn as f64;
        }
        // y′/(ρ w^m z^r e^E) and y″/(ρ² w^{2m} z^r e^E).
        let pr: Vec<C> = (0..=order).map(|n| p[n] / rho).collect();
        let conv = |x: &[C], y: &[C]| -> Vec<C> {
            (0..=order).map(|nn| (0..=nn).map(|i| x[i] * y[nn - i]).sum()).collect()
        };
        let cc = conv(&pr, &b);
        let pp = conv(&pr, &pr);
        // P′/(ρ² w^{2m}) = Σ p_n (m−n)/(3ρ²) w^{−n−m−3}.
        let mut dp = vec![c(0.0); order + 1];
        for (nn, slot) in dp.iter_mut().enumerate() {
            if nn >= m + 3 {
                let k = nn - m - 3;
                *slot = p[k] * ((mf - k as f64) / 3.0) / (rho * rho);
            }
        }
        let sum: Vec<C> = pp.iter().zip(&dp).map(|(x, y)| x + y).collect();
        let d = conv(&sum, &b);
        AsymptoticSeed { m, rho, p, r, a, b, c: cc, d }
    }

    /// Truncated P and P′ at z (w a chosen cube root of z).
    fn log_derivative(&self, z: C, w: C, nmax: usize) -> (C, C) {
        let m = self.m as i64;
        let mut pv = c(0.0);
        let mut dpv = c(0.0);
        for n in 0..=nmax.min(self.p.len() - 1) {
            let e = m - n as i64;
            let t = self.p[n] * w.powi(e as i32);
            pv += t;
            dpv += t * (e as f64 / 3.0) / z;
        }
        (pv, dpv)
    }

    /// E(z) = Σ A_N w^{m+3−N} + r log z.
    pub fn exponent(&self, w: C) -> C {
        let m = self.m;
        let mut e: C = (0..m + 3).map(|n| self.a[n] * w.powi((m + 3 - n) as i32)).sum();
        e += self.r * (w.ln() * 3.0);
        e
    }
}

/// The three cube roots of λ, with the index of the one whose solution decays
/// fastest outward along arg z, and the decay margin to the next best.
fn pick_root(lambda: C, w: C, m: usize) -> (C, f64) {
    let base = lambda.powf(1.0 / 3.0);
    let wn = w.powi(m as i32 + 3);
    let mut v: Vec<(f64, C)> = (0..3).map(|j| {
        let r = base * C::from_polar(1.0, 2.0 * PI * j as f64 / 3.0);
        ((r * wn).re, r)
    }).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = (base * wn).norm();
    (v[0].1, (v[1].0 - v[0].0) / scale)
}

fn seed_for(problem: &OdeProblem, z: C, order: usize) -> Result<(AsymptoticSeed, C)> {
    let m = problem.m();
    let w = z.powf(1.0 / 3.0);
    let lambda = problem.lambda();
    let (rho, margin) = pick_root(lambda, w, m);
    if margin < 0.2 || (rho * w.powi(m as i32 + 3)).re >= 0.0 {
        return Err(Error::SectorViolation(format!("{z}")));
    }
    let monic = problem.curve.monic_coeffs();
    Ok((AsymptoticSeed::compute(&monic, lambda, rho, order), w))
}

/// (y, y′, y″) at z from the truncated series (N ≤ order in B, C, D).
pub fn asymptotic_seed(problem: &OdeProblem, z: C, order: usize) -> Result<[C; 3]> {
    if z.norm() < problem.curve.max_abs_zero() * 2.0 {
        return Err(Error::SectorViolation(format!("{z} is not in the asymptotic region")));
    }
    let (s, w) = seed_for(problem, z, order)?;
    let m = s.m as i32;
    let ey = s.exponent(w).exp();
    let sum = |v: &[C]| -> C { v.iter().enumerate().map(|(n, x)| x * w.powi(-(n as i32))).sum() };
    let y = ey * sum(&s.b);
    let y1 = ey * s.rho * w.powi(m) * sum(&s.c);
    let y2 = ey * s.rho * s.rho * w.powi(2 * m) * sum(&s.d);
    Ok([y, y1, y2])
}

/// Normalised scaled seed (1, ħP, ħ²(P² + P′)) at an anchor.
fn seed_direction(problem: &OdeProblem, z: C) -> Result<[C; 3]> {
    let order = problem.config.order;
    let (s, w) = seed_for(problem, z, order)?;
    let (pv, dpv) = s.log_derivative(z, w, s.m + 3 + order);
    let h = problem.scale();
    let u = [c(1.0), h * pv, h * h * (pv * pv + dpv)];
    Ok(normalize(u).0)
}

fn norm3(u: &[C; 3]) -> f64 {
    (u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr()).sqrt()
}

fn normalize(u: [C; 3]) -> ([C; 3], f64) {
    let n = norm3(&u);
    ([u[0] / n, u[1] / n, u[2] / n], n.ln())
}

// Dormand–Prince 5(4).
const A21: f64 = 1.0 / 5.0;
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B5: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E5: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const CS: [f64; 6] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0];

/// Integrate several columns together along the segment a → b.
/// Columns are renormalised after each step; their log norms accumulate.
fn integrate_segment(problem: &OdeProblem, cols: &mut [[C; 3]], logs: &mut [f64], a: C, b: C) -> Result<usize> {
    let h = problem.scale();
    let d = b - a;
    let rhs = |t: f64, u: &[C; 3]| -> [C; 3] {
        let z = a + d * t;
        let f = d / h;
        [f * u[1], f * u[2], f * problem.q(z) * u[0]]
    };
    let rtol = problem.config.rtol;
    let mut t = 0.0;
    let mut dt: f64 = 1e-3;
    let mut steps = 0;
    let k_len = cols.len();
    while t < 1.0 {
        if steps > problem.config.max_steps {
            return Err(Error::IntegratorFailure(format!("step limit reached at t = {t}")));
        }
        dt = dt.min(1.0 - t);
        let mut new_cols = Vec::with_capacity(k_len);
        let mut err_max: f64 = 0.0;
        for u in cols.iter() {
            let k1 = rhs(t, u);
            let stage = |ks: &[&[C; 3]], coef: &[f64]| -> [C; 3] {
                let mut v = *u;
                for (kk, &cf) in ks.iter().zip(coef) {
                    for i in 0..3 {
                        v[i] += kk[i] * (cf * dt);
                    }
                }
                v
            };
            let k2 = rhs(t + CS[1] * dt, &stage(&[&k1], &[A21]));
            let k3 = rhs(t + CS[2] * dt, &stage(&[&k1, &k2], &A3));
            let k4 = rhs(t + CS[3] * dt, &stage(&[&k1, &k2, &k3], &A4));
            let k5 = rhs(t + CS[4] * dt, &stage(&[&k1, &k2, &k3, &k4], &A5));
            let k6 = rhs(t + CS[5] * dt, &stage(&[&k1, &k2, &k3, &k4, &k5], &A6));
            let y5 = stage(&[&k1, &k2, &k3, &k4, &k5, &k6], &B5);
            let k7 = rhs(t + dt, &y5);
            let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
            let mut err = [c(0.0); 3];
            for (kk, &e) in ks.iter().zip(&E5) {
                for i in 0..3 {
                    err[i] += kk[i] * (e * dt);
                }
            }
            let scale = norm3(u).max(norm3(&y5));
            err_max = err_max.max(norm3(&err) / (rtol * scale));
            new_cols.push(y5);
        }
        if !err_max.is_finite() {
            return Err(Error::IntegratorFailure(format!("non-finite state at t = {t}")));
        }
        if err_max <= 1.0 {
            t += dt;
            for (k, u) in new_cols.into_iter().enumerate() {
                let (v, l) = normalize(u);
                cols[k] = v;
                logs[k] += l;
            }
            steps += 1;
        }
        let fac = if err_max == 0.0 { 5.0 } else { (0.9 * err_max.powf(-0.2)).clamp(0.2, 5.0) };
        dt *= fac;
        if dt < 1e-14 {
            return Err(Error::IntegratorFailure(format!("step size underflow at t = {t}")));
        }
    }
    Ok(steps)
}

/// Straight path unless it grazes a zero; then one detour vertex.
pub fn plan_path(curve: &CubicDifferential, a: C, b: C, clearance: f64) -> Vec<C> {
    let d = b - a;
    let len = d.norm();
    if len == 0.0 {
        return vec![a, b];
    }
    for &zz in &curve.zeros {
        let t = ((zz - a) * d.conj()).re / (len * len);
        if !(0.0..=1.0).contains(&t) {
            continue;
        }
        let foot = a + d * t;
        if (zz - foot).norm() < clearance && (zz - b).norm() > clearance {
            let normal = d * C::i() / len;
            let off = (0.5 * curve.min_zero_gap()).min(0.1).max(10.0 * clearance);
            return vec![a, zz + normal * off, b];
        }
    }
    vec![a, b]
}

/// Carry columns (unscaled triples) from one point to another.
/// Returns the columns at `to` (unit norm in scaled variables) and the
/// accumulated log growth per column.
pub fn transport(problem: &OdeProblem, cols: &[[C; 3]], from: C, to: C) -> Result<(Vec<[C; 3]>, Vec<f64>)> {
    let h = problem.scale();
    let mut scaled: Vec<[C; 3]> = vec![];
    let mut logs = vec![];
    for u in cols {
        let (v, l) = normalize([u[0], u[1] * h, u[2] * h * h]);
        scaled.push(v);
        logs.push(l);
    }
    let path = plan_path(&problem.curve, from, to, problem.config.clearance);
    for w in path.windows(2) {
        integrate_segment(problem, &mut scaled, &mut logs, w[0], w[1])?;
    }
    Ok((scaled.iter().map(|u| unscale(u, h)).collect(), logs))
}

fn unscale(u: &[C; 3], h: C) -> [C; 3] {
    [u[0], u[1] / h, u[2] / (h * h)]
}

/// The k-th subdominant solution (k = 1..m+3) at z₀, as an unscaled triple
/// normalised to unit sup norm, plus its log scale relative to the seed.
pub fn subdominant(problem: &OdeProblem, k: usize, z0: C) -> Result<([C; 3], f64)> {
    let n = problem.n();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("column {k} outside 1..{n}")));
    }
    let alpha = problem.directions()[k - 1];
    let anchor = C::from_polar(problem.anchor_radius(), alpha);
    let u = seed_direction(problem, anchor)?;
    let h = problem.scale();
    let mut cols = vec![u];
    let mut logs = vec![0.0];
    let path = plan_path(&problem.curve, anchor, z0, problem.config.clearance);
    for w in path.windows(2) {
        integrate_segment(problem, &mut cols, &mut logs, w[0], w[1]).map_err(|e| match e {
            Error::IntegratorFailure(s) => Error::IntegratorFailure(format!("column {k}: {s}")),
            e => e,
        })?;
    }
    let y = unscale(&cols[0], h);
    let sup = y.iter().map(|x| x.norm()).fold(0.0, f64::max);
    Ok(([y[0] / sup, y[1] / sup, y[2] / sup], logs[0] + sup.ln()))
}

/// M(φ, θ): the m+3 subdominant triples at a common matching point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Frame {
    pub z0: C,
    pub hbar: C,
    pub directions: Vec<f64>,
    pub columns: Vec<[C; 3]>,
    /// log of the factor removed from each column.
    pub log_scale: Vec<f64>,
}

impl Frame {
    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn assignment(&self) -> VectorAssignment<C> {
        VectorAssignment { x: self.columns.clone() }
    }

    /// W[y_i, y_j, y_k] (1-based).
    pub fn wronskian(&self, i: usize, j: usize, k: usize) -> C {
        det3(&self.columns[i - 1], &self.columns[j - 1], &self.columns[k - 1])
    }

    pub fn consecutive_wronskians(&self) -> Vec<C> {
        let n = self.n();
        (0..n).map(|i| self.wronskian(i + 1, (i + 1) % n + 1, (i + 2) % n + 1)).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let cols: Vec<Vec<[f64; 2]>> = self.columns.iter().map(|u| u.iter().map(|x| [x.re, x.im]).collect()).collect();
        let w: Vec<[f64; 2]> = self.consecutive_wronskians().iter().map(|x| [x.re, x.im]).collect();
        serde_json::json!({
            "z0": [self.z0.re, self.z0.im],
            "hbar": [self.hbar.re, self.hbar.im],
            "directions": self.directions,
            "columns": cols,
            "log_scale": self.log_scale,
            "consecutive_wronskians": w,
        })
    }
}

pub fn centroid(curve: &CubicDifferential) -> C {
    curve.zeros.iter().sum::<C>() / curve.m() as f64
}

pub fn frame(problem: &OdeProblem) -> Result<Frame> {
    frame_at(problem, centroid(&problem.curve))
}

pub fn frame_at(problem: &OdeProblem, z0: C) -> Result<Frame> {
    let n = problem.n();
    let cols = par::map_range(n, |k| subdominant(problem, k + 1, z0));
    let mut columns = vec![];
    let mut log_scale = vec![];
    for col in cols {
        let (u, l) = col?;
        columns.push(u);
        log_scale.push(l);
    }
    let f = Frame { z0, hbar: problem.hbar, directions: problem.directions(), columns, log_scale };
    for (i, w) in f.consecutive_wronskians().iter().enumerate() {
        if !(w.norm() >= problem.config.degenerate_tol) {
            return Err(Error::DegenerateFrame(format!("W[y_{}, y_{}, y_{}] = {:e}", i + 1, (i + 1) % n + 1, (i + 2) % n + 1, w.norm())));
        }
    }
    Ok(f)
}

/// Relative change of W[y_i, y_j, y_k] when the three columns are carried
/// from the frame point to z1.
pub fn wronskian_drift(problem: &OdeProblem, f: &Frame, idx: [usize; 3], z1: C) -> Result<f64> {
    let cols: Vec<[C; 3]> = idx.iter().map(|&i| f.columns[i - 1]).collect();
    let w0 = det3(&cols[0], &cols[1], &cols[2]);
    let (moved, logs) = transport(problem, &cols, f.z0, z1)?;
    let w1 = det3(&moved[0], &moved[1], &moved[2]) * (logs.iter().sum::<f64>()).exp();
    Ok((w1 - w0).norm() / w0.norm())
}

/// Columns for φ = z^m in the limit: y_k(0) ∝ (1, q_k, q_k²), q_k = ω₁^{−(k−1)}.
pub fn vandermonde_assignment(m: usize) -> VectorAssignment<C> {
    let n = m + 3;
    let x = (0..n)
        .map(|k| {
            let q = C::from_polar(1.0, -2.0 * PI * k as f64 / n as f64);
            [c(1.0), q, q * q]
        })
        .collect();
    VectorAssignment { x }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::Chart;
    use crate::trees::reference_collection;

    fn z2m1() -> CubicDifferential {
        CubicDifferential::real_zeros(&[-1.0, 1.0]).unwrap()
    }

    #[test]
    fn series_for_pure_power_has_no_corrections() {
        for m in 2..6 {
            let s = AsymptoticSeed::compute(&vec![c(0.0); m], c(1.0), c(1.0), 3);
            assert!((s.a[0] - 3.0 / (m as f64 + 3.0)).norm() < 1e-15);
            for n in 1..m + 3 {
                assert!(s.a[n].norm() < 1e-15, "A_{m},{n} = {}", s.a[n]);
            }
            assert!((s.r + m as f64 / 3.0).norm() < 1e-15);
        }
    }

    #[test]
    fn seed_satisfies_the_equation_asymptotically() {
        // Residual of y‴ − Φy relative to Φy shrinks with the order.
        let phi = CubicDifferential::new(&[c(1.0), c(0.3), c(-1.0), c(0.5)]).unwrap();
        let p = OdeProblem::unit_hbar(&phi);
        let z = C::from_polar(30.0, -3.0 * PI / 6.0);
        let eps = 1e-4;
        let mut prev = f64::INFINITY;
        for order in [0usize, 3, 6, 9] {
            let f = |z: C| asymptotic_seed(&p, z, order).unwrap();
            let d2 = |z: C| f(z)[2];
            let ypp = (d2(z + eps) - d2(z - eps)) / (2.0 * eps);
            let y = f(z)[0];
            let res = (ypp - phi.eval(z) * y).norm() / (phi.eval(z) * y).norm();
            assert!(res < prev, "order {order}: {res}");
            prev = res;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn conventions_agree() {
        let hbar = C::from_polar(0.5, 0.7);
        let p = OdeProblem::standard(&z2m1(), hbar).unwrap();
        let q = p.to_unit_hbar().unwrap();
        assert_eq!(p.directions().len(), q.directions().len());
        for (a, b) in p.directions().iter().zip(q.directions()) {
            assert!((a - b).abs() < 1e-12);
        }
        let z0 = c(0.2);
        for k in 1..=5 {
            let (u, _) = subdominant(&p, k, z0).unwrap();
            let (v, _) = subdominant(&q, k, z0).unwrap();
            let r = u[0] / v[0];
            for i in 0..3 {
                assert!((u[i] - v[i] * r).norm() < 1e-9, "column {k}");
            }
        }
    }

    #[test]
    fn wronskian_is_constant() {
        let hbar = C::from_polar(0.3, 1.0);
        let p = OdeProblem::standard(&z2m1(), hbar).unwrap();
        let f = frame(&p).unwrap();
        for z1 in [C::new(0.7, 0.4), C::new(-1.5, -0.2), C::new(0.0, 2.0), c(1.0)] {
            let d = wronskian_drift(&p, &f, [1, 3, 4], z1).unwrap();
            assert!(d < 1e-8, "drift {d} at {z1}");
        }
    }

    #[test]
    fn pure_power_frame_is_vandermonde() {
        for m in 2..5 {
            let mut co = vec![c(0.0); m + 1];
            co[0] = c(1.0);
            let phi = CubicDifferential::with_tolerance(&co, 0.0).unwrap_or_else(|_| panic!());
            let p = OdeProblem::standard(&phi, C::from_polar(1.0, 0.4)).unwrap();
            let f = frame_at(&p, c(0.0)).unwrap();
            let v = vandermonde_assignment(m);
            let chart = Chart::new(&reference_collection(m).unwrap()).unwrap();
            for e in &chart.exprs {
                let a = e.eval(&f.assignment()).unwrap();
                let b = e.eval(&v).unwrap();
                let (a, b) = (*a.finite().unwrap(), *b.finite().unwrap());
                assert!((a - b).norm() < 1e-8 * b.norm(), "m={m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rotation_relates_the_columns() {
        // y_k(z, a) = y_1(s z, {s^j a_j}) with s = ω₁^{−(k−1)}.
        let a = [c(0.3), C::new(-1.0, 0.2)];
        let m = 2;
        let n = 5.0;
        let phi = CubicDifferential::new(&[c(1.0), a[0], a[1]]).unwrap();
        let hbar = C::from_polar(0.6, 0.3);
        let p = OdeProblem::standard(&phi, hbar).unwrap();
        let z0 = C::new(0.1, 0.2);
        for k in 1..=m + 3 {
            let s = C::from_polar(1.0, -2.0 * PI * (k - 1) as f64 / n);
            let rot = CubicDifferential::new(&[c(1.0), a[0] * s, a[1] * s * s]).unwrap();
            let pr = OdeProblem::standard(&rot, hbar).unwrap();
            let (u1, _) = subdominant(&pr, 1, s * z0).unwrap();
            let expect = [u1[0], u1[1] * s, u1[2] * s * s];
            let (uk, _) = subdominant(&p, k, z0).unwrap();
            let r = uk[0] / expect[0];
            for i in 0..3 {
                assert!((uk[i] - expect[i] * r).norm() < 1e-8, "k={k}");
            }
        }
    }

    #[test]
    fn coordinates_do_not_depend_on_matching_point_or_anchor() {
        let hbar = C::from_polar(0.4, 1.1);
        let p = OdeProblem::standard(&z2m1(), hbar).unwrap();
        let chart = Chart::new(&reference_collection(2).unwrap()).unwrap();
        let f0 = frame(&p).unwrap();
        let f1 = frame_at(&p, C::new(0.1, 0.0)).unwrap();
        let mut cfg = OdeConfig::default();
        cfg.anchor_factor *= 2.0;
        cfg.anchor_scale *= 2f64.powf(5.0 / 3.0);
        let f2 = frame(&p.clone().with_config(cfg)).unwrap();
        for e in &chart.exprs {
            let x0 = *e.eval(&f0.assignment()).unwrap().finite().unwrap();
            let x1 = *e.eval(&f1.assignment()).unwrap().finite().unwrap();
            let x2 = *e.eval(&f2.assignment()).unwrap().finite().unwrap();
            assert!((x0 - x1).norm() < 1e-8 * x0.norm());
            assert!((x0 - x2).norm() < 1e-7 * x0.norm());
        }
    }
}
