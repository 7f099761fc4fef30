//! BPS structures, KS automorphisms and the solution Y_r = X_r ∘ F_r of the
//! Riemann–Hilbert problem, with numerical checks of its three properties.
//!
//! Torus points are stored as values on the homology basis and extended as
//! plain characters, y_{γ+δ} = y_γ y_δ. In these conventions the spectral
//! coordinates obey the wall-crossing formula with factors (1 + y_γ) and
//! constant term ξ = 1.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::curve::{self, CubicDifferential, HomologyClass, PeriodTable};
use crate::invariants::{Chart, Value, VectorAssignment};
use crate::ode::{self, OdeConfig, OdeProblem};
use crate::trees::ChamberState;
use crate::{par, Error, Result};

type C = Complex64;

const TWO_PI: f64 = 2.0 * PI;

/// Angle reduced to [0, 2π).
pub fn wrap(a: f64) -> f64 {
    a.rem_euclid(TWO_PI)
}

/// Signed angular difference a − b in (−π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TWO_PI);
    if d > PI {
        d - TWO_PI
    } else {
        d
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ActiveClass {
    pub class: HomologyClass,
    pub z: C,
    pub omega: i64,
    /// arg Z in [0, 2π).
    pub angle: f64,
    /// Zero pair (i, i+1) the class lives on, if any.
    pub pair: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct BpsStructure {
    pub curve: CubicDifferential,
    pub periods: PeriodTable,
    pub pairing: Vec<Vec<i64>>,
    pub active: Vec<ActiveClass>,
}

impl BpsStructure {
    /// Closed form for zeros almost on a line: Ω = 1 on ±γ¹², ±γ²³, ±γ¹³ of
    /// every adjacent pair, 0 elsewhere.
    pub fn almost_on_a_line(curve: &CubicDifferential) -> Result<Self> {
        let periods = PeriodTable::compute(curve, 1e-12)?;
        let m = curve.m();
        let mut classes = vec![];
        for i in 1..m {
            for (a, b) in [(1, 2), (2, 3), (1, 3)] {
                let g = HomologyClass::gamma(m, i, a, b);
                classes.push((-&g, Some(i)));
                classes.push((g, Some(i)));
            }
        }
        Ok(Self::from_classes(curve, periods, classes))
    }

    pub fn from_classes(curve: &CubicDifferential, periods: PeriodTable, classes: Vec<(HomologyClass, Option<usize>)>) -> Self {
        let active = classes
            .into_iter()
            .map(|(class, pair)| {
                let z = periods.period(&class);
                ActiveClass { class, z, omega: 1, angle: wrap(z.arg()), pair }
            })
            .collect();
        BpsStructure { curve: curve.clone(), pairing: curve::pairing_matrix(curve), periods, active }
    }

    pub fn m(&self) -> usize {
        self.curve.m()
    }

    pub fn omega(&self, g: &HomologyClass) -> i64 {
        self.active.iter().filter(|a| &a.class == g).map(|a| a.omega).sum()
    }

    pub fn pairing(&self, g: &HomologyClass, h: &HomologyClass) -> i64 {
        curve::intersection(&self.pairing, g, h)
    }

    /// Active rays in increasing angle, classes grouped by ray.
    pub fn rays(&self, tol: f64) -> Vec<(f64, Vec<usize>)> {
        let mut idx: Vec<usize> = (0..self.active.len()).collect();
        idx.sort_by(|&a, &b| self.active[a].angle.total_cmp(&self.active[b].angle));
        let mut out: Vec<(f64, Vec<usize>)> = vec![];
        for i in idx {
            let a = self.active[i].angle;
            match out.last_mut() {
                Some((b, v)) if angle_diff(a, *b).abs() < tol => v.push(i),
                _ => out.push((a, vec![i])),
            }
        }
        if out.len() > 1 {
            let last = out.len() - 1;
            if angle_diff(out[0].0, out[last].0).abs() < tol {
                let (_, v) = out.pop().unwrap_or_default();
                out[0].1.extend(v);
            }
        }
        out
    }

    pub fn ray_classes(&self, angle: f64, tol: f64) -> Vec<&ActiveClass> {
        self.active.iter().filter(|a| angle_diff(a.angle, angle).abs() < tol).collect()
    }

    /// Angular distance from `angle` to the nearest active ray not through it.
    pub fn gap(&self, angle: f64, tol: f64) -> f64 {
        self.active
            .iter()
            .map(|a| angle_diff(a.angle, angle).abs())
            .filter(|&d| d >= tol)
            .fold(PI, f64::min)
    }

    /// arg Z of the class of the mutated tree of pair i in the reference
    /// chamber, ε_i γ²³_i with ε_i = (−1)^{m−i+1}.
    fn old_angle(&self, i: usize) -> f64 {
        let m = self.m();
        let sign = if (m - i + 1) % 2 == 0 { 1 } else { -1 };
        let g = HomologyClass::gamma(m, i, 2, 3).scale(sign);
        self.periods.period(&g).arg()
    }

    /// A phase inside the reference chamber: every pair's next wall
    /// counterclockwise is the wall of its old class.
    pub fn reference_angle(&self) -> Result<f64> {
        let m = self.m();
        let psi1 = self.old_angle(1);
        let psis: Vec<f64> = (1..m).map(|i| psi1 + angle_diff(self.old_angle(i), psi1)).collect();
        let hi = psis.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = psis.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi - PI / 3.0 >= lo {
            return Err(Error::UnsupportedChamber("zeros are not almost on a line".into()));
        }
        Ok(0.5 * (hi - PI / 3.0 + lo))
    }

    /// Crossing counts at phase θ (θ is a real number, not reduced mod 2π).
    pub fn chamber_at(&self, theta: f64) -> Result<ChamberState> {
        let m = self.m();
        let t0 = self.reference_angle()?;
        let mut states = vec![];
        for i in 1..m {
            // Representative of the old wall in (t0, t0 + π/3].
            let psi = t0 + angle_diff(self.old_angle(i), t0).rem_euclid(PI / 3.0);
            let x = (theta - psi) / (PI / 3.0);
            if (x - x.round()).abs() < 1e-9 {
                return Err(Error::InvalidInput(format!("theta = {theta} lies on an active ray")));
            }
            states.push(x.floor() as i64 + 1);
        }
        Ok(ChamberState { m, states })
    }

    pub fn chart_at(&self, theta: f64) -> Result<Chart> {
        Chart::new(&self.chamber_at(theta)?.collection()?)
    }

    pub fn basis(&self) -> Vec<HomologyClass> {
        let m = self.m();
        (0..2 * (m - 1))
            .map(|k| {
                let mut g = HomologyClass::zero(m);
                g.coords[k] = 1;
                g
            })
            .collect()
    }
}

/// g(γ) = ∏_i (−1)^{k_i h_i + k_i + h_i}.
pub fn quadratic_refinement(g: &HomologyClass) -> i64 {
    let mut e = 0;
    for i in 1..g.m() {
        let (k, h) = g.block(i);
        e += k * h + k + h;
    }
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Pairs of basis-sized classes (entries in −1..1) violating
/// g(γ+δ) = (−1)^{⟨γ,δ⟩} g(γ) g(δ).
pub fn cocycle_defects(p: &[Vec<i64>], m: usize) -> Vec<(HomologyClass, HomologyClass)> {
    let small = small_classes(m, 1);
    let mut out = vec![];
    for a in &small {
        for b in &small {
            let s = if curve::intersection(p, a, b).rem_euclid(2) == 0 { 1 } else { -1 };
            if quadratic_refinement(&(a + b)) != s * quadratic_refinement(a) * quadratic_refinement(b) {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// Every class with coordinates in −bound..=bound.
pub fn small_classes(m: usize, bound: i64) -> Vec<HomologyClass> {
    let d = 2 * (m - 1);
    let mut out = vec![HomologyClass::zero(m)];
    for k in 0..d {
        let mut next = vec![];
        for g in &out {
            for v in -bound..=bound {
                let mut h = g.clone();
                h.coords[k] = v;
                next.push(h);
            }
        }
        out = next;
    }
    out
}

/// A point of the torus, as values on the homology basis.
#[derive(Clone, Debug, Serialize)]
pub struct TorusPoint {
    pub values: Vec<Value<C>>,
}

impl TorusPoint {
    pub fn get(&self, g: &HomologyClass) -> Value<C> {
        let mut v = C::new(1.0, 0.0);
        for (k, &e) in g.coords.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let x = match &self.values[k] {
                Value::Finite(x) => *x,
                Value::Pole => return Value::Pole,
            };
            if x.norm() == 0.0 && e < 0 {
                return Value::Pole;
            }
            v *= x.powi(e as i32);
        }
        Value::Finite(v)
    }

    /// Value in the twisted convention, g(γ)·y_γ.
    pub fn twisted(&self, g: &HomologyClass) -> Value<C> {
        match self.get(g) {
            Value::Finite(v) => Value::Finite(v * quadratic_refinement(g) as f64),
            Value::Pole => Value::Pole,
        }
    }
}

/// 𝕊(ℓ)*(y_β) = y_β ∏_{Z(γ) ∈ ℓ} (1 + y_γ)^{Ω(γ)⟨γ,β⟩}.
pub fn ks_transform(bps: &BpsStructure, angle: f64, point: &TorusPoint, tol: f64) -> TorusPoint {
    let on_ray = bps.ray_classes(angle, tol);
    let values = bps
        .basis()
        .iter()
        .zip(&point.values)
        .map(|(beta, yb)| {
            let mut v = match yb {
                Value::Finite(v) => *v,
                Value::Pole => return Value::Pole,
            };
            for a in &on_ray {
                let e = a.omega * bps.pairing(&a.class, beta);
                if e == 0 {
                    continue;
                }
                let f = match point.get(&a.class) {
                    Value::Finite(y) => C::new(1.0, 0.0) + y,
                    Value::Pole => return Value::Pole,
                };
                if f.norm() == 0.0 && e < 0 {
                    return Value::Pole;
                }
                v *= f.powi(e as i32);
            }
            Value::Finite(v)
        })
        .collect();
    TorusPoint { values }
}

/// Compose 𝕊(ℓ) over the active rays met going counterclockwise from `from` to `to`.
pub fn ks_sector(bps: &BpsStructure, from: f64, to: f64, point: &TorusPoint, tol: f64) -> TorusPoint {
    let mut rays: Vec<f64> = bps
        .rays(tol)
        .into_iter()
        .map(|(a, _)| from + (a - from).rem_euclid(TWO_PI))
        .filter(|&a| a > from && a < to)
        .collect();
    rays.sort_by(f64::total_cmp);
    let mut p = point.clone();
    for a in rays {
        p = ks_transform(bps, a, &p, tol);
    }
    p
}

/// The frame F(ħ), labels continued from the ray at θ0.
pub fn frame_for(bps: &BpsStructure, theta0: f64, hbar: C, config: &OdeConfig) -> Result<ode::Frame> {
    if angle_diff(hbar.arg(), theta0).abs() >= PI / 2.0 {
        return Err(Error::InvalidInput(format!("hbar = {hbar} is outside the half-plane of the ray {theta0}")));
    }
    let p = OdeProblem::standard(&bps.curve, hbar)?.with_label_near(theta0).with_config(config.clone());
    ode::frame(&p)
}

fn torus_from(chart: &Chart, basis: &[HomologyClass], asg: &VectorAssignment<C>) -> Result<TorusPoint> {
    let values = basis.iter().map(|b| chart.x_value(b, asg)).collect::<Result<Vec<_>>>()?;
    Ok(TorusPoint { values })
}

/// Y_r(ħ) for the ray r = e^{iθ0}ℝ₊.
pub fn y_point(bps: &BpsStructure, theta0: f64, hbar: C, config: &OdeConfig) -> Result<TorusPoint> {
    let chart = bps.chart_at(theta0)?;
    let f = frame_for(bps, theta0, hbar, config)?;
    torus_from(&chart, &bps.basis(), &f.assignment())
}

/// Y_r at several ħ, evaluated in parallel, sharing one chart.
pub fn y_points(bps: &BpsStructure, theta0: f64, hbars: &[C], config: &OdeConfig) -> Result<Vec<TorusPoint>> {
    let chart = bps.chart_at(theta0)?;
    let basis = bps.basis();
    par::map(hbars, |&h| {
        let f = frame_for(bps, theta0, h, config)?;
        torus_from(&chart, &basis, &f.assignment())
    })
    .into_iter()
    .collect()
}

fn finite(v: &Value<C>) -> Result<C> {
    match v {
        Value::Finite(x) => Ok(*x),
        Value::Pole => Err(Error::InvalidInput("pole in a sampled coordinate".into())),
    }
}

fn rel(a: C, b: C) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Rh1Report {
    pub wall: f64,
    pub delta: f64,
    pub classes: Vec<HomologyClass>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Compare Y at the clockwise deformation r₊ with 𝕊(ℓ) applied to Y at the
/// counterclockwise deformation r₋, over the given ħ moduli on the ray.
pub fn check_rh1(bps: &BpsStructure, wall: f64, moduli: &[f64], config: &OdeConfig) -> Result<Rh1Report> {
    let tol = 1e-9;
    let delta = 0.5 * bps.gap(wall, tol);
    let hbars: Vec<C> = moduli.iter().map(|&s| C::from_polar(s, wall)).collect();
    let plus = y_points(bps, wall - delta, &hbars, config)?;
    let minus = y_points(bps, wall + delta, &hbars, config)?;
    let mut residuals = vec![];
    for (p, q) in plus.iter().zip(&minus) {
        let s = ks_transform(bps, wall, q, tol);
        let mut r: f64 = 0.0;
        for (a, b) in p.values.iter().zip(&s.values) {
            r = r.max(rel(finite(a)?, finite(b)?));
        }
        residuals.push(r);
    }
    Ok(Rh1Report {
        wall,
        delta,
        classes: bps.ray_classes(wall, tol).iter().map(|a| a.class.clone()).collect(),
        max_residual: residuals.iter().cloned().fold(0.0, f64::max),
        residuals,
    })
}

/// Least-squares fit log v = a + b/ħ with the phase unwrapped along the samples.
pub fn fit_slope(samples: &[(C, C)]) -> Result<(C, C)> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let mut logs = vec![];
    let mut prev: Option<f64> = None;
    for &(_, v) in samples {
        if v.norm() == 0.0 || !v.is_finite() {
            return Err(Error::InvalidInput(format!("cannot take the log of {v}")));
        }
        let mut ph = v.arg();
        if let Some(p) = prev {
            ph = p + angle_diff(ph, p);
        }
        prev = Some(ph);
        logs.push(C::new(v.norm().ln(), ph));
    }
    // Normal equations for the complex linear model.
    let n = samples.len() as f64;
    let us: Vec<C> = samples.iter().map(|(h, _)| C::new(1.0, 0.0) / h).collect();
    let su: C = us.iter().sum();
    let suu: f64 = us.iter().map(|u| u.norm_sqr()).sum();
    let sl: C = logs.iter().sum();
    let sul: C = us.iter().zip(&logs).map(|(u, l)| u.conj() * l).sum();
    // [n, su; su*, suu] [a; b] = [sl; sul]
    let det = n * suu - su.norm_sqr();
    let a = (sl * suu - su * sul) / det;
    let b = (sul * n - su.conj() * sl) / det;
    Ok((a, b))
}

#[derive(Clone, Debug, Serialize)]
pub struct Rh2Report {
    pub class: HomologyClass,
    pub expected: [f64; 2],
    pub slope: [f64; 2],
    pub slope_error: f64,
    pub moduli: Vec<f64>,
    pub d: Vec<f64>,
    pub monotone: bool,
}

/// ħ grid uniform in 1/|ħ| on [lo, hi], largest |ħ| first.
pub fn small_hbar_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| 1.0 / (1.0 / hi + (1.0 / lo - 1.0 / hi) * k as f64 / (n - 1) as f64)).collect()
}

pub fn check_rh2(bps: &BpsStructure, theta0: f64, classes: &[HomologyClass], moduli: &[f64], config: &OdeConfig) -> Result<Vec<Rh2Report>> {
    let hbars: Vec<C> = moduli.iter().map(|&s| C::from_polar(s, theta0)).collect();
    let pts = y_points(bps, theta0, &hbars, config)?;
    classes
        .iter()
        .map(|g| {
            let z = bps.periods.period(g);
            let samples = hbars.iter().zip(&pts).map(|(&h, p)| Ok((h, finite(&p.get(g))?))).collect::<Result<Vec<_>>>()?;
            let d: Vec<f64> = samples.iter().map(|&(h, v)| ((z / h).exp() * v - 1.0).norm()).collect();
            let monotone = d.windows(2).all(|w| w[1] <= w[0]);
            let (slope_error, slope) = if g.is_zero() {
                (0.0, C::new(0.0, 0.0))
            } else {
                let (_, b) = fit_slope(&samples)?;
                ((b + z).norm() / z.norm(), b)
            };
            Ok(Rh2Report {
                class: g.clone(),
                expected: [-z.re, -z.im],
                slope: [slope.re, slope.im],
                slope_error,
                moduli: moduli.to_vec(),
                d,
                monotone,
            })
        })
        .collect()
}

/// Class whose period matches the fitted −slope of a coordinate stream.
/// Candidates are the classes with coordinates in −bound..=bound.
pub fn identify_class(bps: &BpsStructure, samples: &[(C, C)], tol: f64, bound: i64) -> Result<HomologyClass> {
    let (_, b) = fit_slope(samples)?;
    let target = -b;
    let scale = target.norm().max(1.0);
    let hits: Vec<HomologyClass> = small_classes(bps.m(), bound)
        .into_iter()
        .filter(|g| (bps.periods.period(g) - target).norm() < tol * scale)
        .collect();
    match hits.len() {
        1 => Ok(hits[0].clone()),
        0 => Err(Error::OracleMismatch(format!("fitted period {target} matches no class"))),
        _ => Err(Error::Ambiguous(format!("fitted period {target} matches {} classes", hits.len()))),
    }
}

/// Monic coefficients of φ(t − a_1/m), i.e. with the subleading term removed.
pub fn centered_coeffs(curve: &CubicDifferential) -> Vec<C> {
    let a = curve.monic_coeffs();
    let m = a.len();
    let shift = -a[0] / m as f64;
    // Taylor shift by repeated synthetic division.
    let mut p: Vec<C> = std::iter::once(C::new(1.0, 0.0)).chain(a).collect();
    for k in 0..m {
        for j in 1..=m - k {
            let prev = p[j - 1];
            p[j] += prev * shift;
        }
    }
    p[1..].to_vec()
}

/// Leading exponents e of the large-ħ expansion Y = L + Σ c_e |ħ|^{−e}.
/// Rescaling z by ħ^{3/(m+3)} turns a_j into a_j ħ^{−3j/(m+3)}, and a_1 drops
/// out by translation, so e runs over sums of 3j/(m+3) with a_j ≠ 0, j ≥ 2.
pub fn correction_exponents(curve: &CubicDifferential, count: usize) -> Vec<f64> {
    let c = centered_coeffs(curve);
    let m = c.len();
    let scale = c.iter().map(|x| x.norm()).fold(1.0, f64::max);
    let gens: Vec<f64> = (2..=m).filter(|&j| c[j - 1].norm() > 1e-12 * scale).map(|j| 3.0 * j as f64 / (m as f64 + 3.0)).collect();
    // Sums of at most `count` generators contain the `count` smallest elements.
    let mut sums = vec![0.0];
    for _ in 0..count {
        let next: Vec<f64> = sums.iter().flat_map(|s| gens.iter().map(move |g| s + g)).collect();
        sums.extend(next);
        sums.sort_by(f64::total_cmp);
        sums.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    }
    sums.into_iter().filter(|&e| e > 0.0).take(count).collect()
}

/// Fit v_j = L + Σ_e c_e x_j^{−e} (x_j = |ħ_j|) and return L.
pub fn extrapolate(moduli: &[f64], vals: &[C], exponents: &[f64]) -> C {
    let k = exponents.len().min(moduli.len().saturating_sub(1));
    let a = DMatrix::<C>::from_fn(moduli.len(), k + 1, |i, j| if j == 0 { C::new(1.0, 0.0) } else { C::new(moduli[i].powf(-exponents[j - 1]), 0.0) });
    let b = DVector::<C>::from_column_slice(vals);
    match a.clone().svd(true, true).solve(&b, 1e-14) {
        Ok(x) => x[0],
        Err(_) => vals[vals.len() - 1],
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Rh3Report {
    pub class: HomologyClass,
    pub moduli: Vec<f64>,
    pub values: Vec<[f64; 2]>,
    pub differences: Vec<f64>,
    pub cauchy: bool,
    pub limit: [f64; 2],
    pub pure_power_value: [f64; 2],
    pub limit_error: f64,
    /// Limit computed with the columns shifted by one index.
    pub shifted_limit: [f64; 2],
    pub shift_error: f64,
    pub max_log_abs: f64,
}

pub fn check_rh3(bps: &BpsStructure, theta0: f64, classes: &[HomologyClass], moduli: &[f64], config: &OdeConfig) -> Result<Vec<Rh3Report>> {
    let m = bps.m();
    let chart = bps.chart_at(theta0)?;
    let frames = par::map(moduli, |&s| frame_for(bps, theta0, C::from_polar(s, theta0), config))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let exps = correction_exponents(&bps.curve, moduli.len().saturating_sub(1));
    let v0 = ode::vandermonde_assignment(m);
    classes
        .iter()
        .map(|g| {
            let vals = frames.iter().map(|f| finite(&chart.x_value(g, &f.assignment())?)).collect::<Result<Vec<_>>>()?;
            let shifted = frames.iter().map(|f| finite(&chart.x_value(g, &f.assignment().shift(1))?)).collect::<Result<Vec<_>>>()?;
            let differences: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
            let cauchy = differences.windows(2).all(|w| w[1] < w[0]);
            let limit = extrapolate(moduli, &vals, &exps);
            let shifted_limit = extrapolate(moduli, &shifted, &exps);
            let pure = finite(&chart.x_value(g, &v0)?)?;
            Ok(Rh3Report {
                class: g.clone(),
                moduli: moduli.to_vec(),
                values: vals.iter().map(|v| [v.re, v.im]).collect(),
                differences,
                cauchy,
                limit: [limit.re, limit.im],
                pure_power_value: [pure.re, pure.im],
                limit_error: (limit - pure).norm() / pure.norm().max(1.0),
                shifted_limit: [shifted_limit.re, shifted_limit.im],
                shift_error: (shifted_limit - limit).norm() / limit.norm().max(1.0),
                max_log_abs: vals.iter().map(|v| v.norm().ln().abs()).fold(0.0, f64::max),
            })
        })
        .collect()
}
