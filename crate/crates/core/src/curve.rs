//! The spectral curve x³ = φ(z): zeros, sheets, homology classes, periods
//! and the intersection pairing.
//!
//! Sheet convention: x_{k+1} = ω^{-1} x_k with ω = e^{2πi/3}. On the straight
//! segment from z_i to z_{i+1} (direction β) sheet 1 is the branch
//! e^{imβ/3}·∛(φ e^{-imβ}) with the real cube root, continued from the
//! segment; the basis cycle γ^{ab}_{i,i+1} runs from z_i to z_{i+1} on sheet a
//! and back on sheet b, so Z(γ^{ab}) = ∫ (x_a − x_b) dz along the segment.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// ω = e^{2πi/3}.
pub fn omega() -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI / 3.0)
}

/// ω^{-k}, the factor relating sheet k+1 to sheet 1.
pub fn sheet_factor(k: usize) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * (k % 3) as f64 / 3.0)
}

/// Integer class in the basis (γ¹²_{1,2}, γ²³_{1,2}, γ¹²_{2,3}, γ²³_{2,3}, ...).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HomologyClass {
    pub coords: Vec<i64>,
}

impl HomologyClass {
    pub fn zero(m: usize) -> Self {
        HomologyClass { coords: vec![0; 2 * (m - 1)] }
    }

    /// γ^{ab}_{i,i+1} for sheets a ≠ b in 1..=3 and pair i in 1..m.
    pub fn gamma(m: usize, i: usize, a: usize, b: usize) -> Self {
        let mut c = Self::zero(m);
        let (k12, k23) = match (a, b) {
            (1, 2) => (1, 0),
            (2, 3) => (0, 1),
            (1, 3) => (1, 1),
            (2, 1) => (-1, 0),
            (3, 2) => (0, -1),
            (3, 1) => (-1, -1),
            _ => panic!("invalid sheet pair ({a},{b})"),
        };
        c.coords[2 * (i - 1)] = k12;
        c.coords[2 * (i - 1) + 1] = k23;
        c
    }

    pub fn m(&self) -> usize {
        self.coords.len() / 2 + 1
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn scale(&self, k: i64) -> Self {
        HomologyClass { coords: self.coords.iter().map(|c| c * k).collect() }
    }

    /// (k12, k23) on pair i.
    pub fn block(&self, i: usize) -> (i64, i64) {
        (self.coords[2 * (i - 1)], self.coords[2 * (i - 1) + 1])
    }
}

impl Add for &HomologyClass {
    type Output = HomologyClass;
    fn add(self, o: &HomologyClass) -> HomologyClass {
        HomologyClass { coords: self.coords.iter().zip(&o.coords).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &HomologyClass {
    type Output = HomologyClass;
    fn sub(self, o: &HomologyClass) -> HomologyClass {
        HomologyClass { coords: self.coords.iter().zip(&o.coords).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &HomologyClass {
    type Output = HomologyClass;
    fn neg(self) -> HomologyClass {
        self.scale(-1)
    }
}

impl fmt::Display for HomologyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = vec![];
        for i in 1..=self.coords.len() / 2 {
            let (a, b) = self.block(i);
            for (k, name) in [(a, "γ12"), (b, "γ23")] {
                if k != 0 {
                    terms.push(format!("{k:+}{name}_{i}"));
                }
            }
        }
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(""))
        }
    }
}

/// A polynomial cubic differential φ(z) dz³ with simple zeros.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CubicDifferential {
    /// Coefficients, highest degree first, as supplied.
    pub coeffs: Vec<Complex64>,
    /// Leading coefficient; φ = lead · (monic polynomial).
    pub lead: Complex64,
    /// Zeros in near-collinear order (sorted along the principal axis).
    pub zeros: Vec<Complex64>,
    /// Minimal separation below which zeros count as coincident.
    pub zero_tol: f64,
}

impl CubicDifferential {
    pub fn new(coeffs: &[Complex64]) -> Result<Self> {
        Self::with_tolerance(coeffs, 1e-6)
    }

    pub fn with_tolerance(coeffs: &[Complex64], zero_tol: f64) -> Result<Self> {
        let first = coeffs.iter().position(|c| c.norm() > 0.0).ok_or_else(|| Error::InvalidInput("zero polynomial".into()))?;
        let coeffs: Vec<Complex64> = coeffs[first..].to_vec();
        let m = coeffs.len() - 1;
        if m < 2 {
            return Err(Error::InvalidInput(format!("degree {m} < 2")));
        }
        let lead = coeffs[0];
        let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
        let mut zeros = polynomial_roots(&monic)?;
        for i in 0..m {
            for j in i + 1..m {
                if (zeros[i] - zeros[j]).norm() < zero_tol {
                    return Err(Error::DegenerateZeros(format!("zeros {} and {} closer than {zero_tol}", zeros[i], zeros[j])));
                }
            }
        }
        order_along_axis(&mut zeros);
        Ok(CubicDifferential { coeffs, lead, zeros, zero_tol })
    }

    /// φ = lead · ∏ (z − z_i).
    pub fn from_zeros(zeros: &[Complex64], lead: Complex64) -> Result<Self> {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for z in zeros {
            let mut n = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, ck) in c.iter().enumerate() {
                n[k] += ck;
                n[k + 1] -= ck * z;
            }
            c = n;
        }
        Self::new(&c.iter().map(|x| x * lead).collect::<Vec<_>>())
    }

    /// Real zeros, monic.
    pub fn real_zeros(zeros: &[f64]) -> Result<Self> {
        Self::from_zeros(&zeros.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>(), Complex64::new(1.0, 0.0))
    }

    pub fn m(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn deriv(&self, z: Complex64) -> Complex64 {
        let m = self.m();
        self.coeffs[..m].iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (k, c)| acc * z + c * (m - k) as f64)
    }

    /// Monic coefficients a_1..a_m of z^m + a_1 z^{m−1} + … + a_m.
    pub fn monic_coeffs(&self) -> Vec<Complex64> {
        self.coeffs[1..].iter().map(|c| c / self.lead).collect()
    }

    /// Principal cube root of the leading coefficient.
    pub fn lead_cbrt(&self) -> Complex64 {
        self.lead.powf(1.0 / 3.0)
    }

    pub fn max_abs_zero(&self) -> f64 {
        self.zeros.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_zero_gap(&self) -> f64 {
        let mut g = f64::INFINITY;
        for i in 0..self.zeros.len() {
            for j in i + 1..self.zeros.len() {
                g = g.min((self.zeros[i] - self.zeros[j]).norm());
            }
        }
        g
    }

    pub fn max_residual(&self) -> f64 {
        self.zeros.iter().map(|&z| self.eval(z).norm()).fold(0.0, f64::max)
    }

    /// Cut directions: straight down from each zero, tilted if another zero
    /// lies (almost) on that ray.
    pub fn sheet_system(&self) -> SheetSystem {
        let mut cuts = vec![];
        for (i, &zi) in self.zeros.iter().enumerate() {
            let mut ang = -PI / 2.0;
            'retry: for _ in 0..8 {
                for (j, &zj) in self.zeros.iter().enumerate() {
                    if i != j {
                        let d = zj - zi;
                        let rel = (d * Complex64::from_polar(1.0, -ang)).arg();
                        if rel.abs() < 0.05 {
                            ang += 0.1;
                            continue 'retry;
                        }
                    }
                }
                break;
            }
            cuts.push(ang);
        }
        SheetSystem { zeros: self.zeros.clone(), cut_angles: cuts, lead_cbrt: self.lead_cbrt() }
    }
}

fn polynomial_roots(monic: &[Complex64]) -> Result<Vec<Complex64>> {
    let m = monic.len() - 1;
    let mut comp = DMatrix::<Complex64>::zeros(m, m);
    for k in 0..m {
        comp[(0, k)] = -monic[k + 1];
        if k + 1 < m {
            comp[(k + 1, k)] = Complex64::new(1.0, 0.0);
        }
    }
    if monic[1..].iter().all(|c| c.norm() == 0.0) {
        return Ok(vec![Complex64::new(0.0, 0.0); m]);
    }
    let ev = comp
        .try_schur(1e-15, 100_000)
        .and_then(|s| s.eigenvalues())
        .ok_or_else(|| Error::InvalidInput("companion eigenvalues did not converge".into()))?;
    let p = |z: Complex64| monic.iter().fold(Complex64::new(0.0, 0.0), |a, c| a * z + c);
    let dp = |z: Complex64| monic[..m].iter().enumerate().fold(Complex64::new(0.0, 0.0), |a, (k, c)| a * z + c * (m - k) as f64);
    Ok(ev
        .iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..3 {
                let d = dp(z);
                if d.norm() == 0.0 {
                    break;
                }
                // Near a multiple root the step is rounding noise over a tiny
                // derivative; keep it only if it improves the residual.
                let step = p(z) / d;
                if p(z - step).norm() >= p(z).norm() {
                    break;
                }
                z -= step;
                if step.norm() < 1e-16 * (1.0 + z.norm()) {
                    break;
                }
            }
            z
        })
        .collect())
}

fn order_along_axis(z: &mut [Complex64]) {
    let n = z.len() as f64;
    let c: Complex64 = z.iter().sum::<Complex64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for w in z.iter() {
        let d = w - c;
        sxx += d.re * d.re;
        syy += d.im * d.im;
        sxy += d.re * d.im;
    }
    let mut psi = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    if psi <= -PI / 2.0 + 1e-12 {
        psi += PI;
    }
    let dir = Complex64::from_polar(1.0, -psi);
    z.sort_by(|a, b| ((a - c) * dir).re.total_cmp(&((b - c) * dir).re).then(a.im.total_cmp(&b.im)));
}

/// Global sheet labels: x_1 = ∛lead · ∏ (z − z_l)^{1/3} with the argument of
/// each factor measured from its cut, x_{k+1} = ω^{-1} x_k.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SheetSystem {
    pub zeros: Vec<Complex64>,
    /// Direction of the cut ray from each zero.
    pub cut_angles: Vec<f64>,
    pub lead_cbrt: Complex64,
}

impl SheetSystem {
    pub fn sheet_values(&self, z: Complex64) -> Result<[Complex64; 3]> {
        self.sheet_values_tol(z, 1e-12)
    }

    pub fn sheet_values_tol(&self, z: Complex64, tol: f64) -> Result<[Complex64; 3]> {
        let mut x = self.lead_cbrt;
        for (zl, &cut) in self.zeros.iter().zip(&self.cut_angles) {
            let d = z - zl;
            let r = d.norm();
            if r < tol {
                return Err(Error::OnCut(format!("{z} is a zero")));
            }
            // angle in (cut, cut + 2π)
            let mut a = d.arg() - cut;
            a = a.rem_euclid(2.0 * PI);
            if a < tol || 2.0 * PI - a < tol {
                return Err(Error::OnCut(format!("{z} lies on the cut of {zl}")));
            }
            x *= Complex64::from_polar(r.cbrt(), (a + cut) / 3.0);
        }
        Ok([x, x * sheet_factor(1), x * sheet_factor(2)])
    }

    /// Index (0-based) of the sheet whose value is closest to `x` at z.
    pub fn which_sheet(&self, z: Complex64, x: Complex64) -> Result<usize> {
        let v = self.sheet_values(z)?;
        Ok((0..3).min_by(|&a, &b| (v[a] - x).norm().total_cmp(&(v[b] - x).norm())).unwrap())
    }

    /// Follow sheet `start` (0-based) along a polyline by nearest-root
    /// matching; returns the global label at the end.
    pub fn continue_along(&self, path: &[Complex64], start: usize) -> Result<usize> {
        let mut x = self.sheet_values(path[0])?[start];
        for w in path.windows(2) {
            let steps = 64;
            for s in 1..=steps {
                let z = w[0] + (w[1] - w[0]) * (s as f64 / steps as f64);
                x = nearest_cube_root(self.phi_cube(z), x);
            }
        }
        self.which_sheet(*path.last().unwrap(), x)
    }

    /// x³ as given by the labelled product (= φ(z)).
    fn phi_cube(&self, z: Complex64) -> Complex64 {
        let mut p = self.lead_cbrt.powu(3);
        for zl in &self.zeros {
            p *= z - zl;
        }
        p
    }

    /// Permutation of sheets (0-based) after continuing once around a closed
    /// polyline.
    pub fn monodromy(&self, loop_path: &[Complex64]) -> Result<[usize; 3]> {
        let mut p = [0; 3];
        for (s, ps) in p.iter_mut().enumerate() {
            *ps = self.continue_along(loop_path, s)?;
        }
        Ok(p)
    }
}

/// The cube root of `w` nearest to `guess`.
pub fn nearest_cube_root(w: Complex64, guess: Complex64) -> Complex64 {
    let r = w.powf(1.0 / 3.0);
    (0..3).map(|k| r * sheet_factor(k)).min_by(|a, b| (a - guess).norm().total_cmp(&(b - guess).norm())).unwrap()
}

/// Circle of radius r around c, n vertices, closed.
pub fn circle(c: Complex64, r: f64, n: usize) -> Vec<Complex64> {
    (0..=n).map(|k| c + Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64)).collect()
}

/// Sheet 1 along the straight segment between two zeros: the continuous
/// branch e^{imβ/3}·R(z) with R a cube root of φ e^{−imβ}, R picked at the
/// midpoint as the root nearest the real axis (the real cube root when the
/// zeros are collinear).
#[derive(Clone, Debug)]
pub struct SegmentBranch {
    pub a: Complex64,
    pub b: Complex64,
    zeros: Vec<Complex64>,
    mid_args: Vec<f64>,
    scale: Complex64,
}

impl SegmentBranch {
    pub fn new(curve: &CubicDifferential, a: Complex64, b: Complex64) -> Self {
        let m = curve.m() as f64;
        let mid = (a + b) * 0.5;
        let beta = (b - a).arg();
        let rot = Complex64::from_polar(1.0, -m * beta);
        let w = curve.eval(mid) * rot;
        let r0 = w.powf(1.0 / 3.0);
        let r = (0..3)
            .map(|k| r0 * sheet_factor(k))
            .min_by(|p, q| (p.im.abs() / p.norm()).total_cmp(&(q.im.abs() / q.norm())))
            .unwrap();
        let x_mid = Complex64::from_polar(1.0, m * beta / 3.0) * r;
        let mid_args: Vec<f64> = curve.zeros.iter().map(|zl| (mid - zl).arg()).collect();
        let mut sb = SegmentBranch { a, b, zeros: curve.zeros.clone(), mid_args, scale: Complex64::new(1.0, 0.0) };
        let raw = sb.raw(mid);
        sb.scale = x_mid / raw;
        sb
    }

    fn raw(&self, z: Complex64) -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for (zl, &ma) in self.zeros.iter().zip(&self.mid_args) {
            let d = z - zl;
            let r = d.norm();
            if r == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let delta = (d.arg() - ma + PI).rem_euclid(2.0 * PI) - PI;
            p *= Complex64::from_polar(r.cbrt(), (ma + delta) / 3.0);
        }
        p
    }

    /// Sheet-1 value at a point of the segment.
    pub fn x1(&self, z: Complex64) -> Complex64 {
        self.scale * self.raw(z)
    }

    /// All three sheets in segment labels.
    pub fn sheets(&self, z: Complex64) -> [Complex64; 3] {
        let x = self.x1(z);
        [x, x * sheet_factor(1), x * sheet_factor(2)]
    }

    /// ∫ x_1 dz along the segment, Gauss–Kronrod after z − endpoint = d·s³.
    pub fn integral(&self, tol: f64) -> Result<(Complex64, f64)> {
        let d = self.b - self.a;
        let smax = 0.5f64.cbrt();
        let f1 = |s: f64| self.x1(self.a + d * s.powi(3)) * d * (3.0 * s * s);
        let f2 = |s: f64| self.x1(self.b - d * s.powi(3)) * d * (3.0 * s * s);
        let (v1, e1) = adaptive_gk(&f1, 0.0, smax, tol / 2.0, 40)?;
        let (v2, e2) = adaptive_gk(&f2, 0.0, smax, tol / 2.0, 40)?;
        Ok((v1 + v2, e1 + e2))
    }
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 7–15 Gauss–Kronrod panel: (Kronrod estimate, |K − G|).
pub fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for j in 0..7 {
        let x = h * GK_NODES[j];
        let s = f(c - x) + f(c + x);
        k += s * GK_WK[j];
        if j % 2 == 1 {
            g += s * GK_WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Adaptive bisection with GK15 panels; error is the summed |K − G|.
pub fn adaptive_gk<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64, max_depth: usize) -> Result<(Complex64, f64)> {
    let (v, e) = gk15(f, a, b);
    if e <= tol || max_depth == 0 {
        if e > tol && max_depth == 0 {
            return Err(Error::QuadratureFailure { estimate: e, tol });
        }
        return Ok((v, e));
    }
    let m = 0.5 * (a + b);
    let (v1, e1) = adaptive_gk(f, a, m, tol / 2.0, max_depth - 1)?;
    let (v2, e2) = adaptive_gk(f, m, b, tol / 2.0, max_depth - 1)?;
    Ok((v1 + v2, e1 + e2))
}

/// Periods of the basis cycles.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodTable {
    /// Z of the basis classes in basis order.
    pub z: Vec<Complex64>,
    pub error: Vec<f64>,
}

impl PeriodTable {
    pub fn compute(curve: &CubicDifferential, tol: f64) -> Result<Self> {
        let m = curve.m();
        let mut z = vec![];
        let mut error = vec![];
        for i in 1..m {
            let (v, e) = segment_integral(curve, i, tol)?;
            let c12 = sheet_factor(0) - sheet_factor(1);
            let c23 = sheet_factor(1) - sheet_factor(2);
            z.push(c12 * v);
            z.push(c23 * v);
            error.push(c12.norm() * e);
            error.push(c23.norm() * e);
        }
        Ok(PeriodTable { z, error })
    }

    pub fn period(&self, g: &HomologyClass) -> Complex64 {
        g.coords.iter().zip(&self.z).map(|(&k, z)| z * k as f64).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let m = self.z.len() / 2 + 1;
        let mut classes = serde_json::Map::new();
        for i in 1..m {
            for (k, (a, b)) in [(1usize, 2usize), (2, 3)].into_iter().enumerate() {
                let z = self.z[2 * (i - 1) + k];
                classes.insert(format!("gamma{a}{b}_{i}"), serde_json::json!([z.re, z.im]));
            }
        }
        serde_json::json!({"periods": classes, "error": self.error.iter().cloned().fold(0.0, f64::max)})
    }
}

/// ∫ x_1 dz along the segment z_i → z_{i+1} in segment labels.
pub fn segment_integral(curve: &CubicDifferential, i: usize, tol: f64) -> Result<(Complex64, f64)> {
    let (a, b) = (curve.zeros[i - 1], curve.zeros[i]);
    SegmentBranch::new(curve, a, b).integral(tol)
}

/// Independent oracle for the same integral: trapezoid rule on a cosine
/// grid, sheet values by nearest-root continuation from the midpoint.
pub fn segment_integral_trapezoid(curve: &CubicDifferential, i: usize, n: usize) -> Complex64 {
    let (a, b) = (curve.zeros[i - 1], curve.zeros[i]);
    let d = b - a;
    let start = SegmentBranch::new(curve, a, b).x1((a + b) * 0.5);
    let z_of = |s: f64| a + d * (0.5 * (1.0 - (PI * s).cos()));
    let dz_of = |s: f64| d * (0.5 * PI * (PI * s).sin());
    let h = 1.0 / n as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for half in [0, 1] {
        let mut x = start;
        let mut k = n / 2;
        loop {
            let s = k as f64 * h;
            let z = z_of(s);
            x = if k == 0 || k == n { Complex64::new(0.0, 0.0) } else { nearest_cube_root(curve.eval(z), x) };
            let w = if k == n / 2 { 0.5 } else if k == 0 || k == n { 0.5 } else { 1.0 };
            total += x * dz_of(s) * (w * h);
            if half == 0 {
                if k == 0 {
                    break;
                }
                k -= 1;
            } else {
                if k == n {
                    break;
                }
                k += 1;
            }
        }
    }
    total
}

/// Antisymmetric pairing on the basis, from local crossings at shared
/// branch points. At a zero z0 the function x is a local coordinate on Σ,
/// and the lift of a segment on sheet a leaves z0 along the ray arg x_a.
/// Sign fixed by ⟨γ²³_{i,i+1}, γ¹²_{i,i+1}⟩ = 1.
pub fn pairing_matrix(curve: &CubicDifferential) -> Vec<Vec<i64>> {
    let m = curve.m();
    let n = 2 * (m - 1);
    let branches: Vec<SegmentBranch> = (1..m).map(|i| SegmentBranch::new(curve, curve.zeros[i - 1], curve.zeros[i])).collect();
    // local ray direction (unit, in the x-plane) of the lift on sheet s of
    // segment i at its endpoint `end` (0 = start, 1 = end), rotated by eps
    let ray = |i: usize, s: usize, end: usize, eps: f64| -> Complex64 {
        let br = &branches[i - 1];
        let (z0, dir) = if end == 0 { (br.a, br.b - br.a) } else { (br.b, br.a - br.b) };
        let h = 1e-6 * dir.norm();
        let u = dir / dir.norm() * Complex64::from_polar(1.0, eps);
        let x = br.sheets(z0 + u * h)[s];
        x / x.norm()
    };
    // a basis cycle (i, a, b) near its endpoints: (incoming ray, outgoing ray)
    let ends = |i: usize, a: usize, b: usize, eps: f64| -> [(Complex64, (Complex64, Complex64)); 2] {
        let br = &branches[i - 1];
        // leaves z_i on sheet a, returns on sheet b; push-off: left of travel
        [(br.a, (ray(i, b, 0, eps), ray(i, a, 0, eps))), (br.b, (ray(i, a, 1, -eps), ray(i, b, 1, -eps)))]
    };
    let local = |c1: (Complex64, Complex64), c2: (Complex64, Complex64)| -> i64 {
        let ang = |u: Complex64| u.arg().rem_euclid(2.0 * PI);
        let (a_in, a_out) = (ang(c1.0), ang(c1.1));
        let between = |x: f64| {
            let lo = a_in.min(a_out);
            let hi = a_in.max(a_out);
            x > lo && x < hi
        };
        if between(ang(c2.0)) == between(ang(c2.1)) {
            return 0;
        }
        let t1 = c1.1 - c1.0;
        let t2 = c2.1 - c2.0;
        let cross = t1.re * t2.im - t1.im * t2.re;
        if cross > 0.0 {
            1
        } else {
            -1
        }
    };
    let basis: Vec<(usize, usize, usize)> = (1..m).flat_map(|i| [(i, 0, 1), (i, 1, 2)]).collect();
    let raw = |p: usize, q: usize| -> i64 {
        let (i, a, b) = basis[p];
        let (j, c, d) = basis[q];
        let e1 = ends(i, a, b, 0.0);
        let e2 = ends(j, c, d, if i == j { 1e-3 } else { 0.0 });
        let mut s = 0;
        for (z1, c1) in e1.iter() {
            for (z2, c2) in e2.iter() {
                if (z1 - z2).norm() < 1e-12 {
                    s += local(*c1, *c2);
                }
            }
        }
        s
    };
    let mut p = vec![vec![0i64; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                p[a][b] = raw(a, b);
            }
        }
    }
    // ⟨γ23, γ12⟩ on the first block sets the orientation
    let sign = p[1][0];
    for row in p.iter_mut() {
        for v in row.iter_mut() {
            *v *= sign;
        }
    }
    p
}

pub fn intersection(p: &[Vec<i64>], g: &HomologyClass, h: &HomologyClass) -> i64 {
    let mut s = 0;
    for (a, ga) in g.coords.iter().enumerate() {
        for (b, hb) in h.coords.iter().enumerate() {
            s += ga * p[a][b] * hb;
        }
    }
    s
}

/// Gauss–Manin update of the classes of a chart across a wall where vertex
/// k mutates: [X_k] ↦ −[X_k], [X_j] ↦ [X_j] + [ε b_kj]_+ [X_k].
pub fn gauss_manin(classes: &[HomologyClass], b_row_k: &[i64], k: usize, sign: i64) -> Vec<HomologyClass> {
    let gk = classes[k].clone();
    classes
        .iter()
        .enumerate()
        .map(|(j, g)| if j == k { -&gk } else { g + &gk.scale((sign * b_row_k[j]).max(0)) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::Chart;
    use crate::trees;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn double_roots_are_rejected() {
        for coeffs in [vec![1.0, -2.0, 1.0], vec![1.0, 0.0, -3.0, 2.0], vec![1.0, -1.0, -1.0, 1.0]] {
            let cs: Vec<Complex64> = coeffs.iter().map(|&x| c(x, 0.0)).collect();
            assert!(matches!(CubicDifferential::new(&cs), Err(Error::DegenerateZeros(_))), "{coeffs:?}");
        }
        assert!(CubicDifferential::new(&[c(1.0, 0.0), c(-2.0, 0.0), c(0.999, 0.0)]).is_ok());
    }

    fn spread(m: usize) -> CubicDifferential {
        let zs: Vec<f64> = (0..m).map(|k| k as f64 * 1.3 - 1.0 + 0.1 * (k * k) as f64).collect();
        CubicDifferential::real_zeros(&zs).unwrap()
    }

    #[test]
    fn normalization_and_zeros() {
        let p = CubicDifferential::new(&[c(-0.5, 0.0), c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert_eq!(p.lead, c(-0.5, 0.0));
        assert!((p.zeros[0] - c(-1.0, 0.0)).norm() < 1e-12 && (p.zeros[1] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(matches!(CubicDifferential::new(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]), Err(Error::DegenerateZeros(_))));
        let q = CubicDifferential::new(&[c(-0.5, 0.0), c(1.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(q.max_residual() < 1e-10);
    }

    #[test]
    fn vieta_product_and_monodromy() {
        let p = CubicDifferential::real_zeros(&[-1.0, 1.0]).unwrap();
        let s = p.sheet_system();
        let x = s.sheet_values(c(2.0, 0.0)).unwrap();
        assert!((x[0] * x[1] * x[2] - p.eval(c(2.0, 0.0))).norm() < 1e-12);
        let around = s.monodromy(&circle(c(1.0, 0.0), 0.5, 256)).unwrap();
        assert_eq!(around, [2, 0, 1]);
        let empty = s.monodromy(&circle(c(0.0, 3.0), 0.5, 256)).unwrap();
        assert_eq!(empty, [0, 1, 2]);
    }

    #[test]
    fn gk_matches_trapezoid_oracle() {
        for m in 2..=4 {
            let p = spread(m);
            for i in 1..m {
                let g = segment_integral(&p, i, 1e-12).unwrap().0;
                let t = segment_integral_trapezoid(&p, i, 20000);
                assert!((g - t).norm() < 1e-8 * g.norm(), "m={m} i={i}");
            }
        }
    }

    #[test]
    fn pairing_is_the_exchange_matrix_on_reference_classes() {
        for m in 2..=6 {
            let p = spread(m);
            let pm = pairing_matrix(&p);
            let ch = Chart::new(&trees::reference_collection(m).unwrap()).unwrap();
            let idx = ch.quiver.mutable_indices();
            for (a, &ia) in idx.iter().enumerate() {
                for (b, &ib) in idx.iter().enumerate() {
                    assert_eq!(ch.quiver.b[ia][ib], intersection(&pm, &ch.classes[a], &ch.classes[b]), "m={m}");
                }
            }
        }
    }

    #[test]
    fn old_classes_share_a_direction() {
        for m in 2..=6 {
            let p = spread(m);
            let pt = PeriodTable::compute(&p, 1e-12).unwrap();
            let cls = crate::invariants::reference_classes(m).unwrap();
            for i in 1..m {
                let case = trees::reference_case(m, i).unwrap();
                let z = pt.period(&cls[&case.old]);
                assert!((z.arg() - PI / 2.0).abs() < 1e-9, "m={m} i={i}");
            }
        }
    }
}
