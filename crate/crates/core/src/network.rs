//! WKB spectral networks W(φ, θ): critical trajectories grown from the zeros,
//! junction children, marked points at infinity and wall detection.
//!
//! A trajectory of type (i, j) solves (x_i − x_j) dz/dt = e^{iθ}. It is
//! integrated in arclength, dz/ds = e^{iθ} conj(Δ)/|Δ| with Δ = x_i − x_j and
//! dt/ds = |Δ|, carrying the two sheet values along by nearest-root
//! continuation. Step sizes are capped by a fraction of the distance to the
//! nearest zero, which keeps that continuation unambiguous.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::curve::{nearest_cube_root, CubicDifferential, HomologyClass, PeriodTable, SheetSystem};
use crate::rh::{angle_diff, small_classes, wrap};
use crate::{par, Error, Result};

type C = Complex64;

/// Ordered sheet pair, 1-based.
pub type Label = (usize, usize);

const TWO_PI: f64 = 2.0 * PI;

// Dormand–Prince 5(4).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Debug, Serialize)]
pub struct TraceOptions {
    /// Escape radius; defaults to 10·max|z_i| + 5.
    pub r_max: Option<f64>,
    /// Absolute local error per step.
    pub atol: f64,
    pub max_generation: usize,
    /// Critical trajectories start this far from their zero.
    pub start_offset: f64,
    /// Hit radius around zeros; defaults to 1e−3 · min gap.
    pub hit_eps: Option<f64>,
    /// Allowed deviation of a junction angle from 2π/3.
    pub angle_tol: f64,
    pub max_steps: usize,
    /// Continue escaping trajectories to 8·R_max and extrapolate their
    /// limiting angle.
    pub extrapolate_escape: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            r_max: None,
            atol: 1e-9,
            max_generation: 6,
            start_offset: 1e-3,
            hit_eps: None,
            angle_tol: 0.05,
            max_steps: 200_000,
            extrapolate_escape: true,
        }
    }
}

impl TraceOptions {
    /// Settings for θ sweeps: trajectories pass arbitrarily close to zeros
    /// and escape angles are not needed.
    pub fn scan() -> Self {
        TraceOptions { hit_eps: Some(0.0), extrapolate_escape: false, ..Default::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Ray {
    pub zero: usize,
    /// Position n in α_n = ¾θ + c + nπ/4; stable under continuous changes of θ.
    pub index: usize,
    /// Direction in [0, 2π).
    pub angle: f64,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Origin {
    Zero(usize),
    Junction(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Terminal {
    Escaped { angle: f64, marked: Option<usize> },
    HitZero { zero: usize, t: f64 },
    Truncated,
}

/// Closest approach of a trajectory to a zero.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Approach {
    pub dist: f64,
    /// Signed distance: positive if the zero lies to the left.
    pub signed: f64,
    /// Accumulated t (including parents) at the closest point.
    pub t: f64,
    /// False if the closest point is an end of the polyline.
    pub interior: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    /// Identity that persists across nearby θ: "z{zero}r{n}" or "(A*B)".
    pub key: String,
    pub label: Label,
    /// Global label at the last sample (differs from `label` after cut crossings).
    pub end_label: Option<Label>,
    pub origin: Origin,
    pub generation: usize,
    pub terminal: Terminal,
    pub points: Vec<C>,
    /// Parameter t at each sample, counted from the originating zeros.
    pub t: Vec<f64>,
    /// Zeros the web leading to this trajectory starts from.
    pub zeros: Vec<usize>,
    #[serde(skip)]
    pub values: Vec<[C; 2]>,
    #[serde(skip)]
    pub approach: Vec<Approach>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Junction {
    pub point: C,
    pub incoming: [Label; 2],
    pub outgoing: Label,
    pub parents: [usize; 2],
    pub child: usize,
    /// Angle between the incoming tangents.
    pub angle: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkedPoint {
    pub angle: f64,
    pub label: Label,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticDirection {
    /// r in l_1..l_{m+3}.
    pub index: usize,
    pub angle: f64,
    pub fading_sheet: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Network {
    pub theta: f64,
    pub m: usize,
    pub zeros: Vec<C>,
    pub r_max: f64,
    pub trajectories: Vec<Trajectory>,
    pub junctions: Vec<Junction>,
    pub marked_points: Vec<MarkedPoint>,
    pub asymptotic_directions: Vec<AsymptoticDirection>,
    pub bps_free: bool,
    /// Trajectory pairs that cross more than once.
    pub multiple_crossings: usize,
}

fn default_r_max(curve: &CubicDifferential) -> f64 {
    10.0 * curve.max_abs_zero() + 5.0
}

fn label_at(sys: &SheetSystem, z: C, v: &[C; 2]) -> Option<Label> {
    let i = sys.which_sheet(z, v[0]).ok()?;
    let j = sys.which_sheet(z, v[1]).ok()?;
    Some((i + 1, j + 1))
}

/// The direction set ¾((2n+1)π/2 + θ − kπ/3 − arg φ′(z∗)/3), k = 3, 4, 5,
/// deduplicated mod 2π.
pub fn formula_directions(curve: &CubicDifferential, theta: f64, zero: usize) -> Vec<f64> {
    let arg = curve.deriv(curve.zeros[zero]).arg();
    let mut out: Vec<f64> = vec![];
    for k in 3..=5 {
        for n in 0..4 {
            let a = wrap(0.75 * ((2 * n + 1) as f64 * PI / 2.0 + theta - k as f64 * PI / 3.0 - arg / 3.0));
            if !out.iter().any(|&b| angle_diff(a, b).abs() < 1e-9) {
                out.push(a);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// The eight critical directions at each zero with their sheet labels.
///
/// The label of a direction α is the ordered pair with
/// (x_i − x_j) e^{iα} e^{−iθ} > 0 just off the zero.
pub fn initial_rays(curve: &CubicDifferential, theta: f64) -> Result<Vec<Vec<Ray>>> {
    let sys = curve.sheet_system();
    let probe = 1e-3 * curve.min_zero_gap().min(1.0);
    let rot = C::from_polar(1.0, -theta);
    let mut out = vec![];
    for (a, &za) in curve.zeros.iter().enumerate() {
        let dirs = formula_directions(curve, theta, a);
        if dirs.len() != 8 {
            return Err(Error::InvalidInput(format!("zero {a} has {} critical directions, expected 8", dirs.len())));
        }
        let c0 = 0.75 * (PI / 2.0 - 4.0 * PI / 3.0 - curve.deriv(za).arg() / 3.0);
        let mut rays = vec![];
        for n in 0..8 {
            let alpha = 0.75 * theta + c0 + n as f64 * PI / 4.0;
            let e = C::from_polar(1.0, alpha);
            let v = sys.sheet_values(za + e * probe)?;
            let mut best = (f64::INFINITY, (0, 0));
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        let s = ((v[i] - v[j]) * e * rot).arg().abs();
                        if s < best.0 {
                            best = (s, (i + 1, j + 1));
                        }
                    }
                }
            }
            if best.0 > 0.2 {
                return Err(Error::InvalidInput(format!("no sheet pair fits direction {alpha} at zero {a}")));
            }
            rays.push(Ray { zero: a, index: n, angle: wrap(alpha), label: best.1 });
        }
        out.push(rays);
    }
    Ok(out)
}

/// The 2m+6 directions at infinity where trajectories accumulate, sorted by
/// angle in [0, 2π), labelled with the global sheet labels on the circle of
/// radius R_max.
pub fn marked_points(curve: &CubicDifferential, theta: f64) -> Result<Vec<MarkedPoint>> {
    marked_points_at(curve, theta, default_r_max(curve))
}

pub fn marked_points_at(curve: &CubicDifferential, theta: f64, radius: f64) -> Result<Vec<MarkedPoint>> {
    let m = curve.m();
    let sys = curve.sheet_system();
    let q = (m + 3) as f64 / 3.0;
    let lead = curve.lead_cbrt();
    let mut out: Vec<MarkedPoint> = vec![];
    // Leading behaviour x_k ≈ lead^{1/3} ω^{−(k−1)} z^{m/3}; along an (i, j)
    // direction (x_i − x_j) z e^{−iθ} > 0.
    for n in 0..(2 * m + 6) {
        let alpha = wrap((theta - lead.arg() - PI / 6.0 + n as f64 * PI / 3.0) / q);
        let z = C::from_polar(radius, alpha);
        let v = sys.sheet_values(z)?;
        let mut best = (f64::INFINITY, (0, 0));
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let s = ((v[i] - v[j]) * z * C::from_polar(1.0, -theta)).arg().abs();
                    if s < best.0 {
                        best = (s, (i + 1, j + 1));
                    }
                }
            }
        }
        if best.0 > 0.3 {
            return Err(Error::LabelClash(format!("no sheet pair fits the direction {alpha}")));
        }
        out.push(MarkedPoint { angle: alpha, label: best.1 });
    }
    out.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    for w in 0..out.len() {
        let next = &out[(w + 1) % out.len()];
        if angle_diff(next.angle, out[w].angle).abs() < 1e-9 {
            return Err(Error::LabelClash(format!("marked points at {} coincide", next.angle)));
        }
    }
    Ok(out)
}

/// Index of the sheet with the largest Re(e^{−iθ} x z) at the direction α;
/// along that direction the solution on this sheet decays fastest.
fn fading_sheet(curve: &CubicDifferential, theta: f64, alpha: f64, radius: f64) -> Result<usize> {
    let sys = curve.sheet_system();
    let z = C::from_polar(radius, alpha);
    let v = sys.sheet_values(z)?;
    let w: Vec<f64> = v.iter().map(|x| (x * z * C::from_polar(1.0, -theta)).re).collect();
    Ok((0..3).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap() + 1)
}

/// True if consecutive labels share alternately their first and their second
/// sheet, starting with either.
pub fn labels_alternate(labels: &[Label]) -> bool {
    let share = |a: &Label, b: &Label| -> Option<usize> {
        if a == b {
            None
        } else if a.0 == b.0 && a.1 != b.1 {
            Some(0)
        } else if a.1 == b.1 && a.0 != b.0 {
            Some(1)
        } else {
            None
        }
    };
    let kinds: Vec<Option<usize>> = labels.windows(2).map(|w| share(&w[0], &w[1])).collect();
    kinds.iter().all(|k| k.is_some()) && kinds.windows(2).all(|w| w[0] != w[1])
}

/// The m+3 directions l_r = 3(θ − arg ∛lead)/(m+3) + 2π(r−1)/(m+3), each the
/// midpoint of a final arc (an arc whose ends share their first sheet), with
/// its fading sheet.
pub fn asymptotic_directions(curve: &CubicDifferential, theta: f64, marked: &[MarkedPoint]) -> Result<Vec<AsymptoticDirection>> {
    asymptotic_directions_at(curve, theta, marked, default_r_max(curve))
}

fn asymptotic_directions_at(
    curve: &CubicDifferential,
    theta: f64,
    marked: &[MarkedPoint],
    radius: f64,
) -> Result<Vec<AsymptoticDirection>> {
    let m = curve.m();
    let n = marked.len();
    let base = 3.0 * (theta - curve.lead_cbrt().arg()) / (m + 3) as f64;
    let mut out = vec![];
    for r in 0..m + 3 {
        let angle = wrap(base + TWO_PI * r as f64 / (m + 3) as f64);
        // The arc containing l_r.
        let k = (0..n)
            .find(|&k| {
                let a = marked[k].angle;
                let b = marked[(k + 1) % n].angle;
                let span = wrap(b - a);
                let off = wrap(angle - a);
                off > 0.0 && off < span
            })
            .ok_or_else(|| Error::LabelClash(format!("l_{} lies on a marked point", r + 1)))?;
        let a = marked[k].angle;
        let mid = wrap(a + wrap(marked[(k + 1) % n].angle - a) / 2.0);
        if angle_diff(mid, angle).abs() > 1e-9 {
            return Err(Error::LabelClash(format!("l_{} is not an arc midpoint", r + 1)));
        }
        out.push(AsymptoticDirection { index: r + 1, angle, fading_sheet: fading_sheet(curve, theta, angle, radius)? });
    }
    Ok(out)
}

struct Tracer<'a> {
    curve: &'a CubicDifferential,
    sys: SheetSystem,
    rot: C,
    r_max: f64,
    hit_eps: f64,
    h_max: f64,
    opts: &'a TraceOptions,
}

struct Start {
    z: C,
    values: [C; 2],
    t0: f64,
    exclude: Option<usize>,
}

struct Path {
    points: Vec<C>,
    t: Vec<f64>,
    values: Vec<[C; 2]>,
    terminal: Terminal,
    approach: Vec<Approach>,
}

impl<'a> Tracer<'a> {
    fn new(curve: &'a CubicDifferential, theta: f64, opts: &'a TraceOptions) -> Self {
        let r_max = opts.r_max.unwrap_or_else(|| default_r_max(curve));
        Tracer {
            curve,
            sys: curve.sheet_system(),
            rot: C::from_polar(1.0, theta),
            r_max,
            hit_eps: opts.hit_eps.unwrap_or(1e-3 * curve.min_zero_gap()),
            h_max: r_max / 100.0,
            opts,
        }
    }

    fn dist_to_zeros(&self, z: C) -> f64 {
        self.curve.zeros.iter().map(|w| (z - w).norm_sqr()).fold(f64::INFINITY, f64::min).sqrt()
    }

    /// (dz/ds, dt/ds) with sheet values continued from `hint`.
    fn rhs(&self, z: C, hint: &[C; 2]) -> (C, f64) {
        let phi = self.curve.eval(z);
        let d = track_root(phi, hint[0]) - track_root(phi, hint[1]);
        let n = d.norm();
        (self.rot * d.conj() / n, n)
    }

    fn integrate(&self, start: &Start) -> Path {
        let zeros = &self.curve.zeros;
        let mut z = start.z;
        let mut t = start.t0;
        let mut vals = start.values;
        let mut points = vec![z];
        let mut ts = vec![t];
        let mut values = vec![vals];
        let mut approach: Vec<Approach> =
            zeros.iter().map(|&w| Approach { dist: (w - z).norm(), signed: 0.0, t, interior: false }).collect();
        let mut h = (0.1 * self.dist_to_zeros(z)).min(self.h_max);
        let mut length = 0.0;
        let max_length = 50.0 * self.r_max;
        let mut escape_radii: Vec<(f64, f64)> = vec![];
        let mut r_stop = self.r_max;
        let mut terminal = Terminal::Truncated;
        let mut steps = 0;
        while steps < self.opts.max_steps && length < max_length {
            steps += 1;
            let cap = (0.3 * self.dist_to_zeros(z)).min(if escape_radii.is_empty() { self.h_max } else { 0.05 * z.norm() });
            h = h.min(cap).max(1e-300);
            let mut kz = [C::new(0.0, 0.0); 7];
            let mut kt = [0.0; 7];
            let (a, b) = self.rhs(z, &vals);
            kz[0] = a;
            kt[0] = b;
            for s in 0..6 {
                let mut dz = C::new(0.0, 0.0);
                for (r, c) in A[s].iter().enumerate().take(s + 1) {
                    dz += kz[r] * *c;
                }
                let (a, b) = self.rhs(z + dz * h, &vals);
                kz[s + 1] = a;
                kt[s + 1] = b;
            }
            let mut err = C::new(0.0, 0.0);
            for r in 0..7 {
                err += kz[r] * E[r];
            }
            let err = err.norm() * h;
            if err > self.opts.atol && h > 1e-12 * (1.0 + z.norm()) {
                h *= (0.9 * (self.opts.atol / err).powf(0.2)).max(0.2);
                continue;
            }
            let mut dz = C::new(0.0, 0.0);
            let mut dt = 0.0;
            for r in 0..6 {
                dz += kz[r] * A[5][r];
                dt += kt[r] * A[5][r];
            }
            let z_new = z + dz * h;
            let t_new = t + dt * h;
            let phi = self.curve.eval(z_new);
            let v_new = [track_root(phi, vals[0]), track_root(phi, vals[1])];
            length += h;
            h *= if err > 0.0 { (0.9 * (self.opts.atol / err).powf(0.2)).clamp(0.2, 5.0) } else { 5.0 };
            if escape_radii.is_empty() {
                // Closest approach to every zero along the new segment.
                let seg = z_new - z;
                let l2 = seg.norm_sqr();
                for (b, &w) in zeros.iter().enumerate() {
                    let u = if l2 > 0.0 { (((w - z) * seg.conj()).re / l2).clamp(0.0, 1.0) } else { 0.0 };
                    let q = z + seg * u;
                    let d2 = (w - q).norm_sqr();
                    if d2 < approach[b].dist * approach[b].dist {
                        let d = d2.sqrt();
                        let tangent = seg / seg.norm();
                        approach[b] = Approach {
                            dist: d,
                            signed: (tangent.conj() * (w - q)).im,
                            t: t + u * (t_new - t),
                            interior: u > 0.0 || points.len() > 1,
                        };
                    }
                }
                points.push(z_new);
                ts.push(t_new);
                values.push(v_new);
            }
            z = z_new;
            t = t_new;
            vals = v_new;
            if escape_radii.is_empty() {
                let hit = zeros
                    .iter()
                    .enumerate()
                    .find(|&(b, &w)| Some(b) != start.exclude && (z - w).norm() < self.hit_eps);
                if let Some((b, _)) = hit {
                    terminal = Terminal::HitZero { zero: b, t };
                    break;
                }
            }
            if z.norm() > r_stop {
                escape_radii.push((z.norm(), z.arg()));
                if !self.opts.extrapolate_escape || escape_radii.len() == 4 {
                    break;
                }
                r_stop *= 2.0;
            }
        }
        if !escape_radii.is_empty() {
            terminal = Terminal::Escaped { angle: limiting_angle(&escape_radii), marked: None };
        }
        // The final point ends the polyline, so it is not an interior approach.
        let last = points.len() - 1;
        for (b, a) in approach.iter_mut().enumerate() {
            if (points[last] - zeros[b]).norm() <= a.dist + 1e-15 && !matches!(terminal, Terminal::HitZero { .. }) {
                a.interior = false;
            }
        }
        Path { points, t: ts, values, terminal, approach }
    }
}

/// Cube root of `phi` continued from a nearby `hint` by Newton's method,
/// falling back to the explicit nearest root.
fn track_root(phi: C, hint: C) -> C {
    let mut x = hint;
    if x.norm() > 0.0 {
        for _ in 0..6 {
            let x2 = x * x;
            let dx = (x2 * x - phi) / (3.0 * x2);
            x -= dx;
            if dx.norm_sqr() <= 1e-28 * x.norm_sqr() {
                if (x - hint).norm_sqr() < 0.25 * hint.norm_sqr() {
                    return x;
                }
                break;
            }
        }
    }
    nearest_cube_root(phi, hint)
}

/// α(R) = α∞ + c₁/R + c₂/R², fitted through the recorded crossings.
fn limiting_angle(samples: &[(f64, f64)]) -> f64 {
    let a0 = samples[0].1;
    let ys: Vec<f64> = samples.iter().map(|&(_, a)| a0 + angle_diff(a, a0)).collect();
    if samples.len() < 3 {
        return wrap(*ys.last().unwrap());
    }
    let k = samples.len().min(3);
    let mut mat = nalgebra::DMatrix::<f64>::zeros(samples.len(), k);
    for (r, &(rad, _)) in samples.iter().enumerate() {
        for c in 0..k {
            mat[(r, c)] = rad.powi(-(c as i32));
        }
    }
    let rhs = nalgebra::DVector::from_vec(ys.clone());
    match mat.svd(true, true).solve(&rhs, 1e-14) {
        Ok(sol) => wrap(sol[0]),
        Err(_) => wrap(*ys.last().unwrap()),
    }
}

struct Crossing {
    a: usize,
    b: usize,
    sa: usize,
    sb: usize,
    ua: f64,
    ub: f64,
    point: C,
}

fn segment_intersection(p0: C, p1: C, q0: C, q1: C) -> Option<(f64, f64)> {
    let r = p1 - p0;
    let s = q1 - q0;
    let den = r.re * s.im - r.im * s.re;
    if den.abs() < 1e-300 {
        return None;
    }
    let w = q0 - p0;
    let u = (w.re * s.im - w.im * s.re) / den;
    let v = (w.re * r.im - w.im * r.re) / den;
    ((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v)).then_some((u, v))
}

/// All crossings between trajectory pairs with at least one member in
/// `fresh`, via a uniform spatial hash over segments.
fn crossings(trajs: &[Trajectory], fresh: &BTreeSet<usize>, r_max: f64) -> Vec<Crossing> {
    let mut lens: Vec<f64> =
        trajs.iter().flat_map(|tr| tr.points.windows(2).map(|w| (w[1] - w[0]).norm_sqr())).filter(|l| *l > 0.0).collect();
    if lens.is_empty() {
        return vec![];
    }
    lens.sort_by(f64::total_cmp);
    let cell = lens[lens.len() / 2].sqrt().max(r_max / 200.0);
    let key = |z: C| ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<(usize, usize)>> = HashMap::new();
    for (ti, tr) in trajs.iter().enumerate() {
        for (si, w) in tr.points.windows(2).enumerate() {
            let (x0, y0) = key(C::new(w[0].re.min(w[1].re), w[0].im.min(w[1].im)));
            let (x1, y1) = key(C::new(w[0].re.max(w[1].re), w[0].im.max(w[1].im)));
            for x in x0..=x1 {
                for y in y0..=y1 {
                    grid.entry((x, y)).or_default().push((ti, si));
                }
            }
        }
    }
    let mut out = vec![];
    let mut cells: Vec<_> = grid.into_iter().collect();
    cells.sort_by_key(|(k, _)| *k);
    for (cell_key, segs) in cells {
        for x in 0..segs.len() {
            for y in x + 1..segs.len() {
                let (mut a, mut sa) = segs[x];
                let (mut b, mut sb) = segs[y];
                if a == b || !(fresh.contains(&a) || fresh.contains(&b)) {
                    continue;
                }
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                    std::mem::swap(&mut sa, &mut sb);
                }
                let (pa, pb) = (&trajs[a].points, &trajs[b].points);
                if let Some((ua, ub)) = segment_intersection(pa[sa], pa[sa + 1], pb[sb], pb[sb + 1]) {
                    let point = pa[sa] + (pa[sa + 1] - pa[sa]) * ua;
                    // Report each crossing only from the cell containing it.
                    if key(point) == cell_key {
                        out.push(Crossing { a, b, sa, sb, ua, ub, point });
                    }
                }
            }
        }
    }
    out.sort_by(|p, q| (p.a, p.b, p.sa, p.sb).cmp(&(q.a, q.b, q.sa, q.sb)));
    out
}

fn value_at(tr: &Trajectory, seg: usize, u: f64, phi: C) -> (f64, [C; 2]) {
    let v = tr.values[seg];
    let t = tr.t[seg] + u * (tr.t[seg + 1] - tr.t[seg]);
    (t, [nearest_cube_root(phi, v[0]), nearest_cube_root(phi, v[1])])
}

/// Traces W(φ, θ): the 8m critical trajectories, then junction children
/// generation by generation until no new composable crossings appear.
pub fn trace(curve: &CubicDifferential, theta: f64, opts: &TraceOptions) -> Result<Network> {
    let tracer = Tracer::new(curve, theta, opts);
    let rays = initial_rays(curve, theta)?;
    let sys = &tracer.sys;
    let mut starts = vec![];
    let mut meta = vec![];
    for ray in rays.iter().flatten() {
        let z0 = curve.zeros[ray.zero];
        let z = z0 + C::from_polar(opts.start_offset, ray.angle);
        let v = sys.sheet_values(z)?;
        let values = [v[ray.label.0 - 1], v[ray.label.1 - 1]];
        // ∫₀^ε |Δ| ds with |Δ| ∝ s^{1/3}.
        let t0 = 0.75 * (values[0] - values[1]).norm() * opts.start_offset;
        starts.push(Start { z, values, t0, exclude: Some(ray.zero) });
        meta.push((format!("z{}r{}", ray.zero, ray.index), ray.label, Origin::Zero(ray.zero), vec![ray.zero]));
    }
    let paths = par::map(&starts, |s| tracer.integrate(s));
    let mut trajs: Vec<Trajectory> = paths
        .into_iter()
        .zip(meta)
        .map(|(p, (key, label, origin, zeros))| make_trajectory(sys, p, key, label, origin, 0, zeros))
        .collect();
    let mut junctions: Vec<Junction> = vec![];
    let mut fresh: BTreeSet<usize> = (0..trajs.len()).collect();
    let mut multiple = 0;
    let mut generation = 0;
    let mut parent_of: Vec<Option<[usize; 2]>> = vec![None; trajs.len()];
    loop {
        let found = crossings(&trajs, &fresh, tracer.r_max);
        let mut per_pair: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut births = vec![];
        for c in &found {
            let (a, b) = (&trajs[c.a], &trajs[c.b]);
            // Skip the shared start of siblings and a child's birth point.
            if let (Origin::Zero(x), Origin::Zero(y)) = (&a.origin, &b.origin) {
                if x == y && (c.point - curve.zeros[*x]).norm() < 4.0 * opts.start_offset {
                    continue;
                }
            }
            let born_here = |child: usize, other: usize| {
                parent_of[child].is_some_and(|p| p.contains(&other))
                    && (c.point - trajs[child].points[0]).norm() < 1e-9 * (1.0 + c.point.norm())
            };
            if born_here(c.a, c.b) || born_here(c.b, c.a) {
                continue;
            }
            *per_pair.entry((c.a, c.b)).or_default() += 1;
            let phi = curve.eval(c.point);
            let (ta, va) = value_at(a, c.sa, c.ua, phi);
            let (tb, vb) = value_at(b, c.sb, c.ub, phi);
            let scale = va[0].norm().max(1e-300);
            let same = |x: C, y: C| (x - y).norm() < 0.3 * scale;
            let da = a.points[c.sa + 1] - a.points[c.sa];
            let db = b.points[c.sb + 1] - b.points[c.sb];
            let angle = ((da.conj() * db).arg()).abs();
            // A·B when A = (i, j), B = (j, k); or B·A.
            let order = if same(va[1], vb[0]) && !same(va[0], vb[1]) {
                Some((c.a, c.b, [va[0], vb[1]], [a.label, b.label]))
            } else if same(vb[1], va[0]) && !same(vb[0], va[1]) {
                Some((c.b, c.a, [vb[0], va[1]], [b.label, a.label]))
            } else {
                None
            };
            if let Some((p, q, values, incoming)) = order {
                if (angle - 2.0 * PI / 3.0).abs() > opts.angle_tol {
                    continue;
                }
                births.push((p, q, c.point, values, ta + tb, incoming, angle));
            }
        }
        multiple += per_pair.values().filter(|&&n| n > 1).count();
        if births.is_empty() {
            break;
        }
        generation += 1;
        if generation > opts.max_generation {
            return Err(Error::GenerationOverflow(opts.max_generation));
        }
        let starts: Vec<Start> =
            births.iter().map(|&(_, _, z, values, t0, _, _)| Start { z, values, t0, exclude: None }).collect();
        let paths = par::map(&starts, |s| tracer.integrate(s));
        fresh.clear();
        for ((p, q, z, values, _, incoming, angle), path) in births.into_iter().zip(paths) {
            let idx = trajs.len();
            let jid = junctions.len();
            let label = label_at(sys, z, &values).ok_or_else(|| Error::OnCut(format!("{z}")))?;
            let mut zeros: Vec<usize> = trajs[p].zeros.iter().chain(&trajs[q].zeros).cloned().collect();
            zeros.sort();
            zeros.dedup();
            let key = format!("({}*{})", trajs[p].key, trajs[q].key);
            trajs.push(make_trajectory(sys, path, key, label, Origin::Junction(jid), generation, zeros));
            parent_of.push(Some([p, q]));
            junctions.push(Junction { point: z, incoming, outgoing: label, parents: [p, q], child: idx, angle });
            fresh.insert(idx);
        }
    }
    let marked = marked_points_at(curve, theta, tracer.r_max)?;
    for tr in trajs.iter_mut() {
        if let Terminal::Escaped { angle, marked: slot } = &mut tr.terminal {
            *slot = marked
                .iter()
                .enumerate()
                .min_by(|x, y| angle_diff(x.1.angle, *angle).abs().total_cmp(&angle_diff(y.1.angle, *angle).abs()))
                .map(|(k, _)| k);
        }
    }
    let asymptotic = asymptotic_directions_at(curve, theta, &marked, tracer.r_max)?;
    let bps_free = !trajs.iter().any(|t| matches!(t.terminal, Terminal::HitZero { .. }));
    Ok(Network {
        theta,
        m: curve.m(),
        zeros: curve.zeros.clone(),
        r_max: tracer.r_max,
        trajectories: trajs,
        junctions,
        marked_points: marked,
        asymptotic_directions: asymptotic,
        bps_free,
        multiple_crossings: multiple,
    })
}

fn make_trajectory(
    sys: &SheetSystem,
    p: Path,
    key: String,
    label: Label,
    origin: Origin,
    generation: usize,
    zeros: Vec<usize>,
) -> Trajectory {
    let end_label = label_at(sys, *p.points.last().unwrap(), p.values.last().unwrap());
    Trajectory {
        key,
        label,
        end_label,
        origin,
        generation,
        terminal: p.terminal,
        points: p.points,
        t: p.t,
        zeros,
        values: p.values,
        approach: p.approach,
    }
}

impl Network {
    /// Label of an escaped trajectory, continued from its last sample to its
    /// marked point on the circle |z| = R_max.
    pub fn label_at_marked(&self, curve: &CubicDifferential, k: usize) -> Option<Label> {
        let tr = &self.trajectories[k];
        let Terminal::Escaped { marked: Some(p), .. } = tr.terminal else { return None };
        let sys = curve.sheet_system();
        let from = *tr.points.last()?;
        let to = C::from_polar(self.r_max, self.marked_points[p].angle);
        let mut v = *tr.values.last()?;
        let n = 256;
        for s in 1..=n {
            let z = from + (to - from) * (s as f64 / n as f64);
            let phi = curve.eval(z);
            v = [nearest_cube_root(phi, v[0]), nearest_cube_root(phi, v[1])];
        }
        label_at(&sys, to, &v)
    }

    pub fn to_json(&self, walls: &[WallEvent]) -> serde_json::Value {
        let pt = |z: &C| json!([z.re, z.im]);
        json!({
            "theta": self.theta,
            "zeros": self.zeros.iter().map(pt).collect::<Vec<_>>(),
            "r_max": self.r_max,
            "bps_free": self.bps_free,
            "trajectories": self.trajectories.iter().map(|t| json!({
                "key": t.key,
                "label": [t.label.0, t.label.1],
                "generation": t.generation,
                "origin": t.origin,
                "terminal": t.terminal,
                "points": t.points.iter().map(pt).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "junctions": self.junctions.iter().map(|j| json!({
                "point": pt(&j.point),
                "incoming": [[j.incoming[0].0, j.incoming[0].1], [j.incoming[1].0, j.incoming[1].1]],
                "outgoing": [j.outgoing.0, j.outgoing.1],
                "angle": j.angle,
            })).collect::<Vec<_>>(),
            "marked_points": self.marked_points.iter().map(|p| json!({"angle": p.angle, "label": [p.label.0, p.label.1]})).collect::<Vec<_>>(),
            "asymptotic_directions": self.asymptotic_directions,
            "walls": walls.iter().map(WallEvent::to_json).collect::<Vec<_>>(),
        })
    }
}

/// A network without trajectories: zeros, marked points and l_r only.
pub fn formula_network(curve: &CubicDifferential, theta: f64) -> Result<Network> {
    let marked = marked_points(curve, theta)?;
    let asymptotic = asymptotic_directions(curve, theta, &marked)?;
    Ok(Network {
        theta,
        m: curve.m(),
        zeros: curve.zeros.clone(),
        r_max: default_r_max(curve),
        trajectories: vec![],
        junctions: vec![],
        marked_points: marked,
        asymptotic_directions: asymptotic,
        bps_free: true,
        multiple_crossings: 0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SvgStyle {
    pub size: f64,
    pub stroke: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle { size: 600.0, stroke: 1.2 }
    }
}

fn label_color(l: Label) -> &'static str {
    match l {
        (1, 2) => "#1f77b4",
        (2, 1) => "#17becf",
        (2, 3) => "#d62728",
        (3, 2) => "#e377c2",
        (1, 3) => "#2ca02c",
        (3, 1) => "#bcbd22",
        _ => "#7f7f7f",
    }
}

/// Deterministic SVG: trajectories by label, zeros in orange, junctions as
/// small squares, the boundary circle with marked-point ticks.
pub fn render_svg(net: &Network, style: &SvgStyle) -> String {
    let s = style.size;
    let c = s / 2.0;
    let rad = 0.42 * s;
    let scale = rad / net.r_max;
    let map = |z: C| (c + z.re * scale, c - z.im * scale);
    let mut o = String::new();
    let _ = writeln!(o, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{s:.0}" height="{s:.0}" viewBox="0 0 {s:.0} {s:.0}">"#);
    let _ = writeln!(o, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(o, r#"<circle cx="{c:.2}" cy="{c:.2}" r="{rad:.2}" fill="none" stroke="black" stroke-width="1"/>"#);
    for tr in &net.trajectories {
        let mut d = String::new();
        for (k, z) in tr.points.iter().enumerate() {
            let (x, y) = map(*z);
            let _ = write!(d, "{}{x:.2},{y:.2}", if k == 0 { "M" } else { " L" });
        }
        let _ = writeln!(
            o,
            r#"<path class="trajectory" d="{d}" fill="none" stroke="{}" stroke-width="{:.2}"/>"#,
            label_color(tr.label),
            style.stroke
        );
    }
    for j in &net.junctions {
        let (x, y) = map(j.point);
        let _ = writeln!(o, r#"<rect class="junction" x="{:.2}" y="{:.2}" width="4" height="4" fill="black"/>"#, x - 2.0, y - 2.0);
    }
    for z in &net.zeros {
        let (x, y) = map(*z);
        let _ = writeln!(o, r#"<circle class="zero" cx="{x:.2}" cy="{y:.2}" r="4" fill="orange"/>"#);
    }
    for p in &net.marked_points {
        let (dx, dy) = (p.angle.cos(), -p.angle.sin());
        let (x0, y0) = (c + rad * dx, c + rad * dy);
        let (x1, y1) = (c + (rad + 8.0) * dx, c + (rad + 8.0) * dy);
        let (xl, yl) = (c + (rad + 20.0) * dx, c + (rad + 20.0) * dy);
        let _ = writeln!(o, r#"<line class="tick" x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="black"/>"#);
        let _ = writeln!(
            o,
            r#"<text x="{xl:.2}" y="{yl:.2}" font-size="10" text-anchor="middle" dominant-baseline="middle">{}{}</text>"#,
            p.label.0, p.label.1
        );
    }
    o.push_str("</svg>\n");
    o
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum WallKind {
    /// A single trajectory between two zeros.
    Saddle,
    /// Three legs from three zeros meeting at a junction.
    Junction3,
    /// Any other finite web.
    Web,
}

#[derive(Clone, Debug, Serialize)]
pub struct WallEvent {
    pub theta_star: f64,
    /// Zeros joined by the web, sorted.
    pub zeros: Vec<usize>,
    pub kind: WallKind,
    /// None if the measured mass matches no candidate class (UnmatchedWall).
    pub class: Option<HomologyClass>,
    /// e^{iθ*}·(total t), the mass measured along the web.
    pub mass: C,
    /// Period of the matched class.
    pub period: Option<C>,
    /// Closest approach at θ*.
    pub miss: f64,
}

impl WallEvent {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "theta": self.theta_star,
            "zeros": self.zeros,
            "kind": self.kind,
            "class": self.class.as_ref().map(|c| c.coords.clone()),
            "class_name": self.class.as_ref().map(|c| c.to_string()),
            "mass": [self.mass.re, self.mass.im],
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WallOptions {
    /// Number of θ intervals in the scan.
    pub grid: usize,
    /// Bisection stops below this θ width.
    pub tol: f64,
    /// A bracket is confirmed if the final miss is below this fraction of the
    /// minimal zero gap.
    pub accept: f64,
    /// Candidate classes have coordinates in −bound..=bound.
    pub class_bound: i64,
    /// Relative mass tolerance for class matching.
    pub class_tol: f64,
}

impl Default for WallOptions {
    fn default() -> Self {
        WallOptions { grid: 720, tol: 1e-8, accept: 1e-2, class_bound: 2, class_tol: 1e-3 }
    }
}

/// Closest approaches keyed by (trajectory key, zero), for trajectories not
/// starting at that zero.
fn approaches(net: &Network) -> BTreeMap<(String, usize), (Approach, Vec<usize>, usize)> {
    let mut out = BTreeMap::new();
    for tr in &net.trajectories {
        for (b, a) in tr.approach.iter().enumerate() {
            if !tr.zeros.contains(&b) && a.interior {
                out.insert((tr.key.clone(), b), (*a, tr.zeros.clone(), tr.generation));
            }
        }
    }
    out
}

fn scan_at(curve: &CubicDifferential, theta: f64) -> Option<Network> {
    trace(curve, theta, &TraceOptions::scan()).ok()
}

/// Finds the θ ∈ [lo, hi) at which a trajectory (or junction child) runs into
/// a zero, by sign changes of its signed miss distance, refined by bisection.
pub fn detect_walls(curve: &CubicDifferential, lo: f64, hi: f64, opts: &WallOptions) -> Result<Vec<WallEvent>> {
    let gap = curve.min_zero_gap();
    let full = hi - lo >= TWO_PI - 1e-12;
    // The grid is shifted off lo: symmetric curves have walls at round angles.
    let h = (hi - lo) / opts.grid as f64;
    let (first, count) = if full { (lo + 0.37 * h, opts.grid + 1) } else { (lo, opts.grid) };
    let thetas: Vec<f64> = (0..=count).map(|k| first + h * k as f64).collect();
    let scans: Vec<Option<BTreeMap<(String, usize), (Approach, Vec<usize>, usize)>>> =
        par::map(&thetas, |&th| scan_at(curve, th).map(|n| approaches(&n)));
    let mut brackets = vec![];
    for k in 0..count {
        let Some(x) = &scans[k] else { continue };
        // A failed trace (e.g. exactly on a wall) is bridged by its neighbours.
        let Some((y, ty)) = scans[k + 1..].iter().zip(&thetas[k + 1..]).take(2).find_map(|(s, t)| s.as_ref().map(|s| (s, *t))) else {
            continue;
        };
        for (key, (ax, ..)) in x {
            if let Some((ay, ..)) = y.get(key) {
                if ax.signed.signum() != ay.signed.signum() && ax.dist.max(ay.dist) < 0.5 * gap {
                    brackets.push((thetas[k], ty, key.clone()));
                }
            }
        }
    }
    let refined: Vec<Option<(f64, Approach, Vec<usize>, usize)>> = par::map(&brackets, |(a, b, key)| {
        let (mut a, mut b) = (*a, *b);
        let sign_a = approaches(&scan_at(curve, a)?).get(key)?.0.signed.signum();
        let mut last = None;
        while b - a > opts.tol {
            let mid = 0.5 * (a + b);
            let n = scan_at(curve, mid)?;
            let e = approaches(&n).get(key).cloned()?;
            if e.0.signed.signum() == sign_a {
                a = mid;
            } else {
                b = mid;
            }
            last = Some((mid, e.0, e.1, e.2));
        }
        last
    });
    let periods = PeriodTable::compute(curve, 1e-12)?;
    let candidates: Vec<(HomologyClass, C)> = small_classes(curve.m(), opts.class_bound)
        .into_iter()
        .filter(|g| !g.is_zero())
        .map(|g| {
            let z = periods.period(&g);
            (g, z)
        })
        .collect();
    let mut events: Vec<WallEvent> = vec![];
    for ((_, _, (_, target)), r) in brackets.iter().zip(refined) {
        let Some((theta, ap, mut zeros, generation)) = r else { continue };
        if ap.dist > opts.accept * gap {
            continue;
        }
        zeros.push(*target);
        zeros.sort();
        zeros.dedup();
        let mass = C::from_polar(ap.t, theta);
        let mut ranked: Vec<(f64, usize)> =
            candidates.iter().enumerate().map(|(k, (_, z))| ((z - mass).norm() / mass.norm(), k)).collect();
        ranked.sort_by(|x, y| x.0.total_cmp(&y.0));
        let matched = ranked[0].0 < opts.class_tol && ranked.get(1).is_none_or(|s| s.0 > 10.0 * ranked[0].0);
        let (class, period) = if matched {
            let (g, z) = &candidates[ranked[0].1];
            (Some(g.clone()), Some(*z))
        } else {
            (None, None)
        };
        let kind = match (generation, zeros.len()) {
            (0, 2) => WallKind::Saddle,
            (_, 3) => WallKind::Junction3,
            _ => WallKind::Web,
        };
        let theta_star = if full { lo + (theta - lo).rem_euclid(TWO_PI) } else { theta };
        if theta_star < lo || theta_star >= hi {
            continue;
        }
        events.push(WallEvent { theta_star, zeros, kind, class, mass, period, miss: ap.dist });
    }
    events.sort_by(|a, b| a.theta_star.total_cmp(&b.theta_star));
    // The same web is found from each of its legs (and, on a full circle, at
    // both ends of the range).
    let mut merged: Vec<WallEvent> = vec![];
    for e in events {
        let dup = merged.iter().position(|p| {
            let d = if full { angle_diff(e.theta_star, p.theta_star).abs() } else { (e.theta_star - p.theta_star).abs() };
            let tol = if e.class.is_some() { 1e-3 } else { 1e-5 };
            d < tol && e.class == p.class && e.zeros == p.zeros
        });
        match dup {
            Some(k) if e.miss < merged[k].miss => merged[k] = e,
            Some(_) => {}
            None => merged.push(e),
        }
    }
    merged.sort_by(|a, b| a.theta_star.total_cmp(&b.theta_star));
    Ok(merged)
}

/// Ω over all classes seen on walls in [0, 2π): 1 on each wall class and its
/// negative.
pub fn bps_counts(curve: &CubicDifferential, opts: &WallOptions) -> Result<BTreeMap<HomologyClass, i64>> {
    let walls = detect_walls(curve, 0.0, TWO_PI, opts)?;
    let mut out = BTreeMap::new();
    for w in &walls {
        let g = w.class.as_ref().ok_or_else(|| {
            Error::UnsupportedChamber(format!("wall at θ = {:.6} matches no candidate class", w.theta_star))
        })?;
        out.insert(g.clone(), 1);
        out.insert(-g, 1);
    }
    Ok(out)
}

/// One wall of a full sweep compared against the chamber bookkeeping.
#[derive(Clone, Debug, Serialize)]
pub struct WallMutation {
    pub theta_star: f64,
    pub zeros: Vec<usize>,
    /// Pair whose crossing count changes, if exactly one does.
    pub pair: Option<usize>,
    pub gone: Option<String>,
    pub came: Option<String>,
    /// [X_gone] in the chamber before the wall, up to sign, equals the wall class.
    pub class_ok: bool,
    pub ok: bool,
}

/// Sweeps θ over one turn from the reference chamber and checks that every
/// detected wall is exactly one predicted seed mutation of the adjacent
/// zero pair, and that no predicted mutation lacks a wall.
pub fn wall_mutations(curve: &CubicDifferential, opts: &WallOptions) -> Result<(Vec<WallMutation>, usize)> {
    use crate::cluster::{build_quiver, plucker_exchanges};
    use crate::invariants::x_classes;
    use crate::rh::BpsStructure;
    use crate::trees::{crossing_delta, Direction};

    let bps = BpsStructure::almost_on_a_line(curve)?;
    let t0 = bps.reference_angle()?;
    let walls = detect_walls(curve, t0, t0 + TWO_PI, opts)?;
    let mut lifted: Vec<(f64, &WallEvent)> =
        walls.iter().map(|w| (t0 + (w.theta_star - t0).rem_euclid(TWO_PI), w)).collect();
    lifted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = vec![];
    for (th, w) in lifted {
        let delta = 1e-6;
        let before = bps.chamber_at(th - delta)?;
        let after = bps.chamber_at(th + delta)?;
        let changed: Vec<usize> = (0..before.states.len()).filter(|&k| before.states[k] != after.states[k]).collect();
        let mut rec = WallMutation {
            theta_star: th,
            zeros: w.zeros.clone(),
            pair: None,
            gone: None,
            came: None,
            class_ok: false,
            ok: false,
        };
        if let [k] = changed[..] {
            let i = k + 1;
            rec.pair = Some(i);
            let cb = before.collection()?;
            let ca = after.collection()?;
            let (gone, came) = crossing_delta(&cb, i, Direction::Ccw)?;
            let step = after.states[k] == before.states[k] + 1;
            let diff_ok = cb.trees.difference(&ca.trees).eq([&gone]) && ca.trees.difference(&cb.trees).eq([&came]);
            let exch_ok = plucker_exchanges(&cb, &gone).iter().any(|(t, _, _)| *t == came);
            let quiver_ok = {
                let qb = build_quiver(&cb)?;
                let qa = build_quiver(&ca)?;
                let kk = qb.index_of(&gone).ok_or_else(|| Error::UnknownWall(gone.to_string()))?;
                qb.mutate_seed(kk, came.clone())?.arrow_multiset() == qa.arrow_multiset()
            };
            rec.class_ok = match (&w.class, x_classes(&cb)?.get(&gone)) {
                (Some(g), Some(h)) => g == h || *g == -h,
                _ => false,
            };
            let zeros_ok = w.zeros == vec![i - 1, i];
            rec.ok = step && diff_ok && exch_ok && quiver_ok && rec.class_ok && zeros_ok;
            rec.gone = Some(gone.short_name());
            rec.came = Some(came.short_name());
        }
        out.push(rec);
    }
    let predicted: i64 = {
        let end = bps.chamber_at(t0 + TWO_PI)?;
        let start = bps.chamber_at(t0)?;
        end.states.iter().zip(&start.states).map(|(a, b)| a - b).sum()
    };
    let mismatches = out.iter().filter(|r| !r.ok).count() + (predicted - out.len() as i64).unsigned_abs() as usize;
    Ok((out, mismatches))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> CubicDifferential {
        CubicDifferential::real_zeros(&[-1.0, 1.0]).unwrap()
    }

    #[test]
    fn eight_rays_with_local_labels() {
        let c = two();
        let sys = c.sheet_system();
        for theta in [0.0, 0.3, 2.0] {
            let rays = initial_rays(&c, theta).unwrap();
            for r in rays.iter().flatten() {
                let e = C::from_polar(1.0, r.angle);
                let v = sys.sheet_values(c.zeros[r.zero] + e * 1e-4).unwrap();
                let w = (v[r.label.0 - 1] - v[r.label.1 - 1]) * e * C::from_polar(1.0, -theta);
                assert!(w.re > 0.0 && w.im.abs() < 1e-2 * w.re, "{r:?} {w}");
            }
            assert!(rays.iter().all(|r| r.len() == 8));
        }
    }

    #[test]
    fn marked_points_alternate() {
        for m in 2..=5 {
            let zeros: Vec<f64> = (0..m).map(|k| k as f64 - 1.3).collect();
            let c = CubicDifferential::real_zeros(&zeros).unwrap();
            let mp = marked_points(&c, 0.37).unwrap();
            assert_eq!(mp.len(), 2 * m + 6);
            // Away from the cuts (which leave downwards) the labels are continuous.
            let start = mp.iter().position(|p| p.angle > 3.0 * PI / 2.0 + 0.3).unwrap_or(0);
            let seq: Vec<Label> = (0..mp.len()).map(|k| mp[(start + k) % mp.len()].label).collect();
            let cut = seq.len() - mp.iter().filter(|p| p.angle > 3.0 * PI / 2.0 + 0.3).count();
            let lead = &seq[..cut.max(2)];
            assert!(labels_alternate(lead), "{seq:?}");
            let l = asymptotic_directions(&c, 0.37, &mp).unwrap();
            assert_eq!(l.len(), m + 3);
        }
    }

    #[test]
    fn generic_network_is_bps_free() {
        let c = two();
        let net = trace(&c, 0.1, &TraceOptions::default()).unwrap();
        assert!(net.bps_free);
        assert!(net.trajectories.iter().filter(|t| t.generation == 0).count() == 16);
        for (k, tr) in net.trajectories.iter().enumerate() {
            let Terminal::Escaped { angle, marked } = tr.terminal else { panic!("{:?}", tr.terminal) };
            let mp = &net.marked_points[marked.unwrap()];
            assert!(angle_diff(angle, mp.angle).abs() < 1e-3, "{} vs {}", angle, mp.angle);
            assert_eq!(Some(mp.label), net.label_at_marked(&c, k));
        }
        for j in &net.junctions {
            assert_eq!(j.incoming[0].1, j.incoming[1].0);
            assert_eq!(j.outgoing, (j.incoming[0].0, j.incoming[1].1));
        }
        assert_eq!(net.multiple_crossings, 0);
    }
}
