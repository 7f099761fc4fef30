//! Command-line front end.
//!
//! Every subcommand resolves a [`RunConfig`] (defaults < `--config` file <
//! explicit flags), validates it, writes it to `<out-dir>/config.json` and
//! then produces its outputs in the same directory. Re-running with
//! `--config <out-dir>/config.json` reproduces the outputs byte for byte.
//!
//! Exit codes: 0 success, 2 chamber diagnostics, 1 any other error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cluster;
use crate::curve::{self, CubicDifferential, HomologyClass, PeriodTable};
use crate::invariants::{self, Chart, Value, VectorAssignment};
use crate::network::{self, SvgStyle, TraceOptions, WallEvent, WallOptions};
use crate::ode::{self, OdeConfig, OdeProblem};
use crate::rh::{self, BpsStructure};
use crate::trees::{self, ChamberState};
use crate::{par, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "cubicnet", version, about = "Spectral networks of polynomial cubic differentials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Trace the network at one phase (JSON + SVG); --sweep adds the wall list.
    Trace,
    /// Compatible abelianization trees of a chamber.
    Trees,
    /// Quiver of a chamber (DOT + JSON).
    Quiver,
    /// Spectral coordinates X_T of a chamber.
    Coords,
    /// Period table and intersection pairing.
    Periods,
    /// Walls over a full turn and the BPS counts they carry.
    Bps,
    /// Riemann–Hilbert checks.
    Rh,
    /// Full reproduction for ½(−z³ + 3z² + 2).
    Section6,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Trace => "trace",
            Command::Trees => "trees",
            Command::Quiver => "quiver",
            Command::Coords => "coords",
            Command::Periods => "periods",
            Command::Bps => "bps",
            Command::Rh => "rh",
            Command::Section6 => "section6",
        }
    }
}

/// Command-line overrides. Complex numbers are JSON pairs `[re, im]`.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Load a previously echoed config.json; explicit flags still win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Polynomial coefficients, leading first, e.g. '[[1,0],[0,0],[-1,0]]'.
    #[arg(long, global = true, value_parser = parse_pairs)]
    pub coeffs: Option<::std::vec::Vec<[f64; 2]>>,
    /// Zeros of the polynomial, e.g. '[[-1,0],[1,0.05]]'.
    #[arg(long, global = true, value_parser = parse_pairs)]
    pub zeros: Option<::std::vec::Vec<[f64; 2]>>,
    /// Leading coefficient when --zeros is given.
    #[arg(long, global = true, value_parser = parse_pair)]
    pub lead: Option<[f64; 2]>,
    /// Number of zeros when no polynomial is given.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Phase θ in radians.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Per-pair crossing counts of the chamber, e.g. '[1,1]'.
    #[arg(long, global = true, value_parser = parse_states)]
    pub states: Option<::std::vec::Vec<i64>>,
    /// Evaluate coordinates on the ODE frame at this ħ instead of a random assignment.
    #[arg(long, global = true, value_parser = parse_pair)]
    pub hbar: Option<[f64; 2]>,
    #[arg(long, global = true)]
    pub hbar_lo: Option<f64>,
    #[arg(long, global = true)]
    pub hbar_hi: Option<f64>,
    #[arg(long, global = true)]
    pub hbar_count: Option<usize>,
    /// rh1, rh2, rh3 or all.
    #[arg(long, global = true)]
    pub suite: Option<String>,
    /// Also detect walls over a full turn (trace).
    #[arg(long, global = true)]
    pub sweep: bool,
    #[arg(long, global = true)]
    pub ode_rtol: Option<f64>,
    #[arg(long, global = true)]
    pub quad_tol: Option<f64>,
    #[arg(long, global = true)]
    pub identity_tol: Option<f64>,
    #[arg(long, global = true)]
    pub wall_tol: Option<f64>,
    #[arg(long, global = true)]
    pub wall_grid: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (0 = all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

fn parse_pairs(s: &str) -> std::result::Result<Vec<[f64; 2]>, String> {
    serde_json::from_str(s).map_err(|e| format!("expected [[re, im], ...]: {e}"))
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    serde_json::from_str(s).map_err(|e| format!("expected [re, im]: {e}"))
}

fn parse_states(s: &str) -> std::result::Result<Vec<i64>, String> {
    serde_json::from_str(s).map_err(|e| format!("expected [k1, k2, ...]: {e}"))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Tolerances {
    pub ode_rtol: f64,
    pub quadrature: f64,
    pub identity: f64,
    pub wall_bisection: f64,
    pub wall_grid: usize,
}

/// Fully resolved, serializable configuration of one run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub coeffs: Option<Vec<[f64; 2]>>,
    pub zeros: Option<Vec<[f64; 2]>>,
    pub lead: [f64; 2],
    pub m: usize,
    pub theta: f64,
    pub states: Option<Vec<i64>>,
    pub hbar: Option<[f64; 2]>,
    pub hbar_lo: f64,
    pub hbar_hi: f64,
    pub hbar_count: usize,
    pub suite: String,
    pub sweep: bool,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: usize,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        RunConfig {
            command: command.name().into(),
            coeffs: None,
            zeros: None,
            lead: [1.0, 0.0],
            m: 2,
            theta: 0.1,
            states: None,
            hbar: None,
            hbar_lo: 0.05,
            hbar_hi: 0.2,
            hbar_count: 16,
            suite: "all".into(),
            sweep: false,
            tolerances: Tolerances { ode_rtol: 1e-12, quadrature: 1e-12, identity: 1e-12, wall_bisection: 1e-8, wall_grid: 720 },
            seed: 0,
            out_dir: PathBuf::from("out"),
            threads: 0,
        }
    }

    pub fn resolve(command: Command, flags: &Flags) -> Result<Self> {
        let mut c = match &flags.config {
            Some(p) => {
                let text = fs::read_to_string(p)?;
                let mut c: RunConfig = serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display())))?;
                c.command = command.name().into();
                c
            }
            None => RunConfig::defaults(command),
        };
        let f = flags.clone();
        if f.coeffs.is_some() {
            c.coeffs = f.coeffs;
            c.zeros = None;
        }
        if f.zeros.is_some() {
            c.zeros = f.zeros;
            c.coeffs = None;
        }
        macro_rules! set {
            ($($field:ident <- $flag:ident),*) => { $( if let Some(v) = f.$flag { c.$field = v; } )* };
        }
        set!(lead <- lead, m <- m, theta <- theta, hbar_lo <- hbar_lo, hbar_hi <- hbar_hi, hbar_count <- hbar_count,
             suite <- suite, seed <- seed, out_dir <- out_dir, threads <- threads);
        if f.states.is_some() {
            c.states = f.states;
        }
        if f.hbar.is_some() {
            c.hbar = f.hbar;
        }
        if f.sweep {
            c.sweep = true;
        }
        let t = &mut c.tolerances;
        if let Some(v) = f.ode_rtol {
            t.ode_rtol = v;
        }
        if let Some(v) = f.quad_tol {
            t.quadrature = v;
        }
        if let Some(v) = f.identity_tol {
            t.identity = v;
        }
        if let Some(v) = f.wall_tol {
            t.wall_bisection = v;
        }
        if let Some(v) = f.wall_grid {
            t.wall_grid = v;
        }
        if command == Command::Section6 && c.coeffs.is_none() && c.zeros.is_none() {
            c.coeffs = Some(vec![[-0.5, 0.0], [1.5, 0.0], [0.0, 0.0], [1.0, 0.0]]);
            c.m = 3;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidInput(s));
        if self.m < 2 {
            return bad(format!("m = {} (need m ≥ 2)", self.m));
        }
        if !self.theta.is_finite() {
            return bad("theta must be finite".into());
        }
        if !(self.hbar_lo > 0.0 && self.hbar_hi > self.hbar_lo && self.hbar_count >= 2) {
            return bad(format!("ħ grid [{}, {}] × {} is empty", self.hbar_lo, self.hbar_hi, self.hbar_count));
        }
        if !["rh1", "rh2", "rh3", "all"].contains(&self.suite.as_str()) {
            return bad(format!("unknown suite {:?}", self.suite));
        }
        let t = &self.tolerances;
        for (name, v) in [("ode_rtol", t.ode_rtol), ("quadrature", t.quadrature), ("identity", t.identity), ("wall_bisection", t.wall_bisection)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("tolerance {name} = {v} must lie in (0, 1)"));
            }
        }
        if t.wall_grid < 16 {
            return bad("wall grid needs at least 16 phases".into());
        }
        if let Some(s) = &self.states {
            let need = self.curve_m()? - 1;
            if s.len() != need {
                return bad(format!("{} crossing counts given, {need} pairs", s.len()));
            }
        }
        if let Some(h) = self.hbar {
            if C::new(h[0], h[1]).norm() == 0.0 {
                return bad("ħ must be nonzero".into());
            }
        }
        self.curve().map(|_| ())
    }

    fn curve_m(&self) -> Result<usize> {
        Ok(match (&self.coeffs, &self.zeros) {
            (Some(c), _) => c.len().saturating_sub(1),
            (_, Some(z)) => z.len(),
            _ => self.m,
        })
    }

    /// Default polynomial: m zeros spread on [−1, 1], every other one nudged
    /// off the axis so that walls are isolated.
    pub fn curve(&self) -> Result<CubicDifferential> {
        let pc = |p: &[f64; 2]| C::new(p[0], p[1]);
        match (&self.coeffs, &self.zeros) {
            (Some(c), _) => CubicDifferential::new(&c.iter().map(pc).collect::<Vec<_>>()),
            (_, Some(z)) => CubicDifferential::from_zeros(&z.iter().map(pc).collect::<Vec<_>>(), pc(&self.lead)),
            _ => {
                let m = self.m;
                let zs: Vec<C> = (0..m).map(|k| C::new(-1.0 + 2.0 * k as f64 / (m - 1) as f64, if k % 2 == 1 { 0.05 } else { 0.0 })).collect();
                CubicDifferential::from_zeros(&zs, pc(&self.lead))
            }
        }
    }

    fn state(&self) -> Result<ChamberState> {
        let m = self.curve_m()?;
        Ok(ChamberState { m, states: self.states.clone().unwrap_or_else(|| vec![0; m - 1]) })
    }

    fn ode_config(&self) -> OdeConfig {
        OdeConfig { rtol: self.tolerances.ode_rtol, ..OdeConfig::default() }
    }

    fn wall_options(&self) -> WallOptions {
        WallOptions { grid: self.tolerances.wall_grid, tol: self.tolerances.wall_bisection, ..WallOptions::default() }
    }
}

struct Out {
    dir: PathBuf,
}

impl Out {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Out { dir: dir.to_path_buf() })
    }

    fn text(&self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        Ok(())
    }

    fn json(&self, name: &str, v: &serde_json::Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        self.text(name, &s)
    }
}

fn pair(z: C) -> [f64; 2] {
    [z.re, z.im]
}

fn walls_csv(walls: &[WallEvent]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["theta_star", "zeros", "kind", "class", "mass_re", "mass_im", "period_re", "period_im", "miss"]).map_err(io)?;
    for e in walls {
        let zs = e.zeros.iter().map(|z| z.to_string()).collect::<Vec<_>>().join(" ");
        let class = e.class.as_ref().map(|g| g.to_string()).unwrap_or_default();
        let (pre, pim) = e.period.map(|p| (format!("{:.12}", p.re), format!("{:.12}", p.im))).unwrap_or_default();
        w.write_record([
            format!("{:.12}", e.theta_star),
            zs,
            format!("{:?}", e.kind),
            class,
            format!("{:.12}", e.mass.re),
            format!("{:.12}", e.mass.im),
            pre,
            pim,
            format!("{:.3e}", e.miss),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn cmd_trace(cfg: &RunConfig, out: &Out) -> Result<()> {
    let curve = cfg.curve()?;
    let net = network::trace(&curve, cfg.theta, &TraceOptions::default())?;
    let walls = if cfg.sweep { network::detect_walls(&curve, 0.0, 2.0 * std::f64::consts::PI, &cfg.wall_options())? } else { vec![] };
    out.json("network.json", &net.to_json(&walls))?;
    out.text("network.svg", &network::render_svg(&net, &SvgStyle::default()))?;
    if cfg.sweep {
        out.text("walls.csv", &walls_csv(&walls)?)?;
    }
    Ok(())
}

fn cmd_trees(cfg: &RunConfig, out: &Out) -> Result<()> {
    let st = cfg.state()?;
    let coll = st.collection()?;
    let bip: Vec<_> = coll
        .trees
        .iter()
        .map(|t| json!({"tree": t.to_string(), "proper_bipartition": trees::bipartify(t).is_proper()}))
        .collect();
    out.json(
        "trees.json",
        &json!({
            "m": st.m,
            "states": st.states,
            "count": coll.trees.len(),
            "mutable_count": coll.mutable_part().len(),
            "collection": coll.to_json(),
            "bipartitions": bip,
        }),
    )
}

fn cmd_quiver(cfg: &RunConfig, out: &Out) -> Result<()> {
    let (_, q) = cluster::quiver_for_state(&cfg.state()?)?;
    out.text("quiver.dot", &q.to_dot())?;
    out.json("quiver.json", &q.to_json())
}

fn value_json(v: &Value<C>) -> serde_json::Value {
    match v {
        Value::Finite(z) => json!(pair(*z)),
        Value::Pole => json!("pole"),
    }
}

fn cmd_coords(cfg: &RunConfig, out: &Out) -> Result<()> {
    let st = cfg.state()?;
    let (coll, _) = cluster::quiver_for_state(&st)?;
    let chart = Chart::new(&coll)?;
    let classes = invariants::x_classes(&coll)?;
    let (source, asg) = match cfg.hbar {
        Some(h) => {
            let curve = cfg.curve()?;
            let hbar = C::new(h[0], h[1]);
            let p = OdeProblem::standard(&curve, hbar)?.with_label_near(hbar.arg()).with_config(cfg.ode_config());
            (json!({"ode_frame": {"hbar": h}}), ode::frame(&p)?.assignment())
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (json!({"random_assignment": {"seed": cfg.seed}}), VectorAssignment::random(st.m + 3, &mut rng))
        }
    };
    // Self-check: the coordinates are SL(3)-invariant functions of the frame.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5133);
    let moved = asg.transform(&invariants::random_sl3(&mut rng));
    let mut worst: f64 = 0.0;
    let rows = chart
        .exprs
        .iter()
        .map(|e| {
            let v = e.eval(&asg)?;
            if let (Value::Finite(a), Value::Finite(b)) = (&v, e.eval(&moved)?) {
                worst = worst.max(invariants::rel_residual(a, &b));
            }
            Ok(json!({
                "tree": e.tree.to_string(),
                "class": classes.get(&e.tree).map(|g| g.to_string()),
                "expression": e.to_json(),
                "value": value_json(&v),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let check = json!({"sl3_residual": worst, "tolerance": cfg.tolerances.identity, "pass": worst <= cfg.tolerances.identity});
    out.json("coords.json", &json!({"m": st.m, "states": st.states, "source": source, "coordinates": rows, "invariance": check}))
}

fn cmd_periods(cfg: &RunConfig, out: &Out) -> Result<()> {
    let curve = cfg.curve()?;
    let pt = PeriodTable::compute(&curve, cfg.tolerances.quadrature)?;
    out.json(
        "periods.json",
        &json!({
            "zeros": curve.zeros.iter().map(|z| pair(*z)).collect::<Vec<_>>(),
            "periods": pt.to_json(),
            "pairing": curve::pairing_matrix(&curve),
        }),
    )
}

fn cmd_bps(cfg: &RunConfig, out: &Out) -> Result<()> {
    let curve = cfg.curve()?;
    let walls = network::detect_walls(&curve, 0.0, 2.0 * std::f64::consts::PI, &cfg.wall_options())?;
    out.text("walls.csv", &walls_csv(&walls)?)?;
    let unmatched: Vec<f64> = walls.iter().filter(|w| w.class.is_none()).map(|w| w.theta_star).collect();
    let counts: Vec<_> = walls
        .iter()
        .filter_map(|w| w.class.as_ref())
        .flat_map(|g| [g.clone(), -g])
        .collect::<std::collections::BTreeSet<HomologyClass>>()
        .into_iter()
        .map(|g| json!({"class": g.to_string(), "omega": 1}))
        .collect();
    out.json(
        "bps.json",
        &json!({
            "wall_count": walls.len(),
            "walls": walls.iter().map(|w| w.to_json()).collect::<Vec<_>>(),
            "counts": counts,
            "unmatched": unmatched,
        }),
    )?;
    match unmatched.first() {
        Some(&t) => Err(Error::UnmatchedWall(t)),
        None => Ok(()),
    }
}

/// Tolerances of the RH verdicts.
const RH1_TOL: f64 = 1e-6;
const RH2_TOL: f64 = 0.01;
const RH3_TOL: f64 = 1e-4;

fn cmd_rh(cfg: &RunConfig, out: &Out) -> Result<bool> {
    let curve = cfg.curve()?;
    let bps = BpsStructure::almost_on_a_line(&curve)?;
    let m = bps.m();
    let oc = cfg.ode_config();
    let theta0 = bps.reference_angle()?;
    let basis: Vec<HomologyClass> = (1..m).flat_map(|i| [HomologyClass::gamma(m, i, 1, 2), HomologyClass::gamma(m, i, 2, 3)]).collect();
    let mut report = serde_json::Map::new();
    let mut pass = true;
    let run = |s: &str| cfg.suite == "all" || cfg.suite == s;
    if run("rh1") {
        let mut rows = vec![];
        for i in 1..m {
            for (a, b) in [(1, 2), (2, 3), (1, 3)] {
                let ray = rh::wrap(bps.periods.period(&HomologyClass::gamma(m, i, a, b)).arg());
                let r = rh::check_rh1(&bps, ray, &[0.3, 0.5, 1.0], &oc)?;
                pass &= r.max_residual < RH1_TOL;
                rows.push(serde_json::to_value(&r).map_err(|e| Error::Io(e.to_string()))?);
            }
        }
        report.insert("rh1".into(), json!({"tolerance": RH1_TOL, "reports": rows}));
    }
    if run("rh2") {
        let mut classes = basis.clone();
        classes.extend((1..m).map(|i| HomologyClass::gamma(m, i, 1, 3)));
        let moduli = rh::small_hbar_grid(cfg.hbar_lo, cfg.hbar_hi, cfg.hbar_count);
        let rs = rh::check_rh2(&bps, theta0, &classes, &moduli, &oc)?;
        pass &= rs.iter().all(|r| r.slope_error < RH2_TOL && r.monotone);
        report.insert("rh2".into(), json!({"tolerance": RH2_TOL, "theta": theta0, "reports": rs}));
    }
    if run("rh3") {
        let rs = rh::check_rh3(&bps, theta0, &basis, &[10.0, 20.0, 40.0, 80.0], &oc)?;
        pass &= rs.iter().all(|r| r.cauchy && r.limit_error < RH3_TOL && r.shift_error < RH3_TOL);
        report.insert("rh3".into(), json!({"tolerance": RH3_TOL, "theta": theta0, "reports": rs}));
    }
    report.insert("pass".into(), json!(pass));
    out.json("rh.json", &serde_json::Value::Object(report))?;
    Ok(pass)
}

fn cmd_section6(cfg: &RunConfig, out: &Out) -> Result<()> {
    let curve = cfg.curve()?;
    let net = network::trace(&curve, cfg.theta, &TraceOptions::default())?;
    let walls = network::detect_walls(&curve, 0.0, 2.0 * std::f64::consts::PI, &cfg.wall_options())?;
    out.text("network.svg", &network::render_svg(&net, &SvgStyle::default()))?;
    out.text("walls.csv", &walls_csv(&walls)?)?;
    let rows = trees::example_sequence();
    let qs = cluster::example_quivers()?;
    for (k, q) in qs.iter().enumerate() {
        out.text(&format!("quiver_theta{k}.dot"), &q.to_dot())?;
    }
    let mut ahead: Vec<&WallEvent> = walls.iter().collect();
    ahead.sort_by(|a, b| (a.theta_star - cfg.theta).rem_euclid(2.0 * std::f64::consts::PI).total_cmp(&(b.theta_star - cfg.theta).rem_euclid(2.0 * std::f64::consts::PI)));
    let steps: Vec<_> = rows
        .windows(2)
        .zip(&ahead)
        .map(|(w, wall)| {
            let gone: Vec<_> = w[0].trees.difference(&w[1].trees).map(|t| t.to_string()).collect();
            let came: Vec<_> = w[1].trees.difference(&w[0].trees).map(|t| t.to_string()).collect();
            json!({"wall": wall.to_json(), "removed": gone, "added": came})
        })
        .collect();
    out.json(
        "section6.json",
        &json!({
            "theta0": cfg.theta,
            "wall_count": walls.len(),
            "chambers": rows.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            "steps": steps,
            "network": net.to_json(&walls),
        }),
    )
}

/// Runs the CLI on the given arguments and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, &cli.flags) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("error: verification failed (see report)");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_chamber_diagnostic() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(command: Command, flags: &Flags) -> Result<bool> {
    let cfg = RunConfig::resolve(command, flags)?;
    let out = Out::new(&cfg.out_dir)?;
    out.json("config.json", &serde_json::to_value(&cfg).map_err(|e| Error::Io(e.to_string()))?)?;
    par::with_pool(cfg.threads, || match command {
        Command::Trace => cmd_trace(&cfg, &out).map(|_| true),
        Command::Trees => cmd_trees(&cfg, &out).map(|_| true),
        Command::Quiver => cmd_quiver(&cfg, &out).map(|_| true),
        Command::Coords => cmd_coords(&cfg, &out).map(|_| true),
        Command::Periods => cmd_periods(&cfg, &out).map(|_| true),
        Command::Bps => cmd_bps(&cfg, &out).map(|_| true),
        Command::Rh => cmd_rh(&cfg, &out),
        Command::Section6 => cmd_section6(&cfg, &out).map(|_| true),
    })
}
