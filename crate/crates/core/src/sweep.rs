//! Parameter sweeps of the non-Markovianity and the speed-limit ratio, and
//! localisation of the coupling or detuning at which backflow sets in.

use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{evaluate, non_markovianity};
use crate::spectral::{Family, SpectralModel, SystemParams};

/// Level of `N` above which the dynamics counts as non-Markovian.
pub const DEFAULT_THRESHOLD: f64 = 1e-6;
/// Final bisection width, in units of the swept parameter.
pub const BRACKET_WIDTH: f64 = 1e-3;
pub const DEFAULT_STEPS: usize = 400;

pub const CSV_HEADER: &str = "param,n_blp,qslt_ratio,final_pop";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepTarget {
    /// Atom–cavity coupling `Ω`.
    Coupling,
    /// Lorentzian detuning `δ`.
    Delta,
}

impl fmt::Display for SweepTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepTarget::Coupling => "coupling",
            SweepTarget::Delta => "delta",
        })
    }
}

impl FromStr for SweepTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupling" | "omega" | "Omega" => Ok(SweepTarget::Coupling),
            "delta" => Ok(SweepTarget::Delta),
            other => Err(Error::InvalidParameter {
                name: "sweep-param",
                reason: format!("expected `coupling` or `delta`, got `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub target: SweepTarget,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub tau: f64,
    /// Fixed parameters; the swept one is overwritten per grid point.
    pub base: SystemParams,
}

impl SweepSpec {
    pub fn new(
        target: SweepTarget,
        (lo, hi): (f64, f64),
        steps: usize,
        tau: f64,
        base: SystemParams,
    ) -> Result<Self> {
        let spec = Self {
            target,
            lo,
            hi,
            steps,
            tau,
            base,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return bad("range", format!("need lo < hi, got {}:{}", self.lo, self.hi));
        }
        if self.steps < 2 {
            return bad("steps", format!("need at least 2, got {}", self.steps));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau", format!("must be finite and > 0, got {}", self.tau));
        }
        match (self.target, self.base.model.family()) {
            (SweepTarget::Delta, Family::Ohmic) => {
                return bad("sweep-param", "delta sweeps need a lorentzian reservoir".into())
            }
            (SweepTarget::Coupling, _) if self.lo < 0.0 => {
                return bad("range", format!("coupling must be >= 0, got lo = {}", self.lo))
            }
            _ => {}
        }
        self.base.validate()?;
        self.system_at(self.lo).validate()?;
        self.system_at(self.hi).validate()
    }

    /// Uniform grid including both end points.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.steps - 1;
        let h = (self.hi - self.lo) / n as f64;
        (0..=n)
            .map(|k| if k == n { self.hi } else { self.lo + h * k as f64 })
            .collect()
    }

    pub fn system_at(&self, value: f64) -> SystemParams {
        match self.target {
            SweepTarget::Coupling => self.base.with_coupling(value),
            SweepTarget::Delta => self.base.with_delta(value),
        }
    }
}

/// One grid point. A failed evaluation keeps its place in the table with NaN
/// metrics and the failure reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub n_blp: f64,
    pub qslt_ratio: f64,
    pub final_pop: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

pub fn evaluate_point(spec: &SweepSpec, value: f64) -> SweepRow {
    let sys = spec.system_at(value);
    match sys.validate().and_then(|_| evaluate(&sys, spec.tau)) {
        Ok(m) => SweepRow {
            param: value,
            n_blp: m.n_blp,
            qslt_ratio: m.qslt_ratio,
            final_pop: m.final_pop,
            error: None,
        },
        Err(e) => SweepRow {
            param: value,
            n_blp: f64::NAN,
            qslt_ratio: f64::NAN,
            final_pop: f64::NAN,
            error: Some(e.reason().to_string()),
        },
    }
}

/// Evaluates every grid point of `spec`, in parallel on the current rayon
/// pool. Rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    Ok(spec
        .grid()
        .into_par_iter()
        .map(|p| evaluate_point(spec, p))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub value: f64,
    pub bracket: (f64, f64),
    pub threshold: f64,
    pub tau: f64,
}

impl CriticalPoint {
    pub fn width(&self) -> f64 {
        self.bracket.1 - self.bracket.0
    }
}

/// First value of the swept parameter at which `N > threshold`, bisected to
/// [`BRACKET_WIDTH`].
pub fn find_critical(spec: &SweepSpec, threshold: f64) -> Result<CriticalPoint> {
    find_critical_with(spec, threshold, BRACKET_WIDTH)
}

/// As [`find_critical`] with an explicit final bracket width.
///
/// The spec grid is scanned for the first point where the predicate holds;
/// bisection then runs between it and its predecessor.
pub fn find_critical_with(spec: &SweepSpec, threshold: f64, width: f64) -> Result<CriticalPoint> {
    spec.validate()?;
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "threshold",
            reason: format!("must be finite and >= 0, got {threshold}"),
        });
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "width",
            reason: format!("must be finite and > 0, got {width}"),
        });
    }
    let above = |p: f64| -> Result<bool> {
        Ok(non_markovianity(&spec.system_at(p), spec.tau)? > threshold)
    };
    let no_bracket = || Error::NoBracket {
        lo: spec.lo,
        hi: spec.hi,
        threshold,
    };

    let grid = spec.grid();
    let flags: Vec<bool> = grid
        .par_iter()
        .map(|&p| above(p))
        .collect::<Result<_>>()?;
    if flags[0] {
        return Err(no_bracket());
    }
    let k = flags.iter().position(|&f| f).ok_or_else(no_bracket)?;

    let (mut a, mut b) = (grid[k - 1], grid[k]);
    while b - a > width {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if above(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(CriticalPoint {
        value: 0.5 * (a + b),
        bracket: (a, b),
        threshold,
        tau: spec.tau,
    })
}

// ---------------------------------------------------------------------------
// figure datasets
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
}

impl FigureId {
    pub const ALL: [FigureId; 3] = [FigureId::Fig1, FigureId::Fig2, FigureId::Fig3];

    pub fn default_tau(self) -> f64 {
        match self {
            FigureId::Fig1 | FigureId::Fig2 => 1.0,
            FigureId::Fig3 => 8.73,
        }
    }

    pub fn target(self) -> SweepTarget {
        match self {
            FigureId::Fig2 => SweepTarget::Delta,
            _ => SweepTarget::Coupling,
        }
    }

    pub fn range(self) -> (f64, f64) {
        match self {
            FigureId::Fig1 => (0.0, 4.0),
            FigureId::Fig2 => (0.0, 25.0),
            FigureId::Fig3 => (0.0, 1.0),
        }
    }

    /// `(label, fixed parameters)` for each curve in the figure.
    pub fn curves(self) -> Vec<(String, SystemParams)> {
        let lorentzian = |lambda: f64, coupling: f64| {
            SystemParams::lorentzian(lambda, 0.0, coupling).expect("captioned parameters are valid")
        };
        match self {
            FigureId::Fig1 => [5.0, 0.01]
                .iter()
                .map(|&l| (format!("lambda-{l}"), lorentzian(l, 0.0)))
                .collect(),
            FigureId::Fig2 => [5.0, 3.0, 1.0, 0.5]
                .iter()
                .map(|&l| (format!("lambda-{l}"), lorentzian(l, 0.01)))
                .collect(),
            FigureId::Fig3 => [10.0, 2.0, 0.3, 0.1]
                .iter()
                .map(|&wc| {
                    let sys = SystemParams::ohmic(wc, 0.0).expect("captioned parameters are valid");
                    (format!("omega_c-{wc}"), sys)
                })
                .collect(),
        }
    }

    pub fn specs(self, tau: f64, steps: usize) -> Result<Vec<(String, SweepSpec)>> {
        self.curves()
            .into_iter()
            .map(|(label, base)| Ok((label, SweepSpec::new(self.target(), self.range(), steps, tau, base)?)))
            .collect()
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
        })
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(FigureId::Fig1),
            "fig2" => Ok(FigureId::Fig2),
            "fig3" => Ok(FigureId::Fig3),
            other => Err(Error::UnknownFigure(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Curve {
    pub label: String,
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    /// Located onset, or the failure reason.
    pub critical: std::result::Result<CriticalPoint, String>,
}

#[derive(Debug, Clone)]
pub struct FigureDataset {
    pub figure: FigureId,
    pub tau: f64,
    pub steps: usize,
    pub threshold: f64,
    pub curves: Vec<Curve>,
}

/// Every captioned curve of `figure` on the default grid.
pub fn figure_dataset(figure: FigureId, tau: f64) -> Result<FigureDataset> {
    figure_dataset_with(figure, tau, DEFAULT_STEPS, DEFAULT_THRESHOLD)
}

pub fn figure_dataset_with(
    figure: FigureId,
    tau: f64,
    steps: usize,
    threshold: f64,
) -> Result<FigureDataset> {
    let curves = figure
        .specs(tau, steps)?
        .into_iter()
        .map(|(label, spec)| {
            Ok(Curve {
                rows: run_sweep(&spec)?,
                critical: find_critical(&spec, threshold).map_err(|e| e.reason().to_string()),
                label,
                spec,
            })
        })
        .collect::<Result<_>>()?;
    Ok(FigureDataset {
        figure,
        tau,
        steps,
        threshold,
        curves,
    })
}

// ---------------------------------------------------------------------------
// output
// ---------------------------------------------------------------------------

/// 12 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.11e}")
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            format_number(r.param),
            format_number(r.n_blp),
            format_number(r.qslt_ratio),
            format_number(r.final_pop)
        )?;
    }
    Ok(())
}

/// One JSON object per row, with the same rounding as the CSV output.
pub fn write_jsonl<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    for r in rows {
        let num = |x: f64| -> serde_json::Value {
            format_number(x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(serde_json::Value::Null, serde_json::Value::Number)
        };
        let mut obj = serde_json::Map::new();
        obj.insert("param".into(), num(r.param));
        obj.insert("n_blp".into(), num(r.n_blp));
        obj.insert("qslt_ratio".into(), num(r.qslt_ratio));
        obj.insert("final_pop".into(), num(r.final_pop));
        if let Some(e) = &r.error {
            obj.insert("error".into(), e.clone().into());
        }
        writeln!(out, "{}", serde_json::Value::Object(obj))?;
    }
    Ok(())
}

/// Ordered `key = value` text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Adds the fixed parameters of `sys` under the config keys.
    pub fn push_system(&mut self, sys: &SystemParams) {
        match sys.model {
            SpectralModel::Lorentzian {
                gamma0,
                lambda,
                delta,
            } => {
                self.push("family", "lorentzian");
                self.push("gamma0", gamma0);
                self.push("lambda", lambda);
                self.push("delta", delta);
            }
            SpectralModel::Ohmic { omega_c } => {
                self.push("family", "ohmic");
                self.push("omega-c", omega_c);
            }
        }
        self.push("omega0", sys.omega0);
        self.push("coupling", sys.coupling);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::InvalidParameter {
                name: "config",
                reason: format!("line {}: expected `key = value`", i + 1),
            })?;
            m.push(k.trim(), v.trim());
        }
        Ok(m)
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1_spec(lambda: f64, steps: usize) -> SweepSpec {
        SweepSpec::new(
            SweepTarget::Coupling,
            (0.0, 4.0),
            steps,
            1.0,
            SystemParams::lorentzian(lambda, 0.0, 0.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn spec_validation() {
        let base = SystemParams::lorentzian(5.0, 0.0, 0.0).unwrap();
        assert!(SweepSpec::new(SweepTarget::Coupling, (1.0, 1.0), 10, 1.0, base).is_err());
        assert!(SweepSpec::new(SweepTarget::Coupling, (0.0, 1.0), 1, 1.0, base).is_err());
        assert!(SweepSpec::new(SweepTarget::Coupling, (0.0, 1.0), 10, 0.0, base).is_err());
        assert!(SweepSpec::new(SweepTarget::Coupling, (-1.0, 1.0), 10, 1.0, base).is_err());
        let ohmic = SystemParams::ohmic(1.0, 0.0).unwrap();
        assert!(SweepSpec::new(SweepTarget::Delta, (0.0, 1.0), 10, 1.0, ohmic).is_err());
        assert!(SweepSpec::new(SweepTarget::Delta, (-3.0, 3.0), 10, 1.0, base).is_ok());
    }

    #[test]
    fn grid_hits_both_ends() {
        let g = fig1_spec(5.0, 401).grid();
        assert_eq!(g.len(), 401);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[400], 4.0);
        assert!((g[100] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weak_coupling_sweep_onset() {
        let rows = run_sweep(&fig1_spec(5.0, 81)).unwrap();
        for r in &rows {
            assert!(r.is_ok());
            if r.param < 1.55 {
                assert_eq!(r.n_blp, 0.0, "{}", r.param);
                assert!((r.qslt_ratio - 1.0).abs() < 1e-12);
            } else if r.param > 1.6 {
                assert!(r.n_blp > 0.0 && r.qslt_ratio < 1.0);
            }
        }
    }

    #[test]
    fn strong_cavity_has_larger_backflow() {
        let weak = run_sweep(&fig1_spec(5.0, 41)).unwrap();
        let strong = run_sweep(&fig1_spec(0.01, 41)).unwrap();
        for (w, s) in weak.iter().zip(&strong) {
            if w.param > 1.6 {
                assert!(s.n_blp > w.n_blp, "at {}", w.param);
            }
        }
    }

    #[test]
    fn critical_point_weak_coupling() {
        let c = find_critical(&fig1_spec(5.0, 41), DEFAULT_THRESHOLD).unwrap();
        assert!((c.value - 1.58).abs() < 0.02, "{c:?}");
        assert!(c.width() <= BRACKET_WIDTH);
        let spec = fig1_spec(5.0, 41);
        let n = |p: f64| non_markovianity(&spec.system_at(p), 1.0).unwrap();
        assert!(n(c.value - c.width()) <= c.threshold);
        assert!(n(c.value + c.width()) > c.threshold);
    }

    #[test]
    fn detuning_critical_point() {
        let spec = SweepSpec::new(
            SweepTarget::Delta,
            (0.0, 25.0),
            101,
            1.0,
            SystemParams::lorentzian(0.5, 0.0, 0.01).unwrap(),
        )
        .unwrap();
        let c = find_critical(&spec, DEFAULT_THRESHOLD).unwrap();
        assert!((c.value - 3.5).abs() < 0.35, "{c:?}");
    }

    #[test]
    fn unbracketed_request() {
        let spec = SweepSpec::new(
            SweepTarget::Coupling,
            (0.0, 1.0),
            11,
            1.0,
            SystemParams::lorentzian(5.0, 0.0, 0.0).unwrap(),
        )
        .unwrap();
        let err = find_critical(&spec, DEFAULT_THRESHOLD).unwrap_err();
        assert_eq!(err.reason(), "no-bracket");
    }

    #[test]
    fn failed_points_stay_in_place() {
        let spec = fig1_spec(5.0, 3);
        let mut rows = run_sweep(&spec).unwrap();
        rows[1] = SweepRow {
            param: 2.0,
            n_blp: f64::NAN,
            qslt_ratio: f64::NAN,
            final_pop: f64::NAN,
            error: Some("quadrature-nonconvergence".into()),
        };
        let mut csv = Vec::new();
        write_csv(&rows, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0.00000000000e0,0.00000000000e0,1.00000000000e0,6.69868540070e-1");
        assert_eq!(lines[2], "2.00000000000e0,NaN,NaN,NaN");

        let mut jl = Vec::new();
        write_jsonl(&rows, &mut jl).unwrap();
        let jl = String::from_utf8(jl).unwrap();
        assert_eq!(jl.lines().count(), 3);
        let v: serde_json::Value = serde_json::from_str(jl.lines().nth(1).unwrap()).unwrap();
        assert!(v["n_blp"].is_null());
        assert_eq!(v["error"], "quadrature-nonconvergence");
    }

    #[test]
    fn figure_ids() {
        assert_eq!("fig2".parse::<FigureId>().unwrap(), FigureId::Fig2);
        assert!(matches!("fig4".parse::<FigureId>(), Err(Error::UnknownFigure(_))));
        assert_eq!(FigureId::Fig1.curves().len(), 2);
        assert_eq!(FigureId::Fig2.curves().len(), 4);
        assert_eq!(FigureId::Fig3.curves().len(), 4);
        for f in FigureId::ALL {
            assert_eq!(f.to_string().parse::<FigureId>().unwrap(), f);
        }
    }

    #[test]
    fn manifest_round_trip() {
        let mut m = Manifest::default();
        m.push("command", "sweep");
        m.push_system(&SystemParams::ohmic(0.3, 0.2).unwrap());
        m.push("tau", 8.73);
        let back = Manifest::parse(&format!("# header\n\n{}", m.render())).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.get("omega-c"), Some("0.3"));
        assert!(Manifest::parse("no equals sign").is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
