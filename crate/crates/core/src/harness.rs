//! Report and sweep drivers behind the command-line front end.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::chsh::{holevo_bound, mvci, optimal_chsh_settings, teleportation_fidelity_bound, ChshResult};
use crate::error::{Error, Result};
use crate::filter::{maximize_filtered_mvci_in, FilterResult};
use crate::pauli::{correlation_data, ppt_min_eigenvalue, rho1, rho2, werner, DensityMatrix, StateFile};
use crate::vertesi::{maximize_vertesi_bound, VertesiOptions, VertesiResult};

/// One-parameter state families with built-in constructors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StateFamily {
    Werner,
    Rho1 { r: f64 },
    Rho2,
}

impl StateFamily {
    pub fn state(&self, p: f64) -> Result<DensityMatrix> {
        match *self {
            StateFamily::Werner => werner(p),
            StateFamily::Rho1 { r } => rho1(p, r),
            StateFamily::Rho2 => rho2(p),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StateFamily::Werner => "werner",
            StateFamily::Rho1 { .. } => "rho1",
            StateFamily::Rho2 => "rho2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Computation {
    Chsh,
    ChshFiltered,
    Vertesi,
    VertesiFiltered,
}

impl FromStr for Computation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chsh" => Ok(Computation::Chsh),
            "chsh-filtered" => Ok(Computation::ChshFiltered),
            "vertesi" => Ok(Computation::Vertesi),
            "vertesi-filtered" => Ok(Computation::VertesiFiltered),
            other => Err(Error::InvalidInput(format!(
                "unknown computation '{other}' (chsh | chsh-filtered | vertesi | vertesi-filtered)"
            ))),
        }
    }
}

impl Computation {
    fn extra_columns(&self) -> &'static [&'static str] {
        match self {
            Computation::Chsh => &["tau1", "tau2", "ppt_min"],
            Computation::ChshFiltered => &["x", "y", "unfiltered"],
            Computation::Vertesi => &["a", "b", "c", "d"],
            Computation::VertesiFiltered => &["x", "y", "a", "b", "c", "d"],
        }
    }
}

/// Formats with 12 significant digits in plain decimal notation.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v == 0.0 { "0".into() } else { format!("{v}") };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).clamp(0, 40) as usize;
    let s = format!("{:.*}", decimals, v);
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.');
        if trimmed == "-0" { "0".into() } else { trimmed.to_string() }
    } else {
        s
    }
}

/// One evaluated sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub value: f64,
    pub violating: bool,
    pub extra: Vec<f64>,
}

fn evaluate(family: StateFamily, computation: Computation, opts: &VertesiOptions, p: f64) -> Result<SweepRow> {
    let rho = family.state(p)?;
    let row = match computation {
        Computation::Chsh => {
            let r = mvci(&correlation_data(&rho).t());
            SweepRow {
                param: p,
                value: r.value,
                violating: r.violating,
                extra: vec![r.tau1, r.tau2, ppt_min_eigenvalue(&rho)],
            }
        }
        Computation::ChshFiltered => {
            let r = maximize_filtered_mvci_in(&rho, &opts.optimizer, opts.strengths);
            SweepRow {
                param: p,
                value: r.value,
                violating: r.value > 2.0,
                extra: vec![r.params.x, r.params.y, mvci(&correlation_data(&rho).t()).value],
            }
        }
        Computation::Vertesi | Computation::VertesiFiltered => {
            let filtered = computation == Computation::VertesiFiltered;
            let r = maximize_vertesi_bound(&rho, filtered, opts);
            let w = r.window;
            let mut extra = Vec::new();
            if filtered {
                let fp = r.filter.unwrap_or_else(crate::filter::FilterParams::identity);
                extra.extend([fp.x, fp.y]);
            }
            extra.extend([w.a, w.b, w.c, w.d]);
            SweepRow {
                param: p,
                value: r.bound,
                violating: r.violating,
                extra,
            }
        }
    };
    Ok(row)
}

/// A parameter sweep over one state family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub family: StateFamily,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub computation: Computation,
    pub options: VertesiOptions,
    /// Bisection tolerance for the onset of violation.
    pub onset_tol: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::InvalidInput(format!("steps must be >= 2, got {}", self.steps)));
        }
        if !(self.start < self.stop) {
            return Err(Error::InvalidInput(format!(
                "start {} must be below stop {}",
                self.start, self.stop
            )));
        }
        self.family.state(self.start)?;
        self.family.state(self.stop)?;
        Ok(())
    }

    pub fn params(&self) -> Vec<f64> {
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.stop } else { self.start + h * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub onset: Option<f64>,
}

/// Bisects between `lo` and `hi`, whose predicate values differ, down to `tol`.
/// Returns the end of the final bracket on which the predicate holds.
pub fn bisect_onset<F>(pred: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<bool>,
{
    let at_lo = pred(lo)?;
    let at_hi = pred(hi)?;
    if at_lo == at_hi {
        return Err(Error::InvalidInput(format!(
            "predicate does not change between {lo} and {hi}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if at_hi { hi } else { lo })
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let rows = spec
        .params()
        .par_iter()
        .map(|&p| evaluate(spec.family, spec.computation, &spec.options, p))
        .collect::<Result<Vec<_>>>()?;
    let onset = match rows.windows(2).find(|w| w[0].violating != w[1].violating) {
        Some(w) => Some(bisect_onset(
            |p| evaluate(spec.family, spec.computation, &spec.options, p).map(|r| r.violating),
            w[0].param,
            w[1].param,
            spec.onset_tol,
        )?),
        None => None,
    };
    Ok(SweepOutput { rows, onset })
}

pub fn sweep_csv(spec: &SweepSpec, out: &SweepOutput) -> String {
    let mut s = String::from("param,value,violating");
    for col in spec.computation.extra_columns() {
        s.push(',');
        s.push_str(col);
    }
    s.push('\n');
    for row in &out.rows {
        let _ = write!(s, "{},{},{}", format_sig(row.param), format_sig(row.value), row.violating);
        for v in &row.extra {
            let _ = write!(s, ",{}", format_sig(*v));
        }
        s.push('\n');
    }
    match out.onset {
        Some(p) => {
            let _ = writeln!(s, "# onset={}", format_sig(p));
        }
        None => s.push_str("# onset=none\n"),
    }
    s
}

/// What `analyze` prints.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub state: StateFile,
    pub mvci: ChshResult,
    pub ppt_min_eigenvalue: f64,
    pub entangled: bool,
    pub teleportation_fidelity_bound: f64,
    pub holevo_bound: Option<f64>,
    pub chsh_settings: Option<[[f64; 3]; 4]>,
    pub filtered: Option<FilterResult>,
    pub filtered_teleportation_fidelity_bound: Option<f64>,
    pub filtered_holevo_bound: Option<f64>,
    pub vertesi: Option<VertesiResult>,
    pub vertesi_filtered: Option<VertesiResult>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub filtered: bool,
    pub vertesi: bool,
    pub vertesi_options: VertesiOptions,
}

pub fn analyze(rho: &DensityMatrix, opts: &AnalyzeOptions) -> Result<AnalyzeReport> {
    let tt = correlation_data(rho);
    let chsh = mvci(&tt.t());
    let ppt = ppt_min_eigenvalue(rho);
    let settings = optimal_chsh_settings(&tt.t()).ok().map(|s| {
        [s.a1, s.a2, s.b1, s.b2].map(|v| [v.x, v.y, v.z])
    });
    let filtered = opts
        .filtered
        .then(|| maximize_filtered_mvci_in(rho, &opts.vertesi_options.optimizer, opts.vertesi_options.strengths));
    let vertesi = opts
        .vertesi
        .then(|| maximize_vertesi_bound(rho, false, &opts.vertesi_options));
    let vertesi_filtered = (opts.vertesi && opts.filtered)
        .then(|| maximize_vertesi_bound(rho, true, &opts.vertesi_options));
    Ok(AnalyzeReport {
        state: rho.to_state_file(),
        mvci: chsh,
        ppt_min_eigenvalue: ppt,
        entangled: ppt < 0.0,
        teleportation_fidelity_bound: teleportation_fidelity_bound(chsh.value)?,
        holevo_bound: holevo_bound(chsh.value).ok(),
        chsh_settings: settings,
        filtered_teleportation_fidelity_bound: filtered
            .as_ref()
            .and_then(|f| teleportation_fidelity_bound(f.value).ok()),
        filtered_holevo_bound: filtered.as_ref().and_then(|f| holevo_bound(f.value).ok()),
        filtered,
        vertesi,
        vertesi_filtered,
    })
}

pub fn render_report(r: &AnalyzeReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "MVCI                 {:.4}  (tau1 {:.6}, tau2 {:.6}, violating: {})",
        r.mvci.value, r.mvci.tau1, r.mvci.tau2, r.mvci.violating);
    let _ = writeln!(s, "PPT min eigenvalue   {:.6}  ({})",
        r.ppt_min_eigenvalue, if r.entangled { "entangled" } else { "separable" });
    let _ = writeln!(s, "teleportation bound  {:.6}", r.teleportation_fidelity_bound);
    match r.holevo_bound {
        Some(h) => { let _ = writeln!(s, "Holevo bound         {:.6}", h); }
        None => s.push_str("Holevo bound         n/a (MVCI < 2)\n"),
    }
    if let Some(f) = &r.filtered {
        let p = f.params;
        let _ = writeln!(s, "filtered MVCI        {:.4}  (violating: {}, converged: {})", f.value, f.value > 2.0, f.converged);
        let _ = writeln!(s, "  filter             x {:.6}  y {:.6}", p.x, p.y);
        let _ = writeln!(s, "  euler A            {:.6} {:.6} {:.6}", p.euler_a[0], p.euler_a[1], p.euler_a[2]);
        let _ = writeln!(s, "  euler B            {:.6} {:.6} {:.6}", p.euler_b[0], p.euler_b[1], p.euler_b[2]);
        if let Some(h) = r.filtered_holevo_bound {
            let _ = writeln!(s, "  Holevo bound       {:.6}", h);
        }
    }
    for (label, v) in [("Vertesi bound", &r.vertesi), ("filtered Vertesi", &r.vertesi_filtered)] {
        if let Some(v) = v {
            let w = v.window;
            let _ = writeln!(s, "{:<20} {:.4}  (violating: {}, a {:.4} b {:.4} c {:.4} d {:.4}, n {})",
                label, v.bound, v.violating, w.a, w.b, w.c, w.d, v.quad_n);
            if let Some(fp) = v.filter {
                let _ = writeln!(s, "  filter             x {:.6}  y {:.6}", fp.x, fp.y);
            }
        }
    }
    s
}
