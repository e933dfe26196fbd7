use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use specshift::dirac::{ssf_dirac, witten_dirac, ModelSpec, PeriodicDiracModel};
use specshift::flow::flow_report;
use specshift::model::{ptf_residual, ptf_rhs};
use specshift::pushnitski::{pushnitski_check, Integrand, LebesguePointEstimator};
use specshift::scenario::{PairFile, Scenario};
use specshift::witten::{
    witten_closed_form, witten_from_ssf, witten_resolvent, witten_semigroup, Status, WittenEstimate,
};
use specshift::{ssf_count, ssf_det, Error, Profile, ProfileKind, Warning};

use crate::{SsfMethod, WittenMethod};

/// Radius of the breakpoint neighborhoods left out of the Pushnitski contract.
const BREAKPOINT_RADIUS: f64 = 1e-2;
const PUSHNITSKI_CONTRACT: f64 = 0.1;
const FREDHOLM_TOL: f64 = 1e-10;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: String) -> Self {
        Failure { code: 2, message }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DimensionMismatch { .. }
            | Error::NotHermitian { .. }
            | Error::Domain(_)
            | Error::InvalidInput(_)
            | Error::Truncation { .. }
            | Error::Json(_)
            | Error::Io(_) => 2,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

pub struct Output {
    pub json: Value,
    pub csv: String,
    pub warnings: Vec<String>,
    pub converged: bool,
    pub failed_contract: bool,
    pub contract_message: String,
}

impl Output {
    fn new(payload: impl Serialize, csv: String) -> Self {
        Output {
            json: serde_json::to_value(payload).expect("payload serializes"),
            csv,
            warnings: Vec::new(),
            converged: true,
            failed_contract: false,
            contract_message: String::new(),
        }
    }

    fn warn(mut self, warnings: &[Warning]) -> Self {
        for w in warnings {
            let s = w.to_string();
            if !self.warnings.contains(&s) {
                self.warnings.push(s);
            }
        }
        self
    }
}

/// `lo:hi:n` with `n >= 2` points, endpoints included.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::input(format!("grid must look like lo:hi:n, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n < 2 || hi <= lo || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
}

fn csv_rows<const N: usize>(header: &str, rows: impl Iterator<Item = [f64; N]>) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn ssf(text: &str, method: SsfMethod, eps: Option<f64>, grid: Option<&str>) -> Result<Output, Failure> {
    let (h0, h) = PairFile::parse(text)?.operators()?;
    match method {
        SsfMethod::Count => {
            let xi = ssf_count(&h0, &h)?;
            let csv = csv_rows("lo,hi,value", xi.segments().map(|(a, b, v)| [a, b, v]));
            Ok(Output::new(&xi, csv))
        }
        SsfMethod::Det => {
            let grid = match grid {
                Some(g) => parse_grid(g)?,
                None => {
                    let all = h0.eigenvalues().iter().chain(h.eigenvalues());
                    let lo = all.clone().fold(f64::INFINITY, |m, &e| m.min(e)) - 1.0;
                    let hi = all.fold(f64::NEG_INFINITY, |m, &e| m.max(e)) + 1.0;
                    parse_grid(&format!("{lo}:{hi}:201"))?
                }
            };
            let mut values = Vec::with_capacity(grid.len());
            let mut warnings = Vec::new();
            for &l in &grid {
                let d = ssf_det(&h0, &h, l, eps)?;
                values.push(d.value);
                warnings.extend(d.warnings);
            }
            let csv = csv_rows("lambda,xi", grid.iter().zip(&values).map(|(&l, &v)| [l, v]));
            Ok(Output::new(json!({"lambda": grid, "xi": values}), csv).warn(&warnings))
        }
    }
}

fn witten_csv(e: &WittenEstimate) -> String {
    let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let status = serde_json::to_value(e.status).expect("status serializes");
    format!(
        "w_r,w_s,error,status\n{},{},{},{}\n",
        num(e.w_r),
        num(e.w_s),
        e.extrapolation_error,
        status.as_str().unwrap_or_default()
    )
}

fn exact(value: f64, warnings: Vec<Warning>) -> WittenEstimate {
    WittenEstimate {
        w_r: Some(value),
        w_s: Some(value),
        delta_r_curve: None,
        delta_s_curve: None,
        extrapolation_error: 0.0,
        status: if warnings.is_empty() { Status::Converged } else { Status::Warned },
        warnings,
    }
}

pub fn witten(text: &str, method: WittenMethod, tol: Option<f64>) -> Result<Output, Failure> {
    let scenario = Scenario::parse(text)?;
    let estimate = match method {
        WittenMethod::Closed => {
            let path = scenario.operator_path()?;
            let c = witten_closed_form(path.a_plus(), path.a_minus())?;
            exact(c.value.to_f64(), c.warnings)
        }
        WittenMethod::Ssf => {
            let path = scenario.operator_path()?;
            let xi = ssf_count(path.a_minus(), path.a_plus())?;
            let estimator = LebesguePointEstimator {
                tol: tol.unwrap_or(LebesguePointEstimator::default().tol),
                ..Default::default()
            };
            exact(witten_from_ssf(Integrand::Step(&xi), &estimator)?, Vec::new())
        }
        WittenMethod::Resolvent => {
            let (_, d) = scenario.assemble()?;
            witten_resolvent(&d, -1.0, 0.5, tol.unwrap_or(0.01))?
        }
        WittenMethod::Semigroup => {
            let (_, d) = scenario.assemble()?;
            witten_semigroup(&d, 4.0, d.trust_horizon(), tol.unwrap_or(0.01))?
        }
    };
    let mut out = Output::new(&estimate, witten_csv(&estimate)).warn(&estimate.warnings);
    out.converged = estimate.is_converged();
    Ok(out)
}

pub fn flow(text: &str) -> Result<Output, Failure> {
    let (path, d) = Scenario::parse(text)?.assemble()?;
    let r = flow_report(&path, &d, FREDHOLM_TOL)?;
    let ids = r.identities;
    let csv = format!(
        "flow,partition_size,max_gap,trace_difference,ssf_at_zero,discrete_index,pair_index\n{},{},{},{},{},{},{}\n",
        r.flow, r.partition_size, r.max_gap, ids.trace_difference, ids.ssf_at_zero, ids.discrete_index, ids.pair_index
    );
    Ok(Output::new(&r, csv).warn(d.warnings()))
}

pub fn ptf(text: &str, zs: &[f64]) -> Result<Output, Failure> {
    let (path, d) = Scenario::parse(text)?.assemble()?;
    let mut rows = Vec::new();
    let mut warnings = d.warnings().to_vec();
    for &z in zs {
        let zc = Complex64::new(z, 0.0);
        let lhs = d.resolvent_trace_diff(zc)?;
        warnings.extend(lhs.warnings);
        let rhs = ptf_rhs(&path, zc)?;
        let residual = ptf_residual(&path, &d, zc)?;
        rows.push([z, lhs.value.re, rhs.re, residual]);
    }
    let payload: Vec<Value> = rows
        .iter()
        .map(|r| json!({"z": r[0], "lhs": r[1], "rhs": r[2], "residual": r[3]}))
        .collect();
    let csv = csv_rows("z,lhs,rhs,residual", rows.into_iter());
    Ok(Output::new(payload, csv).warn(&warnings))
}

pub fn push(text: &str, grid: &str) -> Result<Output, Failure> {
    let grid = parse_grid(grid)?;
    let (path, d) = Scenario::parse(text)?.assemble()?;
    let report = pushnitski_check(&path, &d, &grid)?;
    let worst = report.max_residual_excluding(BREAKPOINT_RADIUS);
    let mut out = Output::new(&report, report.to_csv()).warn(d.warnings());
    if path.is_fredholm(FREDHOLM_TOL) && worst > PUSHNITSKI_CONTRACT {
        out.failed_contract = true;
        out.contract_message = format!("max residual {worst} exceeds {PUSHNITSKI_CONTRACT}");
    }
    Ok(out)
}

pub fn dirac1d(text: &str, window: Option<&[f64]>, witten_nt: Option<usize>, horizon: f64) -> Result<Output, Failure> {
    let spec: ModelSpec = serde_json::from_str(text).map_err(Error::from)?;
    let model = PeriodicDiracModel::from_spec(&spec)?;
    let window = match window {
        Some(w) => (w[0], w[1]),
        None => model.default_window(),
    };
    let xi = ssf_dirac(&model, window)?;
    let mean = model.mean_formula();
    let estimate = match witten_nt {
        Some(nt) => Some(witten_dirac(&model, Profile::new(ProfileKind::Tanh, 1.0)?, horizon, nt)?),
        None => None,
    };
    let w = estimate.as_ref().and_then(|e| e.w_r);
    let csv = format!(
        "ssf,mean_formula,witten\n{xi},{mean},{}\n",
        w.map(|v| v.to_string()).unwrap_or_default()
    );
    let mut out = Output::new(
        json!({"ssf": xi, "mean_formula": mean, "window": [window.0, window.1], "witten": estimate}),
        csv,
    );
    if let Some(e) = &estimate {
        out = out.warn(&e.warnings);
        out.converged = e.is_converged();
    }
    Ok(out)
}
