//! Phillips' spectral flow for matrix paths and the identities tying it to
//! `xi(0; A+, A-)` and to the index of `D_A`.
//!
//! The partition is refined until consecutive bounded transforms
//! `F_t = A(t)(1 + A(t)^2)^{-1/2}` differ by less than `delta` in norm. The
//! flow is the ordered sum of pair indices of `P_t = E_{A(t)}([0, inf))`
//! over the partition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DiscretizedDA;
use crate::operator::{HermitianOperator, Interval};
use crate::path::OperatorPath;
use crate::ssf::ssf_count;
use crate::witten::fredholm_index_via_ssf;

/// Default bound on consecutive bounded-transform increments.
pub const DEFAULT_DELTA: f64 = 0.25;
const INITIAL_NODES: usize = 17;
const ZERO_TOL: f64 = 1e-12;

/// `x -> x (1 + x^2)^{-1/2}` applied to the spectrum.
pub fn bounded_transform(a: &HermitianOperator) -> HermitianOperator {
    a.apply_real(|x| x / (1.0 + x * x).sqrt())
        .expect("bounded transform is finite")
}

fn range_basis(p: &HermitianOperator) -> nalgebra::DMatrix<num_complex::Complex64> {
    p.spectral_subspace(&Interval::above(0.5))
}

fn norm_of_difference(p: &HermitianOperator, q: &HermitianOperator) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    let diff = p.matrix() - q.matrix();
    Ok(diff.singular_values().iter().fold(0.0, |m: f64, &s| m.max(s)))
}

/// Index of `PQ : ran Q -> ran P`, i.e. `dim ker - dim coker` of the
/// restricted map, without the `||P - Q|| < 1` precondition. In finite
/// dimensions it equals `rank Q - rank P`.
pub fn fredholm_pair_index_unchecked(p: &HermitianOperator, q: &HermitianOperator) -> Result<i64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    let up = range_basis(p);
    let uq = range_basis(q);
    let (rp, rq) = (up.ncols(), uq.ncols());
    let rank = if rp == 0 || rq == 0 {
        0
    } else {
        let m = up.adjoint() * uq;
        m.singular_values().iter().filter(|&&s| s > 1e-10).count()
    };
    Ok((rq - rank) as i64 - (rp - rank) as i64)
}

/// Index of the Fredholm pair `(P, Q)`; requires `||P - Q|| < 1`.
pub fn fredholm_pair_index(p: &HermitianOperator, q: &HermitianOperator) -> Result<i64> {
    let gap = norm_of_difference(p, q)?;
    if gap >= 1.0 - 1e-12 {
        return Err(Error::PairNotFredholm(gap));
    }
    fredholm_pair_index_unchecked(p, q)
}

/// Nodes of an admissible partition with their projection data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPartition {
    pub times: Vec<f64>,
    /// `rank E_{A(t_j)}([0, inf))`.
    pub ranks: Vec<usize>,
    /// `||P_{t_j} - P_{t_{j+1}}||`.
    pub gaps: Vec<f64>,
    /// `||F_{t_j} - F_{t_{j+1}}||`, each below `delta`.
    pub increments: Vec<f64>,
    pub delta: f64,
}

impl ProjectionPartition {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_increment(&self) -> f64 {
        self.increments.iter().fold(0.0, |m, &g| m.max(g))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFlow {
    pub flow: i64,
    pub partition: ProjectionPartition,
}

/// Moves `t` off an operator with a zero eigenvalue, staying inside `[lo, hi]`.
fn nudge(path: &OperatorPath, t: f64, lo: f64, hi: f64, step: f64) -> Result<f64> {
    let singular = |s: f64| {
        let a = path.at(s);
        a.min_abs_eigenvalue() <= ZERO_TOL * a.norm().max(1.0)
    };
    if !singular(t) {
        return Ok(t);
    }
    let mut h = step;
    for _ in 0..8 {
        for s in [t + h, t - h] {
            if s >= lo && s <= hi && !singular(s) {
                return Ok(s);
            }
        }
        h *= 0.5;
    }
    Err(Error::DegeneratePath(format!("zero eigenvalue persists near t = {t}")))
}

/// Spectral flow of `path` over `[t0, t1]`.
pub fn spectral_flow(path: &OperatorPath, t0: f64, t1: f64, delta: f64) -> Result<SpectralFlow> {
    if !(t1 > t0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "need t0 < t1 and delta in (0, 1), got [{t0}, {t1}], {delta}"
        )));
    }
    let min_step = 1e-9 * (t1 - t0);
    // the projections include zero, so nodes are moved off exact kernels
    let spacing = (t1 - t0) / (INITIAL_NODES - 1) as f64;
    let mut times = Vec::with_capacity(INITIAL_NODES);
    for k in 0..INITIAL_NODES {
        let t = t0 + spacing * k as f64;
        times.push(nudge(path, t, (t - spacing / 2.0).max(t0), (t + spacing / 2.0).min(t1), spacing / 4.0)?);
    }
    let mut transforms: Vec<HermitianOperator> = times.iter().map(|&t| bounded_transform(&path.at(t))).collect();
    loop {
        let mut refined = false;
        let mut k = 0;
        while k + 1 < times.len() {
            let inc = norm_of_difference(&transforms[k], &transforms[k + 1])?;
            if inc >= delta {
                let width = times[k + 1] - times[k];
                if width / 2.0 < min_step {
                    return Err(Error::DegeneratePath(format!(
                        "increment {inc:.3} at t = {} survives refinement",
                        times[k]
                    )));
                }
                let mid = nudge(path, times[k] + width / 2.0, times[k], times[k + 1], width / 4.0)?;
                times.insert(k + 1, mid);
                transforms.insert(k + 1, bounded_transform(&path.at(mid)));
                refined = true;
            } else {
                k += 1;
            }
        }
        if !refined {
            break;
        }
    }
    let n = times.len();
    let nodes = times;
    let projections: Vec<HermitianOperator> = nodes
        .iter()
        .map(|&t| path.at(t).spectral_projection(&Interval::at_or_above(0.0)))
        .collect();
    let mut flow = 0;
    let mut gaps = Vec::with_capacity(n - 1);
    let mut increments = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        flow += fredholm_pair_index_unchecked(&projections[j], &projections[j + 1])?;
        gaps.push(norm_of_difference(&projections[j], &projections[j + 1])?);
        increments.push(norm_of_difference(
            &bounded_transform(&path.at(nodes[j])),
            &bounded_transform(&path.at(nodes[j + 1])),
        )?);
    }
    Ok(SpectralFlow {
        flow,
        partition: ProjectionPartition {
            ranks: projections.iter().map(|p| p.trace().round() as usize).collect(),
            times: nodes,
            gaps,
            increments,
            delta,
        },
    })
}

/// The five integers that must coincide for a Fredholm path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowIdentities {
    pub spectral_flow: i64,
    /// `tr(E_{A-}((-inf, 0)) - E_{A+}((-inf, 0)))`.
    pub trace_difference: i64,
    /// `xi(0; A+, A-)` by eigenvalue counting.
    pub ssf_at_zero: i64,
    /// `dim ker D - dim ker D*` of the discretization.
    pub discrete_index: i64,
    /// Pair index of the endpoint negative spectral projections.
    pub pair_index: i64,
}

impl FlowIdentities {
    pub fn as_array(&self) -> [i64; 5] {
        [
            self.spectral_flow,
            self.trace_difference,
            self.ssf_at_zero,
            self.discrete_index,
            self.pair_index,
        ]
    }

    pub fn all_equal(&self) -> bool {
        let a = self.as_array();
        a.iter().all(|&v| v == a[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub flow: i64,
    pub partition_size: usize,
    pub max_gap: f64,
    pub identities: FlowIdentities,
}

fn identities(path: &OperatorPath, d: &DiscretizedDA, tol: f64) -> Result<(FlowIdentities, SpectralFlow)> {
    if !path.is_fredholm(tol) {
        return Err(Error::InvalidInput(format!("asymptotes have spectrum within {tol} of zero")));
    }
    let t = d.horizon();
    let sf = spectral_flow(path, -t, t, DEFAULT_DELTA)?;
    let negative = Interval::below(0.0);
    let em = path.a_minus().spectral_projection(&negative);
    let ep = path.a_plus().spectral_projection(&negative);
    let trace = em.trace() - ep.trace();
    let xi = ssf_count(path.a_minus(), path.a_plus())?;
    let ids = FlowIdentities {
        spectral_flow: sf.flow,
        trace_difference: trace.round() as i64,
        ssf_at_zero: fredholm_index_via_ssf(&xi, path.a_plus(), path.a_minus(), tol)?,
        discrete_index: d.kernel_dims(None)?.index(),
        // the pair (E_{A-}, E_{A+}) has index rank E_{A-} - rank E_{A+}
        pair_index: fredholm_pair_index_unchecked(&ep, &em)?,
    };
    Ok((ids, sf))
}

/// Evaluates the five identities; any mismatch is an error.
pub fn flow_identity_check(path: &OperatorPath, d: &DiscretizedDA, tol: f64) -> Result<FlowIdentities> {
    let (ids, _) = identities(path, d, tol)?;
    if !ids.all_equal() {
        return Err(Error::IdentityViolation(format!("{:?}", ids.as_array())));
    }
    Ok(ids)
}

/// Flow report with the identities, whether or not they agree.
pub fn flow_report(path: &OperatorPath, d: &DiscretizedDA, tol: f64) -> Result<FlowReport> {
    let (ids, sf) = identities(path, d, tol)?;
    Ok(FlowReport {
        flow: sf.flow,
        partition_size: sf.partition.len(),
        max_gap: sf.partition.max_increment(),
        identities: ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::CMatrix;
    use crate::path::{Profile, ProfileKind};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn tanh() -> Profile {
        Profile::new(ProfileKind::Tanh, 1.0).unwrap()
    }

    fn diag(v: &[f64]) -> HermitianOperator {
        HermitianOperator::from_diag(v).unwrap()
    }

    fn projector(cols: &[&[f64]]) -> HermitianOperator {
        let n = cols[0].len();
        let mut q = CMatrix::from_fn(n, cols.len(), |i, j| Complex64::new(cols[j][i], 0.0));
        q = q.qr().q();
        HermitianOperator::new(&q * q.adjoint()).unwrap()
    }

    #[test]
    fn bounded_transform_examples() {
        assert_eq!(bounded_transform(&HermitianOperator::zeros(2)).norm(), 0.0);
        assert_abs_diff_eq!(bounded_transform(&diag(&[1.0])).eigenvalues()[0], 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        let f = bounded_transform(&diag(&[-5.0, 0.1, 30.0]));
        assert!(f.eigenvalues().windows(2).all(|w| w[0] < w[1]));
        assert!(f.norm() < 1.0);
    }

    #[test]
    fn pair_index_examples() {
        let p = projector(&[&[1.0, 0.0, 0.0]]);
        assert_eq!(fredholm_pair_index(&p, &p).unwrap(), 0);
        let z = HermitianOperator::zeros(3);
        assert_eq!(fredholm_pair_index(&z, &z).unwrap(), 0);
        // ranks 1 and 2: the restricted map ran Q -> ran P has a one-dimensional
        // kernel and no cokernel
        let q = projector(&[&[1.0, 0.1, 0.0], &[0.0, 0.0, 1.0]]);
        assert_eq!(fredholm_pair_index_unchecked(&p, &q).unwrap(), 1);
        assert!(matches!(fredholm_pair_index(&p, &q), Err(Error::PairNotFredholm(_))));
        // small rotation of the same rank
        let r = projector(&[&[1.0, 0.05, 0.0]]);
        assert_eq!(fredholm_pair_index(&p, &r).unwrap(), 0);
    }

    #[test]
    fn flow_examples() {
        assert_eq!(spectral_flow(&OperatorPath::scalar(-1.0, 2.0, tanh()), -12.0, 12.0, 0.25).unwrap().flow, 1);
        assert_eq!(spectral_flow(&OperatorPath::scalar(-1.0, 0.0, tanh()), -12.0, 12.0, 0.25).unwrap().flow, 0);
        let p = OperatorPath::new(diag(&[-1.0, 1.0]), diag(&[2.0, -2.0]), tanh()).unwrap();
        let f = spectral_flow(&p, -12.0, 12.0, 0.25).unwrap();
        assert_eq!(f.flow, 0);
        assert!(f.partition.max_increment() < 0.25);
    }

    #[test]
    fn crossing_at_node_is_nudged() {
        // A(t) = -1/2 + theta(t) vanishes at t = 0, the middle of the 17 initial nodes
        let p = OperatorPath::scalar(-0.5, 1.0, Profile::new(ProfileKind::Ramp, 1.0).unwrap());
        let f = spectral_flow(&p, -1.0, 1.0, 0.25).unwrap();
        assert_eq!(f.flow, 1);
        assert!(f.partition.times.iter().all(|&t| p.at(t).min_abs_eigenvalue() > 1e-6));
    }

    #[test]
    fn degenerate_path_errors() {
        let p = OperatorPath::new(diag(&[0.0, -1.0]), diag(&[0.0, 2.0]), tanh()).unwrap();
        assert!(matches!(spectral_flow(&p, -12.0, 12.0, 0.25), Err(Error::DegeneratePath(_))));
    }

    #[test]
    fn identity_chain_examples() {
        for (am, ap, want) in [
            (vec![-1.0], vec![1.0], 1),
            (vec![1.0, -2.0], vec![1.0, -2.0], 0),
            (vec![-1.0, 2.0], vec![1.0, 3.0], 1),
        ] {
            let path = OperatorPath::between(diag(&am), &diag(&ap), tanh()).unwrap();
            let d = DiscretizedDA::assemble(&path, 12.0, 120).unwrap();
            let ids = flow_identity_check(&path, &d, 1e-9).unwrap();
            assert_eq!(ids.as_array(), [want; 5]);
            let report = flow_report(&path, &d, 1e-9).unwrap();
            let json = serde_json::to_value(&report).unwrap();
            assert_eq!(json["flow"], want);
        }
    }
}
