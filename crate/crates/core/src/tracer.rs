//! SiMEC-1D: polygonal approximation of the null curve through a point.
//!
//! Explicit Euler on the unit-normalized null eigenvector field,
//! `p_{k+1} = p_k + δ·v_k`, with per-segment energy and pseudolength-bound
//! accounting and a configurable policy for leaving the meaningful region.
//! No higher-order correction is applied: fidelity is controlled solely by δ.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, normalized, sub};
use crate::metric::{
    select_direction, spectral_decompose, EigenDirection, MetricProvider, MetricTensor,
};
use crate::nn::MlpModel;

/// What to do when a step leaves the hypercube ℋ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    /// Keep the exiting vertex and stop.
    Halt,
    /// Clamp the vertex back onto ℋ and continue. Energy keeps accumulating
    /// over the clamped segments but loses its meaning as an accuracy
    /// measure; `Polygonal::projected_steps` lets consumers discount it.
    Project,
    /// No region tracking at all.
    Ignore,
}

impl BoundaryPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "halt" => Ok(BoundaryPolicy::Halt),
            "project" => Ok(BoundaryPolicy::Project),
            "ignore" => Ok(BoundaryPolicy::Ignore),
            other => Err(Error::UnknownName {
                what: "boundary policy",
                name: other.into(),
                known: "halt, project, ignore".into(),
            }),
        }
    }
}

/// Axis-aligned box [(a₁,b₁) × … × (a_d,b_d)].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hypercube {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Hypercube {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidConfig("bounds must pair lows with highs".into()));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if !(a < b) {
                return Err(Error::InvalidConfig(format!(
                    "bounds require a < b componentwise, got [{a}, {b}]"
                )));
            }
        }
        Ok(Hypercube { lo, hi })
    }

    /// The square (lo, hi)².
    pub fn square2(lo: f64, hi: f64) -> Result<Self> {
        Hypercube::new(vec![lo, lo], vec![hi, hi])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| x >= a && x <= b)
    }

    pub fn clamp(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(x, (a, b))| x.clamp(*a, *b))
            .collect()
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }
}

/// Parameters of a single SiMEC trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Step size δ.
    pub delta: f64,
    /// Maximum number of Euler steps K; the polygonal has up to K+1 vertices
    /// (the start point is always included).
    pub max_steps: usize,
    pub boundary: BoundaryPolicy,
    pub hypercube: Option<Hypercube>,
    /// Relative null threshold passed through to the spectral decomposition.
    pub tau_rel: f64,
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidConfig("delta must be positive".into()));
        }
        if !(self.tau_rel > 0.0) {
            return Err(Error::InvalidConfig("tau_rel must be positive".into()));
        }
        if self.boundary != BoundaryPolicy::Ignore && self.hypercube.is_none() {
            return Err(Error::InvalidConfig(
                "boundary policy requires a hypercube".into(),
            ));
        }
        Ok(())
    }
}

/// The SiMEC output: an ordered vertex sequence with per-segment accounting.
///
/// `points`, `outputs` (when a model was supplied) and the per-segment lists
/// line up as `len(points) = len(outputs) = len(segment_energies) + 1`;
/// segment k connects vertex k to vertex k+1.
#[derive(Debug, Clone)]
pub struct Polygonal {
    pub points: Vec<Vec<f64>>,
    /// Network outputs at each vertex; empty when traced on an analytic field.
    pub outputs: Vec<Vec<f64>>,
    pub segment_energies: Vec<f64>,
    pub segment_plen_bounds: Vec<f64>,
    /// True for segments whose endpoint was clamped back onto ℋ.
    pub projected_flags: Vec<bool>,
    /// Left-to-right sum of `segment_energies`.
    pub cumulative_energy: f64,
    /// Left-to-right sum of `segment_plen_bounds` — an upper bound on the
    /// pseudolength of the polygonal.
    pub pseudolength_bound: f64,
    pub projected_steps: usize,
    pub halted_at_boundary: bool,
}

impl Polygonal {
    pub(crate) fn with_start(p0: Vec<f64>, output: Option<Vec<f64>>) -> Polygonal {
        Polygonal {
            points: vec![p0],
            outputs: output.into_iter().collect(),
            segment_energies: Vec::new(),
            segment_plen_bounds: Vec::new(),
            projected_flags: Vec::new(),
            cumulative_energy: 0.0,
            pseudolength_bound: 0.0,
            projected_steps: 0,
            halted_at_boundary: false,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest |𝒩(p_k) − 𝒩(p₀)| over the vertices, for scalar outputs.
    pub fn max_output_drift(&self) -> Option<f64> {
        let first = self.outputs.first()?;
        if first.len() != 1 {
            return None;
        }
        let c = first[0];
        self.outputs
            .iter()
            .map(|o| (o[0] - c).abs())
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))))
    }

    /// Extend this chain with another that starts at this chain's last
    /// vertex (the shared vertex is kept once).
    pub(crate) fn append_chain(&mut self, other: Polygonal) {
        debug_assert_eq!(self.points.last(), other.points.first());
        self.points.extend(other.points.into_iter().skip(1));
        if !other.outputs.is_empty() {
            self.outputs.extend(other.outputs.into_iter().skip(1));
        }
        self.segment_energies.extend(other.segment_energies);
        self.segment_plen_bounds.extend(other.segment_plen_bounds);
        self.projected_flags.extend(other.projected_flags);
        self.cumulative_energy += other.cumulative_energy;
        self.pseudolength_bound += other.pseudolength_bound;
        self.projected_steps += other.projected_steps;
        self.halted_at_boundary = self.halted_at_boundary || other.halted_at_boundary;
    }

    /// Join a backward and a forward trace from the same start point into a
    /// single chain running backward-end → start → forward-end. Cumulative
    /// accumulators are re-summed left to right over the merged segments.
    pub fn merge_bidirectional(backward: Polygonal, forward: Polygonal) -> Polygonal {
        debug_assert_eq!(backward.points[0], forward.points[0]);
        let has_outputs = !forward.outputs.is_empty();

        let mut points: Vec<Vec<f64>> = backward.points.into_iter().rev().collect();
        points.extend(forward.points.into_iter().skip(1));

        let mut outputs: Vec<Vec<f64>> = backward.outputs.into_iter().rev().collect();
        if has_outputs {
            outputs.extend(forward.outputs.into_iter().skip(1));
        }

        let mut segment_energies: Vec<f64> = backward.segment_energies.into_iter().rev().collect();
        segment_energies.extend(forward.segment_energies);
        let mut segment_plen_bounds: Vec<f64> =
            backward.segment_plen_bounds.into_iter().rev().collect();
        segment_plen_bounds.extend(forward.segment_plen_bounds);
        let mut projected_flags: Vec<bool> = backward.projected_flags.into_iter().rev().collect();
        projected_flags.extend(forward.projected_flags);

        let cumulative_energy = segment_energies.iter().sum();
        let pseudolength_bound = segment_plen_bounds.iter().sum();
        let projected_steps = projected_flags.iter().filter(|f| **f).count();

        Polygonal {
            points,
            outputs,
            segment_energies,
            segment_plen_bounds,
            projected_flags,
            cumulative_energy,
            pseudolength_bound,
            projected_steps,
            halted_at_boundary: backward.halted_at_boundary || forward.halted_at_boundary,
        }
    }

    /// Trace CSV: one row per vertex with 17-significant-digit decimals
    /// (round-trip exact for 64-bit floats). Cumulative columns run left to
    /// right; vertex 0 carries zeros for the segment columns.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let dim = self.points.first().map_or(0, |p| p.len());
        write!(w, "step")?;
        for i in 0..dim {
            write!(w, ",x_{i}")?;
        }
        writeln!(w, ",output,seg_energy,cum_energy,plen_bound,projected_flag")?;

        let mut cum_e = 0.0;
        let mut cum_pl = 0.0;
        for (k, p) in self.points.iter().enumerate() {
            write!(w, "{k}")?;
            for x in p {
                write!(w, ",{}", fmt_f64(*x))?;
            }
            let out = match self.outputs.get(k) {
                Some(o) => o
                    .iter()
                    .map(|v| fmt_f64(*v))
                    .collect::<Vec<_>>()
                    .join(";"),
                None => String::new(),
            };
            let (seg_e, projected) = if k == 0 {
                (0.0, false)
            } else {
                cum_e += self.segment_energies[k - 1];
                cum_pl += self.segment_plen_bounds[k - 1];
                (self.segment_energies[k - 1], self.projected_flags[k - 1])
            };
            writeln!(
                w,
                ",{},{},{},{},{}",
                out,
                fmt_f64(seg_e),
                fmt_f64(cum_e),
                fmt_f64(cum_pl),
                u8::from(projected)
            )?;
        }
        Ok(())
    }
}

/// 17 significant digits: enough to reparse the exact f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Energy of the straight segment s ↦ p + s·v, s ∈ [0, δ], with the metric
/// frozen at the segment start: max(0, vᵀgv)·δ. Negative numerical noise in
/// the quadratic form is clamped so the accumulated energy stays meaningful.
pub fn segment_energy(g: &MetricTensor, v: &[f64], delta: f64) -> f64 {
    g.quadratic_form(v).max(0.0) * delta
}

/// Segment-wise upper bound on the pseudolength: √|vᵀgv|·δ. The absolute
/// value inside the root sidesteps eigenvalues that numerical noise pushed
/// slightly negative.
pub fn pseudolength_bound(g: &MetricTensor, v: &[f64], delta: f64) -> f64 {
    g.quadratic_form(v).abs().sqrt() * delta
}

/// Apply the configured boundary policy to a candidate vertex.
///
/// `project` clamps componentwise onto ℋ and never halts; `halt` returns the
/// point unchanged and halts exactly when it lies outside ℋ; `ignore` is the
/// identity.
pub fn apply_boundary(p: &[f64], cfg: &TraceConfig) -> (Vec<f64>, bool) {
    match (cfg.boundary, cfg.hypercube.as_ref()) {
        (BoundaryPolicy::Project, Some(h)) => (h.clamp(p), false),
        (BoundaryPolicy::Halt, Some(h)) => (p.to_vec(), !h.contains(p)),
        _ => (p.to_vec(), false),
    }
}

/// Trace the null curve through `p0`.
///
/// Each iteration decomposes the metric at the current vertex, picks the null
/// eigenvector sign-consistently with the previous step (seeded by `v0` if
/// given, canonical otherwise), advances by δ and applies the boundary
/// policy. When `model` is supplied the network output is recorded at every
/// vertex. Stops after `cfg.max_steps` steps or on a halting boundary hit;
/// the exiting vertex is kept so the caller can see where the curve left ℋ.
pub fn simec_trace(
    provider: &dyn MetricProvider,
    model: Option<&MlpModel>,
    p0: &[f64],
    v0: Option<&[f64]>,
    cfg: &TraceConfig,
) -> Result<Polygonal> {
    cfg.validate()?;
    let dim = provider.dim();
    if p0.len() != dim {
        return Err(Error::ShapeMismatch {
            context: "trace start point",
            expected: dim,
            actual: p0.len(),
        });
    }
    if cfg.boundary != BoundaryPolicy::Ignore {
        let h = cfg.hypercube.as_ref().expect("validated");
        if !h.contains(p0) {
            return Err(Error::StartOutsideBounds);
        }
    }

    let eval = |p: &[f64]| -> Result<Option<Vec<f64>>> {
        model.map(|m| m.forward(p)).transpose()
    };

    let mut prev: Option<Vec<f64>> = match v0 {
        Some(v) => Some(normalized(v).ok_or(Error::NonFinite("initial direction"))?),
        None => None,
    };
    let mut poly = Polygonal::with_start(p0.to_vec(), eval(p0)?);

    for k in 0..cfg.max_steps {
        let current = poly.points[k].clone();
        let g = provider.metric_at(&current)?;
        let dec = spectral_decompose(&g, cfg.tau_rel)?;
        if dec.null_count() == 0 {
            return Err(Error::NoNullDirection { step: k });
        }
        let v = select_direction(&dec, EigenDirection::Null, prev.as_deref())?;

        let candidate: Vec<f64> = current
            .iter()
            .zip(&v)
            .map(|(p, vi)| p + cfg.delta * vi)
            .collect();
        let (next, halted) = apply_boundary(&candidate, cfg);
        let was_projected = cfg.boundary == BoundaryPolicy::Project && next != candidate;

        // Accounting runs over the realized displacement so clamped segments
        // contribute their actual (shortened) extent.
        let disp = sub(&next, &current);
        let len = norm(&disp);
        let (seg_e, seg_pl) = if len > 0.0 {
            let u: Vec<f64> = disp.iter().map(|d| d / len).collect();
            (segment_energy(&g, &u, len), pseudolength_bound(&g, &u, len))
        } else {
            (0.0, 0.0)
        };

        poly.cumulative_energy += seg_e;
        poly.pseudolength_bound += seg_pl;
        poly.segment_energies.push(seg_e);
        poly.segment_plen_bounds.push(seg_pl);
        poly.projected_flags.push(was_projected);
        if was_projected {
            poly.projected_steps += 1;
        }
        if let Some(out) = eval(&next)? {
            poly.outputs.push(out);
        }
        poly.points.push(next);
        prev = Some(v);

        if halted {
            poly.halted_at_boundary = true;
            break;
        }
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::metric::{analytic_field, DEFAULT_TAU_REL};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn free_cfg(delta: f64, max_steps: usize) -> TraceConfig {
        TraceConfig {
            delta,
            max_steps,
            boundary: BoundaryPolicy::Ignore,
            hypercube: None,
            tau_rel: DEFAULT_TAU_REL,
        }
    }

    #[test]
    fn config_validation() {
        assert!(free_cfg(0.0, 1).validate().is_err());
        assert!(free_cfg(1e-3, 1).validate().is_ok());
        let cfg = TraceConfig {
            boundary: BoundaryPolicy::Halt,
            ..free_cfg(1e-3, 1)
        };
        assert!(cfg.validate().is_err()); // no hypercube
        assert!(Hypercube::new(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn segment_energy_examples() {
        let euclid = MetricTensor::new(vec![0.0, 0.0], Matrix::identity(2)).unwrap();
        assert_close(segment_energy(&euclid, &[1.0, 0.0], 0.5), 0.5, 1e-15);

        let g1 = analytic_field("example2")
            .unwrap()
            .metric_at(&[1.0, 0.0])
            .unwrap();
        let s = 0.5f64.sqrt();
        assert_close(segment_energy(&g1, &[s, s], 1.0), 2.0, 1e-12);
    }

    #[test]
    fn energy_of_kernel_direction_vanishes() {
        let m = Matrix::from_rows(&[
            vec![10.0, 5.0, 17.0],
            vec![5.0, 5.0, 9.0],
            vec![17.0, 9.0, 29.0],
        ])
        .unwrap();
        let g = MetricTensor::new(vec![0.0; 3], m).unwrap();
        let v = crate::linalg::normalized(&[8.0, 1.0, -5.0]).unwrap();
        for delta in [1e-3, 0.7, 2.0] {
            assert!(segment_energy(&g, &v, delta) <= 1e-12 * delta);
            assert!(pseudolength_bound(&g, &v, delta) <= 1e-6 * delta);
        }
    }

    #[test]
    fn pseudolength_examples() {
        let euclid = MetricTensor::new(vec![0.0, 0.0], Matrix::identity(2)).unwrap();
        assert_close(pseudolength_bound(&euclid, &[0.0, 1.0], 0.25), 0.25, 1e-15);
        let g = MetricTensor::new(vec![0.0], Matrix::from_rows(&[vec![4.0]]).unwrap()).unwrap();
        assert_close(pseudolength_bound(&g, &[1.0], 1.0), 2.0, 1e-15);
    }

    #[test]
    fn boundary_policies() {
        let cfg = TraceConfig {
            boundary: BoundaryPolicy::Project,
            hypercube: Some(Hypercube::square2(0.0, 1.0).unwrap()),
            ..free_cfg(1e-2, 1)
        };
        let (p, halted) = apply_boundary(&[1.2, 0.5], &cfg);
        assert_eq!(p, vec![1.0, 0.5]);
        assert!(!halted);

        let cfg = TraceConfig {
            boundary: BoundaryPolicy::Halt,
            ..cfg
        };
        let (p, halted) = apply_boundary(&[0.5, 0.5], &cfg);
        assert_eq!(p, vec![0.5, 0.5]);
        assert!(!halted);
        let (p, halted) = apply_boundary(&[-0.1, 2.0], &cfg);
        assert_eq!(p, vec![-0.1, 2.0]);
        assert!(halted);
    }

    #[test]
    fn zero_step_trace() {
        let field = analytic_field("example2").unwrap();
        let poly = simec_trace(&field, None, &[1.0, 1.0], None, &free_cfg(1e-4, 0)).unwrap();
        assert_eq!(poly.points, vec![vec![1.0, 1.0]]);
        assert_eq!(poly.cumulative_energy, 0.0);
        assert!(poly.outputs.is_empty());
    }

    #[test]
    fn example2_trace_follows_null_parabola() {
        // Null curves of the field satisfy dy/dx = −x, so through (x₀, y₀)
        // the curve is y = y₀ − (x² − x₀²)/2.
        let field = analytic_field("example2").unwrap();
        let poly =
            simec_trace(&field, None, &[1.0, 1.0], None, &free_cfg(1e-4, 10_000)).unwrap();
        assert_eq!(poly.len(), 10_001);
        let mut worst: f64 = 0.0;
        for p in &poly.points {
            let expected = 1.0 - (p[0] * p[0] - 1.0) / 2.0;
            worst = worst.max((p[1] - expected).abs());
        }
        assert!(worst <= 1e-3, "max parabola deviation {worst}");
        // Energy of a (near-)null polygonal is tiny.
        assert!(poly.cumulative_energy < 1e-9);
    }

    #[test]
    fn example2_trace_from_zero_start() {
        // With x₀ = 0 the null curve is exactly y = y₀ − x²/2.
        let field = analytic_field("example2").unwrap();
        let poly = simec_trace(&field, None, &[0.0, 1.0], None, &free_cfg(1e-4, 10_000)).unwrap();
        let mut worst: f64 = 0.0;
        for p in &poly.points {
            let expected = 1.0 - p[0] * p[0] / 2.0;
            worst = worst.max((p[1] - expected).abs());
        }
        assert!(worst <= 1e-3, "max parabola deviation {worst}");
    }

    #[test]
    fn step_length_is_delta() {
        let field = analytic_field("example2").unwrap();
        let poly = simec_trace(&field, None, &[1.0, 1.0], None, &free_cfg(1e-3, 100)).unwrap();
        for k in 1..poly.len() {
            let d = norm(&sub(&poly.points[k], &poly.points[k - 1]));
            assert_close(d, 1e-3, 1e-15);
        }
        // Energy monotonicity.
        let mut cum = 0.0;
        for e in &poly.segment_energies {
            assert!(*e >= 0.0);
            cum += e;
        }
        assert_close(cum, poly.cumulative_energy, 1e-18);
    }

    #[test]
    fn reversibility_on_example2() {
        let field = analytic_field("example2").unwrap();
        let cfg = free_cfg(1e-3, 1000);
        let fwd = simec_trace(&field, None, &[1.0, 1.0], None, &cfg).unwrap();
        let end = fwd.points.last().unwrap().clone();
        let last_dir = {
            let prev = &fwd.points[fwd.len() - 2];
            let d = sub(&end, prev);
            normalized(&d).unwrap()
        };
        let back_dir: Vec<f64> = last_dir.iter().map(|c| -c).collect();
        let bwd = simec_trace(&field, None, &end, Some(&back_dir), &cfg).unwrap();
        let ret = bwd.points.last().unwrap();
        let err = norm(&sub(ret, &[1.0, 1.0]));
        assert!(err <= 10.0 * cfg.delta, "return error {err}");
    }

    #[test]
    fn halt_keeps_exiting_vertex() {
        let field = analytic_field("example2").unwrap();
        let cfg = TraceConfig {
            boundary: BoundaryPolicy::Halt,
            hypercube: Some(Hypercube::square2(0.0, 1.02).unwrap()),
            ..free_cfg(1e-2, 100_000)
        };
        let poly = simec_trace(&field, None, &[1.0, 1.0], None, &cfg).unwrap();
        assert!(poly.halted_at_boundary);
        let last = poly.points.last().unwrap();
        assert!(!cfg.hypercube.as_ref().unwrap().contains(last));
        // Everything before the exit stayed inside.
        for p in &poly.points[..poly.len() - 1] {
            assert!(cfg.hypercube.as_ref().unwrap().contains(p));
        }
    }

    #[test]
    fn project_clamps_and_counts() {
        let field = analytic_field("example2").unwrap();
        let hc = Hypercube::square2(0.5, 1.5).unwrap();
        let cfg = TraceConfig {
            boundary: BoundaryPolicy::Project,
            hypercube: Some(hc.clone()),
            ..free_cfg(1e-2, 200)
        };
        let poly = simec_trace(&field, None, &[1.0, 1.0], None, &cfg).unwrap();
        assert!(!poly.halted_at_boundary);
        assert!(poly.projected_steps > 0);
        assert_eq!(
            poly.projected_steps,
            poly.projected_flags.iter().filter(|f| **f).count()
        );
        for (k, p) in poly.points.iter().enumerate() {
            assert!(hc.contains(p), "vertex {k} escaped projection");
            if k > 0 {
                let d = norm(&sub(p, &poly.points[k - 1]));
                assert!(d <= cfg.delta * 2f64.sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn start_outside_bounds_rejected() {
        let field = analytic_field("example2").unwrap();
        let cfg = TraceConfig {
            boundary: BoundaryPolicy::Halt,
            hypercube: Some(Hypercube::square2(0.0, 0.5).unwrap()),
            ..free_cfg(1e-3, 10)
        };
        assert!(matches!(
            simec_trace(&field, None, &[1.0, 1.0], None, &cfg),
            Err(Error::StartOutsideBounds)
        ));
    }

    #[test]
    fn csv_round_trips_floats() {
        let field = analytic_field("example2").unwrap();
        let poly = simec_trace(&field, None, &[1.0, 1.0], None, &free_cfg(1e-3, 5)).unwrap();
        let mut buf = Vec::new();
        poly.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "step,x_0,x_1,output,seg_energy,cum_energy,plen_bound,projected_flag"
        );
        for (k, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 8);
            assert_eq!(fields[0].parse::<usize>().unwrap(), k);
            let x: f64 = fields[1].parse().unwrap();
            assert_eq!(x, poly.points[k][0], "x_0 must round-trip exactly");
            assert_eq!(fields[3], ""); // analytic: no outputs
        }
    }

    #[test]
    fn merge_bidirectional_chains() {
        let field = analytic_field("example2").unwrap();
        let cfg = free_cfg(1e-3, 10);
        let g = field.metric_at(&[1.0, 1.0]).unwrap();
        let dec = spectral_decompose(&g, DEFAULT_TAU_REL).unwrap();
        let v = select_direction(&dec, EigenDirection::Null, None).unwrap();
        let neg: Vec<f64> = v.iter().map(|c| -c).collect();
        let fwd = simec_trace(&field, None, &[1.0, 1.0], Some(&v), &cfg).unwrap();
        let bwd = simec_trace(&field, None, &[1.0, 1.0], Some(&neg), &cfg).unwrap();
        let merged = Polygonal::merge_bidirectional(bwd, fwd);
        assert_eq!(merged.len(), 21);
        assert_eq!(merged.segment_energies.len(), 20);
        assert_eq!(merged.points[10], vec![1.0, 1.0]); // anchor in the middle
        assert_close(
            merged.cumulative_energy,
            merged.segment_energies.iter().sum(),
            1e-18,
        );
    }
}
