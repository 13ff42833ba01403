//! SiMExp-1D and the foliation builder.
//!
//! SiMExp steps along the positive eigenvector w₊ of the pullback metric,
//! which moves the point transversally across equivalence classes; a leg ends
//! once the network output has shifted by a prescribed amount. The foliation
//! builder alternates SiMEC leaf traces with SiMExp legs in both directions
//! from the start point, reconstructing the connected component of the
//! preimage of the output interval [c − ε, c + ε] restricted to the region of
//! interest.
//!
//! Leaves are traced independently once their anchor points are known, so
//! they may run in parallel; results are ordered by leaf index either way.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, normalized, sub, Matrix};
use crate::metric::{
    pullback_metric, select_direction, spectral_decompose, EigenDirection, MetricProvider,
    PullbackProvider,
};
use crate::nn::MlpModel;
use crate::tracer::{apply_boundary, simec_trace, BoundaryPolicy, Polygonal, TraceConfig};

/// Parameters for [`preimage_interval`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExploreConfig {
    /// Transversal step size.
    pub delta: f64,
    /// Half-width ε of the target output interval around 𝒩(p₀).
    pub tol_eps: f64,
    /// Output spacing ε̃ between consecutive leaves; must stay below ε.
    pub leaf_eps: f64,
    /// Budget for a single SiMExp leg before it is declared stalled.
    pub max_leaf_steps: usize,
    /// Per-leaf SiMEC parameters (step size, budget, boundary handling).
    pub simec: TraceConfig,
    /// Let the transversal continue outside the hypercube while leaves stay
    /// subject to the SiMEC boundary policy. Fills foliation gaps whose
    /// equivalence classes only pass through the region boundary.
    pub allow_outside: bool,
    /// Seed every transversal leg with w₊ computed once at p₀ instead of
    /// chaining the last leg direction. Off by default; the eigenvector field
    /// rotates, so refreshing tracks it better.
    pub wplus_once: bool,
    /// Hard cap on the number of leaves across both directions.
    pub max_leaves: usize,
}

impl ExploreConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidConfig("delta must be positive".into()));
        }
        if !(self.tol_eps > 0.0) || !(self.leaf_eps > 0.0) {
            return Err(Error::InvalidConfig("eps and leaf_eps must be positive".into()));
        }
        if self.leaf_eps >= self.tol_eps {
            return Err(Error::InvalidConfig(format!(
                "leaf_eps ({}) must be smaller than eps ({})",
                self.leaf_eps, self.tol_eps
            )));
        }
        if self.max_leaf_steps == 0 || self.max_leaves == 0 {
            return Err(Error::InvalidConfig("step and leaf budgets must be positive".into()));
        }
        self.simec.validate()
    }
}

/// How a SiMExp leg ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimexpStatus {
    /// The output offset reached the requested threshold.
    Reached,
    /// A halting boundary hit ended the leg early.
    BoundaryHalted,
    /// The step budget ran out before the threshold was met — distinct from
    /// success; near an output extremum the threshold may be unreachable.
    Stalled,
}

/// Result of one SiMExp leg.
#[derive(Debug, Clone)]
pub struct SimexpOutcome {
    /// The micro-step path of the leg, outputs included.
    pub polygonal: Polygonal,
    /// Last direction used (or the one that would be used, for a zero-step
    /// leg), for sign-consistent chaining into the next leg.
    pub direction: Vec<f64>,
    pub status: SimexpStatus,
    /// Total polygonal length of the leg (Σ of realized step lengths).
    pub length: f64,
}

impl SimexpOutcome {
    pub fn point(&self) -> &[f64] {
        self.polygonal.points.last().expect("non-empty")
    }

    pub fn output(&self) -> f64 {
        self.polygonal.outputs.last().expect("non-empty")[0]
    }
}

/// Walk along w₊ from `p` until |𝒩(p_k) − 𝒩(p)| first reaches `leaf_eps`.
///
/// The eigenvector is recomputed at every step and kept sign-consistent with
/// the previous one (seeded by `prev_dir`). The boundary policy of
/// `cfg_boundary` is applied to every step; its `tau_rel` feeds the spectral
/// decomposition. `delta` and `max_steps` are taken from the arguments, not
/// from `cfg_boundary`.
pub fn simexp_step(
    model: &MlpModel,
    p: &[f64],
    prev_dir: Option<&[f64]>,
    delta: f64,
    leaf_eps: f64,
    max_steps: usize,
    cfg_boundary: &TraceConfig,
) -> Result<SimexpOutcome> {
    if model.output_dim() != 1 {
        return Err(Error::InvalidModel(format!(
            "transversal stepping requires a scalar output, got dimension {}",
            model.output_dim()
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig("delta must be positive".into()));
    }
    if leaf_eps < 0.0 {
        return Err(Error::InvalidConfig("leaf_eps must be non-negative".into()));
    }
    if p.len() != model.input_dim() {
        return Err(Error::ShapeMismatch {
            context: "transversal start point",
            expected: model.input_dim(),
            actual: p.len(),
        });
    }
    if cfg_boundary.boundary != BoundaryPolicy::Ignore {
        match cfg_boundary.hypercube.as_ref() {
            Some(h) if h.contains(p) => {}
            Some(_) => return Err(Error::StartOutsideBounds),
            None => {
                return Err(Error::InvalidConfig(
                    "boundary policy requires a hypercube".into(),
                ))
            }
        }
    }

    let g_out = Matrix::identity(1);
    let c0 = model.forward(p)?[0];
    let mut poly = Polygonal::with_start(p.to_vec(), Some(vec![c0]));
    let mut dir: Option<Vec<f64>> = match prev_dir {
        Some(v) => Some(normalized(v).ok_or(Error::NonFinite("previous direction"))?),
        None => None,
    };
    let mut length = 0.0;
    let mut status = SimexpStatus::Stalled;

    for k in 0..=max_steps {
        let out = poly.outputs.last().expect("populated")[0];
        if (out - c0).abs() >= leaf_eps {
            status = SimexpStatus::Reached;
            break;
        }
        if k == max_steps {
            status = SimexpStatus::Stalled;
            break;
        }

        let current = poly.points.last().expect("non-empty").clone();
        let g = pullback_metric(model, &current, &g_out)?;
        let dec = spectral_decompose(&g, cfg_boundary.tau_rel)?;
        if dec.rank() == 0 {
            return Err(Error::NoPositiveDirection { step: k });
        }
        let w = select_direction(&dec, EigenDirection::Positive, dir.as_deref())?;

        let candidate: Vec<f64> = current.iter().zip(&w).map(|(c, wi)| c + delta * wi).collect();
        let (next, halted) = apply_boundary(&candidate, cfg_boundary);
        let was_projected = cfg_boundary.boundary == BoundaryPolicy::Project && next != candidate;

        let disp = sub(&next, &current);
        let seg_len = norm(&disp);
        let (seg_e, seg_pl) = if seg_len > 0.0 {
            let u: Vec<f64> = disp.iter().map(|d| d / seg_len).collect();
            (
                crate::tracer::segment_energy(&g, &u, seg_len),
                crate::tracer::pseudolength_bound(&g, &u, seg_len),
            )
        } else {
            (0.0, 0.0)
        };
        length += seg_len;
        poly.cumulative_energy += seg_e;
        poly.pseudolength_bound += seg_pl;
        poly.segment_energies.push(seg_e);
        poly.segment_plen_bounds.push(seg_pl);
        poly.projected_flags.push(was_projected);
        if was_projected {
            poly.projected_steps += 1;
        }
        poly.outputs.push(model.forward(&next)?);
        poly.points.push(next);
        dir = Some(w);

        if halted {
            poly.halted_at_boundary = true;
            status = SimexpStatus::BoundaryHalted;
            break;
        }
    }

    let direction = match dir {
        Some(d) => d,
        None => {
            // Zero-step leg: report the direction that would have been taken.
            let g = pullback_metric(model, p, &g_out)?;
            let dec = spectral_decompose(&g, cfg_boundary.tau_rel)?;
            if dec.rank() == 0 {
                return Err(Error::NoPositiveDirection { step: 0 });
            }
            select_direction(&dec, EigenDirection::Positive, None)?
        }
    };
    Ok(SimexpOutcome {
        polygonal: poly,
        direction,
        status,
        length,
    })
}

/// Why a transversal direction pass ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransversalEnd {
    /// |𝒩(p) − 𝒩(p₀)| exceeded ε: the band edge was crossed.
    CrossedBand,
    /// The transversal hit the region boundary under a halting policy.
    Boundary,
    /// A leg exhausted its step budget without moving the output by ε̃
    /// (typically the band contains an output extremum).
    Stalled,
}

/// The reconstructed preimage band: leaves, the transversal path that
/// anchored them, and summary bookkeeping.
#[derive(Debug, Clone)]
pub struct FoliationResult {
    /// One merged bidirectional SiMEC polygonal per transversal anchor, in
    /// visit order. `leaves[k]` is anchored at `transversal_points[k]`;
    /// `leaves[0]` is the medial leaf through p₀.
    pub leaves: Vec<Polygonal>,
    /// Anchor points visited by SiMExp, in visit order (p₀ first, then the
    /// +w₊ direction, then the −w₊ direction).
    pub transversal_points: Vec<Vec<f64>>,
    /// Micro-step transversal chains for the two direction passes.
    pub transversal_chains: [Polygonal; 2],
    /// 𝒩(p₀).
    pub center_output: f64,
    /// [min, max] of network outputs observed across leaves and transversal.
    pub covered_interval: (f64, f64),
    pub pass_ends: [TransversalEnd; 2],
    /// How many anchors after p₀ belong to the +w₊ pass.
    plus_anchor_count: usize,
}

impl FoliationResult {
    /// Mean distance between consecutive transversal anchor points, a proxy
    /// for the leaf spacing of the reconstruction.
    pub fn mean_leaf_spacing(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for run in self.anchor_runs() {
            for pair in run.windows(2) {
                total += norm(&sub(&pair[1], &pair[0]));
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }

    /// Anchors split back into the two direction runs, each starting at p₀.
    fn anchor_runs(&self) -> [Vec<Vec<f64>>; 2] {
        let p0 = self.transversal_points[0].clone();
        let plus_end = 1 + self.plus_anchor_count;
        let plus = self.transversal_points[..plus_end].to_vec();
        let mut minus = vec![p0];
        minus.extend_from_slice(&self.transversal_points[plus_end..]);
        [plus, minus]
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }
}

/// Build the foliation of the band [c − ε, c + ε] through `p0`.
///
/// Both direction passes start from p0; the leaf at p0 itself is traced
/// exactly once. Each pass alternates a SiMEC leaf trace with a SiMExp leg
/// and ends when the band edge is crossed, the boundary halts the
/// transversal, or a leg stalls at an output extremum.
pub fn preimage_interval(model: &MlpModel, p0: &[f64], cfg: &ExploreConfig) -> Result<FoliationResult> {
    preimage_interval_jobs(model, p0, cfg, 1)
}

/// [`preimage_interval`] with leaves traced on `jobs` threads. Results are
/// identical to the sequential run; ordering is by leaf index.
pub fn preimage_interval_jobs(
    model: &MlpModel,
    p0: &[f64],
    cfg: &ExploreConfig,
    jobs: usize,
) -> Result<FoliationResult> {
    cfg.validate()?;
    if model.output_dim() != 1 {
        return Err(Error::InvalidModel(
            "preimage reconstruction requires a scalar output".into(),
        ));
    }
    let center_output = model.forward(p0)?[0];
    if !center_output.is_finite() {
        return Err(Error::NonFinite("network output at start point"));
    }
    if cfg.simec.boundary != BoundaryPolicy::Ignore {
        let h = cfg.simec.hypercube.as_ref().expect("validated");
        if !h.contains(p0) {
            return Err(Error::StartOutsideBounds);
        }
    }

    // Transversal boundary handling; optionally free while leaves stay bound.
    let tcfg = TraceConfig {
        boundary: if cfg.allow_outside {
            BoundaryPolicy::Ignore
        } else {
            cfg.simec.boundary
        },
        ..cfg.simec.clone()
    };

    let g_out = Matrix::identity(1);
    let g0 = pullback_metric(model, p0, &g_out)?;
    let dec0 = spectral_decompose(&g0, cfg.simec.tau_rel)?;
    if dec0.rank() == 0 {
        return Err(Error::NoPositiveDirection { step: 0 });
    }
    let w0 = select_direction(&dec0, EigenDirection::Positive, None)?;

    let mut anchors: Vec<Vec<f64>> = vec![p0.to_vec()];
    let mut chains: Vec<Polygonal> = Vec::with_capacity(2);
    let mut pass_ends = [TransversalEnd::CrossedBand; 2];
    let mut plus_anchor_count = 0usize;

    for pass in 0..2 {
        let sign = if pass == 0 { 1.0 } else { -1.0 };
        let seed: Vec<f64> = w0.iter().map(|v| v * sign).collect();
        let mut chain = Polygonal::with_start(p0.to_vec(), Some(vec![center_output]));
        let mut point = p0.to_vec();
        let mut prev = seed.clone();
        loop {
            if anchors.len() >= cfg.max_leaves {
                return Err(Error::LeafBudgetExceeded {
                    leaves: anchors.len(),
                });
            }
            let leg = simexp_step(
                model,
                &point,
                Some(&prev),
                cfg.delta,
                cfg.leaf_eps,
                cfg.max_leaf_steps,
                &tcfg,
            )
            .map_err(|e| e.at_leaf(anchors.len()))?;
            point = leg.point().to_vec();
            let out = leg.output();
            prev = if cfg.wplus_once {
                seed.clone()
            } else {
                leg.direction.clone()
            };
            chain.append_chain(leg.polygonal);
            match leg.status {
                SimexpStatus::Stalled => {
                    pass_ends[pass] = TransversalEnd::Stalled;
                    break;
                }
                SimexpStatus::BoundaryHalted => {
                    pass_ends[pass] = TransversalEnd::Boundary;
                    break;
                }
                SimexpStatus::Reached => {}
            }
            if (out - center_output).abs() > cfg.tol_eps {
                pass_ends[pass] = TransversalEnd::CrossedBand;
                break;
            }
            anchors.push(point.clone());
            if pass == 0 {
                plus_anchor_count += 1;
            }
        }
        chains.push(chain);
    }

    let leaves = trace_leaves(model, &anchors, &cfg.simec, jobs)?;

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for poly in leaves.iter().chain(chains.iter()) {
        for out in &poly.outputs {
            lo = lo.min(out[0]);
            hi = hi.max(out[0]);
        }
    }

    let chains: [Polygonal; 2] = match chains.try_into() {
        Ok(c) => c,
        Err(_) => unreachable!("two passes"),
    };
    Ok(FoliationResult {
        leaves,
        transversal_points: anchors,
        transversal_chains: chains,
        center_output,
        covered_interval: (lo, hi),
        pass_ends,
        plus_anchor_count,
    })
}

/// Trace the full (bidirectional) SiMEC leaf anchored at `anchor`.
pub fn trace_leaf(
    provider: &PullbackProvider,
    anchor: &[f64],
    cfg: &TraceConfig,
) -> Result<Polygonal> {
    let g = provider.metric_at(anchor)?;
    let dec = spectral_decompose(&g, cfg.tau_rel)?;
    if dec.null_count() == 0 {
        return Err(Error::NoNullDirection { step: 0 });
    }
    let v = select_direction(&dec, EigenDirection::Null, None)?;
    let neg: Vec<f64> = v.iter().map(|c| -c).collect();
    let model = provider.model();
    let forward = simec_trace(provider, Some(model), anchor, Some(&v), cfg)?;
    let backward = simec_trace(provider, Some(model), anchor, Some(&neg), cfg)?;
    Ok(Polygonal::merge_bidirectional(backward, forward))
}

fn trace_leaves(
    model: &MlpModel,
    anchors: &[Vec<f64>],
    cfg: &TraceConfig,
    jobs: usize,
) -> Result<Vec<Polygonal>> {
    let provider = PullbackProvider::euclidean(model.clone());
    if jobs <= 1 || anchors.len() <= 1 {
        return anchors
            .iter()
            .enumerate()
            .map(|(i, a)| trace_leaf(&provider, a, cfg).map_err(|e| e.at_leaf(i)))
            .collect();
    }
    let chunk = anchors.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let provider = &provider;
        let handles: Vec<_> = anchors
            .chunks(chunk)
            .enumerate()
            .map(|(ci, items)| {
                scope.spawn(move || {
                    items
                        .iter()
                        .enumerate()
                        .map(|(i, a)| {
                            trace_leaf(provider, a, cfg).map_err(|e| e.at_leaf(ci * chunk + i))
                        })
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        let mut leaves = Vec::with_capacity(anchors.len());
        for h in handles {
            leaves.extend(h.join().expect("leaf tracing thread panicked")?);
        }
        Ok(leaves)
    })
}

/// Write `transversal.csv` and one `leaf_<k>.csv` per leaf into `dir`
/// (created if missing). The transversal file holds the two direction passes
/// merged into a single chain through p₀.
pub fn write_foliation_dir(res: &FoliationResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let merged = Polygonal::merge_bidirectional(
        res.transversal_chains[1].clone(),
        res.transversal_chains[0].clone(),
    );
    let mut buf = Vec::new();
    merged.write_csv(&mut buf)?;
    let mut f = fs::File::create(dir.join("transversal.csv"))?;
    f.write_all(&buf)?;

    for (k, leaf) in res.leaves.iter().enumerate() {
        let mut buf = Vec::new();
        leaf.write_csv(&mut buf)?;
        let mut f = fs::File::create(dir.join(format!("leaf_{k}.csv")))?;
        f.write_all(&buf)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::DEFAULT_TAU_REL;
    use crate::nn::{Activation, Layer};
    use crate::tracer::Hypercube;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// 𝒩(x, y) = x + 2y as a single identity layer.
    fn linear_model() -> MlpModel {
        MlpModel::new(vec![Layer::new(
            Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap(),
            vec![0.0],
            Activation::Identity,
        )
        .unwrap()])
        .unwrap()
    }

    fn free_tcfg(delta: f64, max_steps: usize) -> TraceConfig {
        TraceConfig {
            delta,
            max_steps,
            boundary: BoundaryPolicy::Ignore,
            hypercube: None,
            tau_rel: DEFAULT_TAU_REL,
        }
    }

    #[test]
    fn linear_pullback_and_wplus() {
        let model = linear_model();
        let g = pullback_metric(&model, &[0.0, 0.0], &Matrix::identity(1)).unwrap();
        assert_eq!(g.matrix().to_rows(), vec![vec![1.0, 2.0], vec![2.0, 4.0]]);
        let dec = spectral_decompose(&g, DEFAULT_TAU_REL).unwrap();
        assert_eq!(dec.null_count(), 1);
        assert_close(dec.eigenvalues()[1], 5.0, 1e-12);
        let w = select_direction(&dec, EigenDirection::Positive, None).unwrap();
        let s5 = 5f64.sqrt();
        assert_close(w[0], 1.0 / s5, 1e-12);
        assert_close(w[1], 2.0 / s5, 1e-12);
    }

    #[test]
    fn linear_step_count_is_closed_form() {
        let model = linear_model();
        let delta = 0.01;
        let leaf_eps = 0.1;
        let out = simexp_step(
            &model,
            &[0.0, 0.0],
            None,
            delta,
            leaf_eps,
            10_000,
            &free_tcfg(delta, 0),
        )
        .unwrap();
        assert_eq!(out.status, SimexpStatus::Reached);
        // Output advances by δ√5 per step.
        let expected_steps = (leaf_eps / (delta * 5f64.sqrt())).ceil() as usize;
        assert_eq!(out.polygonal.len() - 1, expected_steps);
        assert_close(
            out.output().abs(),
            expected_steps as f64 * delta * 5f64.sqrt(),
            1e-12,
        );
        assert_close(out.length, expected_steps as f64 * delta, 1e-12);
    }

    #[test]
    fn zero_leaf_eps_returns_immediately() {
        let model = linear_model();
        let out = simexp_step(&model, &[0.3, 0.4], None, 0.01, 0.0, 100, &free_tcfg(0.01, 0))
            .unwrap();
        assert_eq!(out.status, SimexpStatus::Reached);
        assert_eq!(out.point(), &[0.3, 0.4]);
        assert_eq!(out.polygonal.len(), 1);
        // Direction still reported.
        assert_close(norm(&out.direction), 1.0, 1e-12);
    }

    #[test]
    fn stall_is_reported_distinctly() {
        let model = linear_model();
        let out = simexp_step(&model, &[0.0, 0.0], None, 1e-4, 0.5, 10, &free_tcfg(1e-4, 0))
            .unwrap();
        assert_eq!(out.status, SimexpStatus::Stalled);
        assert_eq!(out.polygonal.len(), 11);
    }

    #[test]
    fn transversal_outputs_monotone_on_linear_model() {
        let model = linear_model();
        let out = simexp_step(&model, &[0.0, 0.0], None, 0.01, 0.3, 1000, &free_tcfg(0.01, 0))
            .unwrap();
        for pair in out.polygonal.outputs.windows(2) {
            assert!(pair[1][0] > pair[0][0], "strictly increasing along +w₊");
        }
        let down = simexp_step(
            &model,
            &[0.0, 0.0],
            Some(&[-out.direction[0], -out.direction[1]]),
            0.01,
            0.3,
            1000,
            &free_tcfg(0.01, 0),
        )
        .unwrap();
        for pair in down.polygonal.outputs.windows(2) {
            assert!(pair[1][0] < pair[0][0], "strictly decreasing along −w₊");
        }
    }

    fn strip_cfg() -> ExploreConfig {
        ExploreConfig {
            delta: 1e-3,
            tol_eps: 0.1,
            leaf_eps: 0.01,
            max_leaf_steps: 100_000,
            simec: TraceConfig {
                delta: 5e-3,
                max_steps: 1000,
                boundary: BoundaryPolicy::Halt,
                hypercube: Some(Hypercube::square2(0.0, 1.0).unwrap()),
                tau_rel: DEFAULT_TAU_REL,
            },
            allow_outside: false,
            wplus_once: false,
            max_leaves: 10_000,
        }
    }

    #[test]
    fn config_rejects_eps_below_leaf_eps() {
        let mut cfg = strip_cfg();
        cfg.tol_eps = 0.005; // smaller than leaf_eps
        assert!(cfg.validate().is_err());
        assert!(preimage_interval(&linear_model(), &[0.5, 0.5], &cfg).is_err());
    }

    #[test]
    fn strip_foliation_covers_band() {
        let model = linear_model();
        let cfg = strip_cfg();
        let res = preimage_interval(&model, &[0.5, 0.5], &cfg).unwrap();
        assert_close(res.center_output, 1.5, 1e-12);
        assert!(res.leaf_count() >= 10, "got {} leaves", res.leaf_count());
        assert_eq!(res.leaves.len(), res.transversal_points.len());

        // Interval containment: every leaf vertex stays within ε plus slack.
        for leaf in &res.leaves {
            for out in &leaf.outputs {
                assert!(
                    (out[0] - 1.5).abs() <= cfg.tol_eps + 1e-3,
                    "leaf output {} outside band",
                    out[0]
                );
            }
        }

        // p₀ anchors exactly one leaf.
        let p0_hits = res
            .transversal_points
            .iter()
            .filter(|p| p.as_slice() == [0.5, 0.5])
            .count();
        assert_eq!(p0_hits, 1);

        // Both passes cross the band edge inside this box.
        assert_eq!(res.pass_ends, [TransversalEnd::CrossedBand; 2]);
        assert!(res.covered_interval.0 >= 1.5 - cfg.tol_eps - 0.02);
        assert!(res.covered_interval.1 <= 1.5 + cfg.tol_eps + 0.02);
        assert!(res.mean_leaf_spacing() > 0.0);
    }

    #[test]
    fn parallel_leaves_match_sequential() {
        let model = linear_model();
        let cfg = strip_cfg();
        let seq = preimage_interval_jobs(&model, &[0.5, 0.5], &cfg, 1).unwrap();
        let par = preimage_interval_jobs(&model, &[0.5, 0.5], &cfg, 4).unwrap();
        assert_eq!(seq.leaves.len(), par.leaves.len());
        for (a, b) in seq.leaves.iter().zip(&par.leaves) {
            assert_eq!(a.points, b.points);
            assert_eq!(a.segment_energies, b.segment_energies);
        }
    }

    #[test]
    fn foliation_dir_layout() {
        let model = linear_model();
        let mut cfg = strip_cfg();
        cfg.leaf_eps = 0.04; // fewer leaves, faster
        let res = preimage_interval(&model, &[0.5, 0.5], &cfg).unwrap();
        let dir = std::env::temp_dir().join(format!("simec-fol-test-{}", std::process::id()));
        write_foliation_dir(&res, &dir).unwrap();
        assert!(dir.join("transversal.csv").is_file());
        for k in 0..res.leaf_count() {
            assert!(dir.join(format!("leaf_{k}.csv")).is_file());
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
