//! Independent brute-force ground truth used to validate the tracing code.
//!
//! Nothing here shares a code path with the metric/tracer machinery: Jacobians
//! come from central finite differences, level curves from marching squares on
//! a dense grid, and preimages from exhaustive node scans. Tests compare the
//! fast implementations against these.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tracer::Hypercube;

pub const DEFAULT_GRID_RESOLUTION: usize = 512;
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// A dense sampling grid over a 2-D box: `resolution` samples per axis,
/// endpoints included.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub bounds: Hypercube,
    pub resolution: usize,
}

impl GridSpec {
    pub fn new(bounds: Hypercube, resolution: usize) -> Result<Self> {
        if bounds.dim() != 2 {
            return Err(Error::InvalidConfig("grid bounds must be 2-dimensional".into()));
        }
        if resolution < 2 {
            return Err(Error::InvalidConfig("grid resolution must be at least 2".into()));
        }
        Ok(GridSpec { bounds, resolution })
    }

    pub fn node(&self, ix: usize, iy: usize) -> [f64; 2] {
        let nx = (self.resolution - 1) as f64;
        [
            self.bounds.lo()[0] + ix as f64 * self.bounds.side(0) / nx,
            self.bounds.lo()[1] + iy as f64 * self.bounds.side(1) / nx,
        ]
    }

    /// Diagonal of one grid cell.
    pub fn cell_diagonal(&self) -> f64 {
        let n = (self.resolution - 1) as f64;
        let sx = self.bounds.side(0) / n;
        let sy = self.bounds.side(1) / n;
        sx.hypot(sy)
    }
}

/// Evaluate `f` on every grid node (row-major in y, then x), optionally
/// splitting rows across `jobs` threads. Node order and values are identical
/// either way.
pub fn evaluate_grid(
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    grid: &GridSpec,
    jobs: usize,
) -> Result<Vec<f64>> {
    let res = grid.resolution;
    let eval_row = |iy: usize| -> Vec<f64> {
        (0..res)
            .map(|ix| {
                let p = grid.node(ix, iy);
                f(p[0], p[1])
            })
            .collect()
    };
    let values: Vec<f64> = if jobs <= 1 {
        (0..res).flat_map(eval_row).collect()
    } else {
        let chunk = res.div_ceil(jobs);
        let rows: Vec<usize> = (0..res).collect();
        std::thread::scope(|scope| {
            let handles: Vec<_> = rows
                .chunks(chunk)
                .map(|ys| scope.spawn(move || ys.iter().flat_map(|&iy| eval_row(iy)).collect::<Vec<f64>>()))
                .collect();
            let mut out = Vec::with_capacity(res * res);
            for h in handles {
                out.extend(h.join().expect("grid thread panicked"));
            }
            out
        })
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("grid evaluation"));
    }
    Ok(values)
}

/// Central-difference Jacobian of a vector function, column per coordinate.
pub fn fd_jacobian(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    h: f64,
) -> Result<Matrix> {
    if !(h > 0.0) {
        return Err(Error::InvalidConfig("finite-difference step must be positive".into()));
    }
    let mut probe = x.to_vec();
    let mut jac: Option<Matrix> = None;
    for j in 0..x.len() {
        probe[j] = x[j] + h;
        let plus = f(&probe);
        probe[j] = x[j] - h;
        let minus = f(&probe);
        probe[j] = x[j];
        if plus.len() != minus.len() {
            return Err(Error::ShapeMismatch {
                context: "fd_jacobian output",
                expected: plus.len(),
                actual: minus.len(),
            });
        }
        let m = jac.get_or_insert_with(|| Matrix::zeros(plus.len(), x.len()));
        for r in 0..plus.len() {
            let d = (plus[r] - minus[r]) / (2.0 * h);
            if !d.is_finite() {
                return Err(Error::NonFinite("fd_jacobian"));
            }
            m[(r, j)] = d;
        }
    }
    jac.ok_or(Error::ShapeMismatch {
        context: "fd_jacobian input",
        expected: 1,
        actual: 0,
    })
}

/// Level curves extracted by marching squares.
#[derive(Debug, Clone)]
pub struct ContourSet {
    pub polylines: Vec<Vec<[f64; 2]>>,
    pub level: f64,
}

impl ContourSet {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    /// All vertices flattened into one point set.
    pub fn vertices(&self) -> Vec<[f64; 2]> {
        self.polylines.iter().flatten().copied().collect()
    }
}

/// Marching squares with linear interpolation on cell edges.
///
/// A node counts as inside when `f ≥ level`. Saddle cells (two opposite
/// corners inside) are disambiguated by sampling `f` at the cell center.
/// Crossing points are computed once per grid edge, so adjacent cells agree
/// bit-for-bit and segments stitch into polylines by shared edge id. A level
/// outside the sampled range yields an empty set, not an error.
pub fn marching_contour(
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    grid: &GridSpec,
    level: f64,
) -> Result<ContourSet> {
    let values = evaluate_grid(f, grid, 1)?;
    marching_contour_from_values(f, &values, grid, level)
}

/// [`marching_contour`] on precomputed node values (`evaluate_grid` layout).
/// `f` is still consulted, only at ambiguous cell centers.
pub fn marching_contour_from_values(
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    values: &[f64],
    grid: &GridSpec,
    level: f64,
) -> Result<ContourSet> {
    let res = grid.resolution;
    if values.len() != res * res {
        return Err(Error::ShapeMismatch {
            context: "grid values",
            expected: res * res,
            actual: values.len(),
        });
    }
    let at = |ix: usize, iy: usize| values[iy * res + ix];

    // Edge ids: horizontal edges (between x-neighbours) come first.
    let h_count = (res - 1) * res;
    let h_edge = |ix: usize, iy: usize| iy * (res - 1) + ix;
    let v_edge = |ix: usize, iy: usize| h_count + iy * res + ix;

    let mut crossing: HashMap<usize, [f64; 2]> = HashMap::new();
    let cross_h = |ix: usize, iy: usize, crossing: &mut HashMap<usize, [f64; 2]>| -> usize {
        let id = h_edge(ix, iy);
        crossing.entry(id).or_insert_with(|| {
            let a = grid.node(ix, iy);
            let b = grid.node(ix + 1, iy);
            let (va, vb) = (at(ix, iy), at(ix + 1, iy));
            let t = (level - va) / (vb - va);
            [a[0] + t * (b[0] - a[0]), a[1]]
        });
        id
    };
    let cross_v = |ix: usize, iy: usize, crossing: &mut HashMap<usize, [f64; 2]>| -> usize {
        let id = v_edge(ix, iy);
        crossing.entry(id).or_insert_with(|| {
            let a = grid.node(ix, iy);
            let b = grid.node(ix, iy + 1);
            let (va, vb) = (at(ix, iy), at(ix, iy + 1));
            let t = (level - va) / (vb - va);
            [a[0], a[1] + t * (b[1] - a[1])]
        });
        id
    };

    // Collect segments as (edge id, edge id) pairs, cell by cell.
    let mut segments: Vec<(usize, usize)> = Vec::new();
    for iy in 0..res - 1 {
        for ix in 0..res - 1 {
            let inside = |v: f64| v >= level;
            let c00 = inside(at(ix, iy));
            let c10 = inside(at(ix + 1, iy));
            let c11 = inside(at(ix + 1, iy + 1));
            let c01 = inside(at(ix, iy + 1));
            let case =
                (c00 as u8) | (c10 as u8) << 1 | (c11 as u8) << 2 | (c01 as u8) << 3;
            if case == 0 || case == 15 {
                continue;
            }
            let bottom = |cr: &mut HashMap<usize, [f64; 2]>| cross_h(ix, iy, cr);
            let top = |cr: &mut HashMap<usize, [f64; 2]>| cross_h(ix, iy + 1, cr);
            let left = |cr: &mut HashMap<usize, [f64; 2]>| cross_v(ix, iy, cr);
            let right = |cr: &mut HashMap<usize, [f64; 2]>| cross_v(ix + 1, iy, cr);
            match case {
                1 | 14 => segments.push((left(&mut crossing), bottom(&mut crossing))),
                2 | 13 => segments.push((bottom(&mut crossing), right(&mut crossing))),
                3 | 12 => segments.push((left(&mut crossing), right(&mut crossing))),
                4 | 11 => segments.push((right(&mut crossing), top(&mut crossing))),
                6 | 9 => segments.push((bottom(&mut crossing), top(&mut crossing))),
                7 | 8 => segments.push((left(&mut crossing), top(&mut crossing))),
                5 | 10 => {
                    // Saddle: decide connectivity from the cell center.
                    let a = grid.node(ix, iy);
                    let b = grid.node(ix + 1, iy + 1);
                    let center_inside = inside(f(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])));
                    let pairs_through = case == 5 && center_inside || case == 10 && !center_inside;
                    if pairs_through {
                        // Inside diagonal connected: cut off the other corners.
                        segments.push((bottom(&mut crossing), right(&mut crossing)));
                        segments.push((left(&mut crossing), top(&mut crossing)));
                    } else {
                        segments.push((left(&mut crossing), bottom(&mut crossing)));
                        segments.push((right(&mut crossing), top(&mut crossing)));
                    }
                }
                _ => unreachable!("cases 0 and 15 skipped"),
            }
        }
    }

    // Stitch segments into polylines by shared edge endpoints.
    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(i);
        adjacency.entry(*b).or_default().push(i);
    }
    let other_end = |seg: (usize, usize), edge: usize| if seg.0 == edge { seg.1 } else { seg.0 };
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a0, b0) = segments[start];
        let mut chain = vec![a0, b0];
        // Extend forward from the b end, then backward from the a end.
        for forward in [true, false] {
            loop {
                let tip = if forward { *chain.last().expect("non-empty") } else { chain[0] };
                let next = adjacency
                    .get(&tip)
                    .and_then(|segs| segs.iter().find(|&&s| !used[s]).copied());
                match next {
                    Some(s) => {
                        used[s] = true;
                        let nxt = other_end(segments[s], tip);
                        if forward {
                            chain.push(nxt);
                        } else {
                            chain.insert(0, nxt);
                        }
                    }
                    None => break,
                }
            }
        }
        let pts: Vec<[f64; 2]> = chain.iter().map(|e| crossing[e]).collect();
        polylines.push(pts);
    }
    Ok(ContourSet { polylines, level })
}

/// All grid nodes whose value falls inside [lo, hi].
pub fn grid_preimage(
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    grid: &GridSpec,
    lo: f64,
    hi: f64,
) -> Result<Vec<[f64; 2]>> {
    if lo > hi {
        return Err(Error::InvalidConfig(format!(
            "empty interval: lo ({lo}) exceeds hi ({hi})"
        )));
    }
    let values = grid_preimage_from_values(&evaluate_grid(f, grid, 1)?, grid, lo, hi)?;
    Ok(values)
}

pub fn grid_preimage_from_values(
    values: &[f64],
    grid: &GridSpec,
    lo: f64,
    hi: f64,
) -> Result<Vec<[f64; 2]>> {
    if lo > hi {
        return Err(Error::InvalidConfig(format!(
            "empty interval: lo ({lo}) exceeds hi ({hi})"
        )));
    }
    let res = grid.resolution;
    if values.len() != res * res {
        return Err(Error::ShapeMismatch {
            context: "grid values",
            expected: res * res,
            actual: values.len(),
        });
    }
    let mut out = Vec::new();
    for iy in 0..res {
        for ix in 0..res {
            let v = values[iy * res + ix];
            if v >= lo && v <= hi {
                out.push(grid.node(ix, iy));
            }
        }
    }
    Ok(out)
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// max over a of min over b of the distance — brute force.
pub fn directed_hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPointSet("hausdorff"));
    }
    let mut worst = 0.0f64;
    for p in a {
        let mut best = f64::INFINITY;
        for q in b {
            let d = dist2(*p, *q);
            if d < best {
                best = d;
            }
        }
        worst = worst.max(best);
    }
    Ok(worst.sqrt())
}

/// Symmetric Hausdorff distance between two point sets, brute force O(|a||b|).
pub fn hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// Number of distinct grid cells containing at least one of the points; a
/// grid-counted area proxy for a traced point cloud. Points outside the grid
/// bounds are ignored.
pub fn occupied_cell_count(points: &[[f64; 2]], grid: &GridSpec) -> usize {
    let cells = (grid.resolution - 1) as f64;
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    for p in points {
        if !grid.bounds.contains(p) {
            continue;
        }
        let fx = (p[0] - grid.bounds.lo()[0]) / grid.bounds.side(0) * cells;
        let fy = (p[1] - grid.bounds.lo()[1]) / grid.bounds.side(1) * cells;
        let ix = (fx.floor() as usize).min(grid.resolution - 2);
        let iy = (fy.floor() as usize).min(grid.resolution - 2);
        seen.insert((ix, iy));
    }
    seen.len()
}

/// Convert d-dimensional trace vertices to 2-D oracle points.
pub fn to_points2(points: &[Vec<f64>]) -> Result<Vec<[f64; 2]>> {
    points
        .iter()
        .map(|p| {
            if p.len() == 2 {
                Ok([p[0], p[1]])
            } else {
                Err(Error::ShapeMismatch {
                    context: "2-D point conversion",
                    expected: 2,
                    actual: p.len(),
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn unit_grid(res: usize) -> GridSpec {
        GridSpec::new(Hypercube::square2(-1.0, 1.0).unwrap(), res).unwrap()
    }

    #[test]
    fn fd_jacobian_exact_on_affine() {
        // Central differences are truncation-free on affine maps; h = 1e-5
        // keeps the subtraction roundoff (≈ eps·|f|/2h) under the tolerance.
        let f = |x: &[f64]| vec![2.0 * x[0] - x[1] + 3.0, 0.5 * x[1]];
        let j = fd_jacobian(&f, &[0.3, -0.8], 1e-5).unwrap();
        assert_close(j[(0, 0)], 2.0, 1e-10);
        assert_close(j[(0, 1)], -1.0, 1e-10);
        assert_close(j[(1, 0)], 0.0, 1e-10);
        assert_close(j[(1, 1)], 0.5, 1e-10);
    }

    #[test]
    fn fd_jacobian_square_at_three() {
        let f = |x: &[f64]| vec![x[0] * x[0]];
        let j = fd_jacobian(&f, &[3.0], 1e-6).unwrap();
        assert_close(j[(0, 0)], 6.0, 1e-9);
    }

    #[test]
    fn fd_jacobian_rejects_nonfinite() {
        // The backward probe lands at −h where the square root is NaN.
        let f = |x: &[f64]| vec![x[0].sqrt()];
        assert!(fd_jacobian(&f, &[0.0], 1e-6).is_err());
    }

    #[test]
    fn contour_of_circle_matches_radius() {
        let grid = unit_grid(256);
        let level = 0.125;
        let contour = marching_contour(&|x, y| x * x + y * y, &grid, level).unwrap();
        assert!(!contour.is_empty());
        let r = level.sqrt();
        let bound = 2.0 * grid.bounds.side(0) / grid.resolution as f64;
        let mut count = 0;
        for pl in &contour.polylines {
            for p in pl {
                let dev = (p[0].hypot(p[1]) - r).abs();
                assert!(dev <= bound, "radius deviation {dev} > {bound}");
                count += 1;
            }
        }
        assert!(count > 50);
        // Single closed loop: endpoints coincide.
        assert_eq!(contour.polylines.len(), 1);
        let pl = &contour.polylines[0];
        assert_eq!(pl.first(), pl.last());
    }

    #[test]
    fn contour_below_min_is_empty() {
        let grid = unit_grid(64);
        let contour = marching_contour(&|x, y| x * x + y * y, &grid, -1.0).unwrap();
        assert!(contour.is_empty());
    }

    #[test]
    fn contour_of_sine_difference() {
        let bounds = Hypercube::new(
            vec![-std::f64::consts::PI, -1.0],
            vec![std::f64::consts::PI, 1.0],
        )
        .unwrap();
        let grid = GridSpec::new(bounds, 256).unwrap();
        let contour = marching_contour(&|x, y| y - x.sin(), &grid, 0.0).unwrap();
        let verts = contour.vertices();
        assert!(verts.len() > 100);
        for p in &verts {
            assert!((p[1] - p[0].sin()).abs() <= 2.0 * grid.cell_diagonal());
        }
    }

    #[test]
    fn preimage_of_linear_strip() {
        let grid = GridSpec::new(Hypercube::square2(0.0, 1.0).unwrap(), 101).unwrap();
        let nodes = grid_preimage(&|x, y| x + 2.0 * y, &grid, 1.4, 1.6).unwrap();
        assert!(!nodes.is_empty());
        for p in &nodes {
            let v = p[0] + 2.0 * p[1];
            assert!((1.4..=1.6).contains(&v));
        }
        // Monotone in the interval.
        let wider = grid_preimage(&|x, y| x + 2.0 * y, &grid, 1.3, 1.7).unwrap();
        assert!(wider.len() > nodes.len());
        assert!(grid_preimage(&|x, y| x + y, &grid, 1.0, 0.5).is_err());
    }

    #[test]
    fn hausdorff_basics() {
        let a = [[0.0, 0.0], [1.0, 1.0]];
        assert_close(hausdorff(&a, &a).unwrap(), 0.0, 0.0);
        let b = [[3.0, 4.0]];
        let single = [[0.0, 0.0]];
        assert_close(hausdorff(&single, &b).unwrap(), 5.0, 1e-15);
        assert!(hausdorff(&[], &b).is_err());
    }

    #[test]
    fn hausdorff_symmetric_and_triangle() {
        let mut rng = SplitMix64::new(123);
        let mut random_set = |n: usize| -> Vec<[f64; 2]> {
            (0..n)
                .map(|_| [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)])
                .collect()
        };
        for _ in 0..100 {
            let a = random_set(5);
            let b = random_set(7);
            let c = random_set(4);
            let ab = hausdorff(&a, &b).unwrap();
            let ba = hausdorff(&b, &a).unwrap();
            assert_eq!(ab, ba);
            let ac = hausdorff(&a, &c).unwrap();
            let cb = hausdorff(&c, &b).unwrap();
            assert!(ab <= ac + cb + 1e-12);
        }
    }

    #[test]
    fn occupied_cells_count_distinct() {
        let grid = unit_grid(11); // cells of side 0.2
        let pts = [[-0.99, -0.99], [-0.95, -0.95], [0.99, 0.99], [5.0, 5.0]];
        assert_eq!(occupied_cell_count(&pts, &grid), 2);
    }

    #[test]
    fn parallel_grid_eval_matches_sequential() {
        let grid = unit_grid(64);
        let f = |x: f64, y: f64| (x * 3.0).sin() * y + x;
        let seq = evaluate_grid(&f, &grid, 1).unwrap();
        let par = evaluate_grid(&f, &grid, 4).unwrap();
        assert_eq!(seq, par);
    }
}
