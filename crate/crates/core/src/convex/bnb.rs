//! Branch and bound for maximising a convex function of pure-state parameters.
//!
//! Each factor is a Bloch ball in `R³`; its boundary sphere is covered by the six cube
//! faces, subdivided into rectangles. A rectangle's spherical patch sits inside a
//! truncated pyramid with eight vertices, so the maximum of a convex function over the
//! patch is at most its maximum over those points. For positively homogeneous
//! functions the four outer vertices suffice.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Rect {
    face: usize,
    s0: f64,
    s1: f64,
    t0: f64,
    t1: f64,
}

impl Rect {
    fn point(&self, s: f64, t: f64) -> [f64; 3] {
        let axis = self.face / 2;
        let sign = if self.face.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut p = [0.0; 3];
        p[axis] = sign;
        p[(axis + 1) % 3] = s;
        p[(axis + 2) % 3] = t;
        p
    }

    fn corners(&self) -> [[f64; 3]; 4] {
        [self.point(self.s0, self.t0), self.point(self.s1, self.t0), self.point(self.s0, self.t1), self.point(self.s1, self.t1)]
    }

    fn centre_on_sphere(&self) -> [f64; 3] {
        let p = self.point(0.5 * (self.s0 + self.s1), 0.5 * (self.t0 + self.t1));
        scale3(&p, 1.0 / norm3(&p))
    }

    fn size(&self) -> f64 {
        (self.s1 - self.s0).max(self.t1 - self.t0)
    }

    fn split(&self) -> [Rect; 4] {
        let sm = 0.5 * (self.s0 + self.s1);
        let tm = 0.5 * (self.t0 + self.t1);
        [
            Rect { s1: sm, t1: tm, ..*self },
            Rect { s0: sm, t1: tm, ..*self },
            Rect { s1: sm, t0: tm, ..*self },
            Rect { s0: sm, t0: tm, ..*self },
        ]
    }

    /// Hull points of the patch.
    ///
    /// Cube-face rectangles map to geodesic quadrilaterals, so the patch lies in the
    /// cone over the corners between the tangent plane at the centre and the parallel
    /// plane through the farthest corner.
    fn hull(&self, homogeneous: bool) -> Vec<[f64; 3]> {
        let m = self.centre_on_sphere();
        let dirs: Vec<[f64; 3]> = self.corners().iter().map(|c| scale3(c, 1.0 / norm3(c))).collect();
        let cos: Vec<f64> = dirs.iter().map(|d| dot3(d, &m)).collect();
        let cmin = cos.iter().copied().fold(f64::INFINITY, f64::min);
        let mut out = Vec::with_capacity(8);
        for (d, c) in dirs.iter().zip(&cos) {
            out.push(scale3(d, 1.0 / c));
            if !homogeneous {
                out.push(scale3(d, cmin / c));
            }
        }
        out
    }
}

fn norm3(p: &[f64; 3]) -> f64 {
    dot3(p, p).sqrt()
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale3(p: &[f64; 3], s: f64) -> [f64; 3] {
    [p[0] * s, p[1] * s, p[2] * s]
}

#[derive(Clone, Debug)]
struct Cell {
    rects: Vec<Rect>,
    upper: f64,
    seq: u64,
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    fn cmp(&self, o: &Self) -> Ordering {
        self.upper.total_cmp(&o.upper).then(o.seq.cmp(&self.seq))
    }
}

/// Outcome of [`maximize`].
#[derive(Clone, Debug, PartialEq)]
pub struct BnbResult {
    pub lower: f64,
    pub upper: f64,
    /// Sphere points (one per factor) attaining `lower`.
    pub argmax: Vec<[f64; 3]>,
    pub evals: usize,
    pub converged: bool,
}

/// Maximises a convex `g` over the product of `factors` unit spheres.
///
/// `g` returns an interval `[lo, hi]` enclosing its value (e.g. a certified support
/// value). With `homogeneous` (one factor, `g(αu) = αg(u)`, `g ≥ 0`) the cheaper
/// four-point bound is used.
pub fn maximize<G>(factors: usize, homogeneous: bool, mut g: G, rel_tol: f64, max_evals: usize) -> Result<BnbResult>
where
    G: FnMut(&[[f64; 3]]) -> Result<(f64, f64)>,
{
    assert!(factors >= 1 && (!homogeneous || factors == 1));
    let mut cache: HashMap<Vec<i64>, (f64, f64)> = HashMap::new();
    let mut evals = 0usize;
    let key = |pts: &[[f64; 3]]| -> Vec<i64> { pts.iter().flatten().map(|v| (v * 2f64.powi(40)).round() as i64).collect() };
    let mut eval = |pts: &[[f64; 3]], evals: &mut usize| -> Result<(f64, f64)> {
        let k = key(pts);
        if let Some(v) = cache.get(&k) {
            return Ok(*v);
        }
        *evals += 1;
        let v = g(pts)?;
        cache.insert(k, v);
        Ok(v)
    };
    let faces: Vec<Rect> = (0..6).map(|face| Rect { face, s0: -1.0, s1: 1.0, t0: -1.0, t1: 1.0 }).collect();
    let mut initial: Vec<Vec<Rect>> = vec![vec![]];
    for _ in 0..factors {
        initial = initial
            .into_iter()
            .flat_map(|prefix| faces.iter().map(move |r| {
                let mut p = prefix.clone();
                p.push(*r);
                p
            }))
            .collect();
    }
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut best = (f64::NEG_INFINITY, vec![[0.0; 3]; factors]);
    let mut bound_cell = |rects: Vec<Rect>, evals: &mut usize, best: &mut (f64, Vec<[f64; 3]>)| -> Result<Cell> {
        let centre: Vec<[f64; 3]> = rects.iter().map(|r| r.centre_on_sphere()).collect();
        let (lo, _) = eval(&centre, evals)?;
        if lo > best.0 {
            *best = (lo, centre);
        }
        let hulls: Vec<Vec<[f64; 3]>> = rects.iter().map(|r| r.hull(homogeneous)).collect();
        let mut upper = f64::NEG_INFINITY;
        let mut idx = vec![0usize; factors];
        loop {
            let pts: Vec<[f64; 3]> = idx.iter().zip(&hulls).map(|(&i, h)| h[i]).collect();
            let (_, hi) = eval(&pts, evals)?;
            upper = upper.max(hi);
            let mut k = 0;
            loop {
                if k == factors {
                    seq += 1;
                    return Ok(Cell { rects, upper, seq });
                }
                idx[k] += 1;
                if idx[k] < hulls[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    };
    for rects in initial {
        let cell = bound_cell(rects, &mut evals, &mut best)?;
        heap.push(cell);
    }
    loop {
        let top = heap.peek().map(|c| c.upper).unwrap_or(best.0);
        let upper = top.max(best.0);
        let done = upper - best.0 <= rel_tol * upper.abs().max(1e-12);
        if done || evals >= max_evals {
            return Ok(BnbResult { lower: best.0, upper, argmax: best.1, evals, converged: done });
        }
        let cell = heap.pop().expect("heap is non-empty while the gap is open");
        let k = (0..factors)
            .max_by(|&a, &b| cell.rects[a].size().total_cmp(&cell.rects[b].size()).then(b.cmp(&a)))
            .unwrap();
        for child in cell.rects[k].split() {
            let mut rects = cell.rects.clone();
            rects[k] = child;
            let c = bound_cell(rects, &mut evals, &mut best)?;
            if c.upper > best.0 {
                heap.push(c);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_of_linear_image() {
        // g(u) = |A u| for a fixed matrix: max over the sphere is the top singular value
        let a = [[3.0, 1.0, 0.0], [0.0, 1.0, 0.5], [0.2, 0.0, 2.0]];
        let g = |p: &[[f64; 3]]| -> Result<(f64, f64)> {
            let u = p[0];
            let v: Vec<f64> = a.iter().map(|r| r[0] * u[0] + r[1] * u[1] + r[2] * u[2]).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            Ok((n, n))
        };
        let res = maximize(1, true, g, 1e-7, 100_000).unwrap();
        let m = nalgebra::Matrix3::new(3.0, 1.0, 0.0, 0.0, 1.0, 0.5, 0.2, 0.0, 2.0);
        let smax = m.singular_values().max();
        assert!(res.converged);
        assert!(res.lower <= smax + 1e-12 && res.upper >= smax - 1e-12, "{res:?} vs {smax}");
        assert!(res.upper - res.lower <= 1e-6 * smax);
    }

    #[test]
    fn affine_pair_of_spheres() {
        // g(u, w) = c·u − c·w + 1 peaks at 2|c| + 1
        let c = [0.3, -0.4, 1.2];
        let g = |p: &[[f64; 3]]| -> Result<(f64, f64)> {
            let v = 1.0 + (0..3).map(|i| c[i] * (p[0][i] - p[1][i])).sum::<f64>();
            Ok((v, v))
        };
        let res = maximize(2, false, g, 1e-4, 200_000).unwrap();
        let exact = 1.0 + 2.0 * (c.iter().map(|x| x * x).sum::<f64>()).sqrt();
        assert!(res.lower <= exact + 1e-12 && res.upper >= exact - 1e-12);
        assert!(res.converged, "{res:?}");
    }
}
