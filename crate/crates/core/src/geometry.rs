//! Finite point clouds as stand-ins for non-empty compact subsets of
//! Euclidean space, together with the Hausdorff-Pompeiu metric, the
//! sup-distance between sets, diameters and greedy decimation.
//!
//! Every numeric result here is exact in the sense that it is the max/min of
//! the same pairwise distance function over the finite clouds; accelerated
//! paths (sorted 1-D search, hashed grids in 2-D/3-D) only prune candidates
//! and therefore agree bit-for-bit with brute force.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;

/// Clouds smaller than this are processed sequentially.
const PAR_THRESHOLD: usize = 2048;

/// A point of the ambient space.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len())?;
        check_finite(&coords)?;
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point(vec![x])
    }
}

/// Non-empty finite point cloud of a fixed dimension, stored row-major.
///
/// Duplicates are allowed; every metric quantity is invariant under
/// duplication and reordering.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidPoint(format!(
            "dimension {dim} outside 1..={MAX_DIM}"
        )));
    }
    Ok(())
}

fn check_finite(coords: &[f64]) -> Result<()> {
    if let Some(x) = coords.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidPoint(format!("non-finite coordinate {x}")));
    }
    Ok(())
}

impl PointSet {
    /// Builds a cloud from flat row-major coordinates.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if coords.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidPoint(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        check_finite(&coords)?;
        Ok(PointSet { dim, coords })
    }

    pub fn from_points(points: &[Point]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyPointSet)?;
        let dim = first.dim();
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            coords.extend_from_slice(p.coords());
        }
        PointSet::new(dim, coords)
    }

    /// Builds a 1-D cloud from scalar values.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        PointSet::new(1, values.to_vec())
    }

    pub fn singleton(p: &[f64]) -> Result<Self> {
        PointSet::new(p.len(), p.to_vec())
    }

    /// Caller guarantees the invariants (used for images of valid clouds).
    pub(crate) fn from_raw(dim: usize, coords: Vec<f64>) -> Self {
        debug_assert!(dim >= 1 && !coords.is_empty() && coords.len().is_multiple_of(dim));
        PointSet { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.iter().map(|p| Point(p.to_vec())).collect()
    }

    /// Appends all points of `other`.
    pub fn extend(&mut self, other: &PointSet) -> Result<()> {
        same_dim(self, other)?;
        self.coords.extend_from_slice(&other.coords);
        Ok(())
    }

    /// Union of several clouds of the same dimension.
    pub fn union<'a, I>(sets: I) -> Result<PointSet>
    where
        I: IntoIterator<Item = &'a PointSet>,
    {
        let mut iter = sets.into_iter();
        let mut out = iter.next().ok_or(Error::EmptyPointSet)?.clone();
        for s in iter {
            out.extend(s)?;
        }
        Ok(out)
    }

    /// Writes one row per point, no header, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<PointSet> {
        let mut dim = None;
        let mut coords = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::Parse(format!(
                        "line {}: expected {d} columns, found {}",
                        lineno + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            coords.extend(row);
        }
        PointSet::new(dim.ok_or(Error::EmptyPointSet)?, coords)
    }

    /// Componentwise bounding box `(lo, hi)`.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.iter() {
            for d in 0..self.dim {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }
}

fn same_dim(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

/// Euclidean distance on raw coordinate slices of equal length.
#[inline]
pub(crate) fn euclid(p: &[f64], q: &[f64]) -> f64 {
    if p.len() == 1 {
        return (p[0] - q[0]).abs();
    }
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn dist(p: &Point, q: &Point) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    Ok(euclid(p.coords(), q.coords()))
}

/// Directed distance `sup_{x in a} inf_{y in b} |x - y|`.
pub fn directed_hausdorff(a: &PointSet, b: &PointSet) -> Result<f64> {
    same_dim(a, b)?;
    Ok(directed(a, b))
}

/// Hausdorff-Pompeiu distance between two clouds.
pub fn hausdorff(a: &PointSet, b: &PointSet) -> Result<f64> {
    same_dim(a, b)?;
    Ok(directed(a, b).max(directed(b, a)))
}

fn directed(a: &PointSet, b: &PointSet) -> f64 {
    match a.dim {
        1 => directed_sorted_1d(a, b),
        2 | 3 if a.len().saturating_mul(b.len()) > 1 << 20 => {
            let grid = Grid::for_queries(b);
            max_over(a, |p| grid.nearest(p))
        }
        _ => max_over(a, |p| {
            b.iter().map(|q| euclid(p, q)).fold(f64::INFINITY, f64::min)
        }),
    }
}

fn max_over<F>(a: &PointSet, f: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    if a.len() < PAR_THRESHOLD {
        a.iter().map(f).fold(0.0, f64::max)
    } else {
        a.coords
            .par_chunks_exact(a.dim)
            .map(f)
            .reduce(|| 0.0, f64::max)
    }
}

fn directed_sorted_1d(a: &PointSet, b: &PointSet) -> f64 {
    let mut sorted = b.coords.clone();
    sorted.sort_by(f64::total_cmp);
    max_over(a, |p| {
        let x = p[0];
        let idx = sorted.partition_point(|&v| v < x);
        let mut best = f64::INFINITY;
        if idx < sorted.len() {
            best = best.min((x - sorted[idx]).abs());
        }
        if idx > 0 {
            best = best.min((x - sorted[idx - 1]).abs());
        }
        best
    })
}

/// Sup of pairwise distances `sup_{x in a, y in b} |x - y|`; dominates
/// [`hausdorff`].
pub fn delta_sup(a: &PointSet, b: &PointSet) -> Result<f64> {
    same_dim(a, b)?;
    Ok(delta_unchecked(a, b))
}

pub(crate) fn delta_unchecked(a: &PointSet, b: &PointSet) -> f64 {
    if a.dim == 1 {
        let (alo, ahi) = min_max_1d(a);
        let (blo, bhi) = min_max_1d(b);
        return (ahi - blo).abs().max((bhi - alo).abs());
    }
    max_over(a, |p| b.iter().map(|q| euclid(p, q)).fold(0.0, f64::max))
}

fn min_max_1d(a: &PointSet) -> (f64, f64) {
    a.coords
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

pub fn diameter(a: &PointSet) -> f64 {
    delta_unchecked(a, a)
}

/// Greedy first-fit `eps`-net in input order.
///
/// A point is kept unless an already kept point lies within `eps`, so the
/// result `s` satisfies `hausdorff(a, s) <= eps`. With `eps == 0` only exact
/// duplicates are dropped. Negative `eps` behaves like zero.
pub fn decimate(a: &PointSet, eps: f64) -> PointSet {
    let eps = if eps > 0.0 { eps } else { 0.0 };
    if eps == 0.0 {
        return dedup_exact(a);
    }
    let kept = match a.dim {
        1 => decimate_1d(a, eps),
        2 | 3 if a.len() > 256 => decimate_grid(a, eps),
        _ => decimate_brute(a, eps),
    };
    PointSet::from_raw(a.dim, kept)
}

fn dedup_exact(a: &PointSet) -> PointSet {
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(a.len());
    let mut kept = Vec::with_capacity(a.coords.len());
    for p in a.iter() {
        // +0.0 folds -0.0 onto 0.0 so that they compare equal.
        let key: Vec<u64> = p.iter().map(|x| (x + 0.0).to_bits()).collect();
        if seen.insert(key) {
            kept.extend_from_slice(p);
        }
    }
    PointSet::from_raw(a.dim, kept)
}

/// Order-preserving integer key for finite floats.
fn ord_key(x: f64) -> i64 {
    let b = (x + 0.0).to_bits() as i64;
    if b < 0 {
        b ^ i64::MAX
    } else {
        b
    }
}

fn decimate_1d(a: &PointSet, eps: f64) -> Vec<f64> {
    let mut kept_keys: BTreeSet<i64> = BTreeSet::new();
    let mut kept = Vec::new();
    for &x in &a.coords {
        let k = ord_key(x);
        let below = kept_keys
            .range(..=k)
            .next_back()
            .map(|&kb| from_ord_key(kb));
        let above = kept_keys.range(k..).next().map(|&ka| from_ord_key(ka));
        let covered = below.is_some_and(|y| (x - y).abs() <= eps)
            || above.is_some_and(|y| (x - y).abs() <= eps);
        if !covered {
            kept_keys.insert(k);
            kept.push(x);
        }
    }
    kept
}

fn from_ord_key(k: i64) -> f64 {
    let b = if k < 0 { k ^ i64::MAX } else { k };
    f64::from_bits(b as u64)
}

fn decimate_brute(a: &PointSet, eps: f64) -> Vec<f64> {
    let dim = a.dim;
    let mut kept: Vec<f64> = Vec::new();
    for p in a.iter() {
        let covered = kept.chunks_exact(dim).any(|q| euclid(p, q) <= eps);
        if !covered {
            kept.extend_from_slice(p);
        }
    }
    kept
}

type CellKey = [i64; 3];

fn cell_key(p: &[f64], origin: &[f64], cell: f64) -> CellKey {
    let mut k = [0i64; 3];
    for (d, slot) in k.iter_mut().enumerate().take(p.len()) {
        *slot = ((p[d] - origin[d]) / cell).floor() as i64;
    }
    k
}

fn decimate_grid(a: &PointSet, eps: f64) -> Vec<f64> {
    let dim = a.dim;
    let (origin, _) = a.bounds();
    // Slightly larger than eps so that points within eps never sit more
    // than one cell apart, whatever the rounding of the cell index.
    let cell = eps * (1.0 + 1e-9);
    let mut cells: HashMap<CellKey, Vec<usize>> = HashMap::new();
    let mut kept: Vec<f64> = Vec::new();
    let offsets = neighbour_offsets(dim);
    for p in a.iter() {
        let key = cell_key(p, &origin, cell);
        let covered = offsets.iter().any(|off| {
            let mut nk = key;
            for d in 0..dim {
                nk[d] = nk[d].saturating_add(off[d]);
            }
            cells.get(&nk).is_some_and(|ids| {
                ids.iter()
                    .any(|&i| euclid(p, &kept[i * dim..(i + 1) * dim]) <= eps)
            })
        });
        if !covered {
            cells.entry(key).or_default().push(kept.len() / dim);
            kept.extend_from_slice(p);
        }
    }
    kept
}

fn neighbour_offsets(dim: usize) -> Vec<CellKey> {
    let mut out = vec![[0i64; 3]];
    for d in 0..dim {
        let mut next = Vec::with_capacity(out.len() * 3);
        for o in &out {
            for delta in [-1, 0, 1] {
                let mut n = *o;
                n[d] = delta;
                next.push(n);
            }
        }
        out = next;
    }
    out
}

/// Uniform hashed grid over a 2-D or 3-D cloud answering exact
/// nearest-neighbour distance queries by ring search.
struct Grid<'a> {
    set: &'a PointSet,
    origin: Vec<f64>,
    cell: f64,
    lo: CellKey,
    hi: CellKey,
    cells: HashMap<CellKey, Vec<u32>>,
}

impl<'a> Grid<'a> {
    fn for_queries(set: &'a PointSet) -> Self {
        let dim = set.dim;
        let (lo, hi) = set.bounds();
        let extent = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);
        let per_side = ((set.len() as f64 / 2.0).powf(1.0 / dim as f64))
            .ceil()
            .max(1.0);
        let cell = if extent > 0.0 { extent / per_side } else { 1.0 };
        let mut cells: HashMap<CellKey, Vec<u32>> = HashMap::new();
        let mut klo = [0i64; 3];
        let mut khi = [0i64; 3];
        for (idx, p) in set.iter().enumerate() {
            let key = cell_key(p, &lo, cell);
            if idx == 0 {
                klo = key;
                khi = key;
            }
            for d in 0..dim {
                klo[d] = klo[d].min(key[d]);
                khi[d] = khi[d].max(key[d]);
            }
            cells.entry(key).or_default().push(idx as u32);
        }
        Grid {
            set,
            origin: lo,
            cell,
            lo: klo,
            hi: khi,
            cells,
        }
    }

    fn nearest(&self, q: &[f64]) -> f64 {
        let dim = self.set.dim;
        let c = cell_key(q, &self.origin, self.cell);
        let mut r0 = 0i64;
        let mut rmax = 0i64;
        for ((&cd, &lo), &hi) in c.iter().zip(&self.lo).zip(&self.hi).take(dim) {
            r0 = r0.max(lo - cd).max(cd - hi);
            rmax = rmax.max(cd - lo).max(hi - cd);
        }
        let mut best = f64::INFINITY;
        let mut key = [0i64; 3];
        for r in r0..=rmax {
            self.ring(&c, r, 0, false, &mut key, &mut |ids| {
                for &i in ids {
                    best = best.min(euclid(q, self.set.point(i as usize)));
                }
            });
            // Unvisited points lie at least r cells away along some axis.
            if best <= (r as f64 - 0.01) * self.cell {
                break;
            }
        }
        best
    }

    fn ring<F: FnMut(&[u32])>(
        &self,
        c: &CellKey,
        r: i64,
        d: usize,
        on_shell: bool,
        key: &mut CellKey,
        f: &mut F,
    ) {
        let dim = self.set.dim;
        if d == dim {
            if on_shell {
                if let Some(ids) = self.cells.get(key) {
                    f(ids);
                }
            }
            return;
        }
        let lo = (c[d] - r).max(self.lo[d]);
        let hi = (c[d] + r).min(self.hi[d]);
        if d == dim - 1 && !on_shell {
            let candidates = if r == 0 {
                vec![c[d]]
            } else {
                vec![c[d] - r, c[d] + r]
            };
            for x in candidates {
                if x >= lo && x <= hi {
                    key[d] = x;
                    self.ring(c, r, d + 1, true, key, f);
                }
            }
        } else {
            for x in lo..=hi {
                key[d] = x;
                self.ring(c, r, d + 1, on_shell || (x - c[d]).abs() == r, key, f);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s1(v: &[f64]) -> PointSet {
        PointSet::from_scalars(v).unwrap()
    }

    fn brute_h(a: &PointSet, b: &PointSet) -> f64 {
        let d = |x: &PointSet, y: &PointSet| {
            x.iter()
                .map(|p| y.iter().map(|q| euclid(p, q)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        d(a, b).max(d(b, a))
    }

    fn random_cloud(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> PointSet {
        let coords = (0..dim * n).map(|_| rng.gen::<f64>()).collect();
        PointSet::new(dim, coords).unwrap()
    }

    #[test]
    fn dist_examples() {
        let p = Point::new(vec![0.0, 0.0]).unwrap();
        let q = Point::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(dist(&p, &q).unwrap(), 5.0);
        assert_eq!(dist(&p, &p).unwrap(), 0.0);
        assert_eq!(dist(&Point::from(0.25), &Point::from(0.75)).unwrap(), 0.5);
        assert!(dist(&p, &Point::from(1.0)).is_err());
    }

    #[test]
    fn rejects_bad_points() {
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(Point::new(vec![]).is_err());
        assert!(Point::new(vec![0.0; 9]).is_err());
        assert!(PointSet::new(2, vec![]).is_err());
        assert!(PointSet::new(2, vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        assert!((hausdorff(&s1(&[0.0, 1.0]), &s1(&[0.0, 0.4, 1.0])).unwrap() - 0.4).abs() < 1e-15);
        let a = s1(&[0.2, 0.7]);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let p = PointSet::singleton(&[0.0, 0.0]).unwrap();
        let q = PointSet::singleton(&[3.0, 4.0]).unwrap();
        assert_eq!(hausdorff(&p, &q).unwrap(), 5.0);
        assert!(hausdorff(&p, &a).is_err());
    }

    #[test]
    fn delta_and_diameter_examples() {
        let a = s1(&[0.0, 1.0]);
        assert_eq!(delta_sup(&a, &a).unwrap(), 1.0);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert_eq!(delta_sup(&s1(&[0.0]), &s1(&[0.5, 1.0])).unwrap(), 1.0);
        assert_eq!(delta_sup(&s1(&[0.3]), &s1(&[0.8])).unwrap(), 0.5);
        assert_eq!(diameter(&a), 1.0);
        assert_eq!(diameter(&s1(&[0.4])), 0.0);
        let square = PointSet::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(diameter(&square), 2f64.sqrt());
    }

    #[test]
    fn decimate_examples() {
        let grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        let a = s1(&grid);
        let s = decimate(&a, 0.01);
        assert!(hausdorff(&a, &s).unwrap() <= 0.01);
        assert!(s.len() <= 101, "{}", s.len());

        let dup = s1(&[0.5, 0.25, 0.5, -0.0, 0.0]);
        let d = decimate(&dup, 0.0);
        assert_eq!(d.as_slice(), &[0.5, 0.25, -0.0]);
        assert_eq!(hausdorff(&dup, &d).unwrap(), 0.0);

        let single = PointSet::singleton(&[0.3, 0.4]).unwrap();
        assert_eq!(decimate(&single, 10.0), single);
    }

    #[test]
    fn accelerated_paths_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in 1..=3 {
            let a = random_cloud(&mut rng, dim, 1500);
            let b = random_cloud(&mut rng, dim, 900);
            assert_eq!(hausdorff(&a, &b).unwrap(), brute_h(&a, &b), "dim {dim}");
            let eps = 0.05;
            let fast = decimate(&a, eps);
            let slow = PointSet::from_raw(dim, decimate_brute(&a, eps));
            assert_eq!(fast, slow, "dim {dim}");
        }
    }

    #[test]
    fn grid_handles_far_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = random_cloud(&mut rng, 2, 1200);
        let far: Vec<f64> = (0..2 * 1000)
            .map(|_| 5.0 + 3.0 * rng.gen::<f64>())
            .collect();
        let a = PointSet::new(2, far).unwrap();
        assert_eq!(hausdorff(&a, &b).unwrap(), brute_h(&a, &b));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let a = PointSet::new(2, vec![1.0 / 3.0, -2.5e-9, 0.1, 7.0]).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let back = PointSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(a, back);
        assert!(PointSet::read_csv("1,2\n3\n".as_bytes()).is_err());
    }
}
