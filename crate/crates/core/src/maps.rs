//! Closed-form self-maps of a domain box: affine maps, 1-D polynomials and
//! their compositions, plus Lipschitz bounds and Picard iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{euclid, Point, PointSet, MAX_DIM};

/// Samples used for polynomial derivative sups and self-map checks.
pub const DENSE_SAMPLES: usize = 10_001;

/// Axis-aligned box standing in for the ambient space.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::InvalidDomain(format!(
                "lo has {} coordinates, hi has {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.is_empty() || lo.len() > MAX_DIM {
            return Err(Error::InvalidDomain(format!(
                "dimension {} outside 1..={MAX_DIM}",
                lo.len()
            )));
        }
        for (d, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !l.is_finite() || !h.is_finite() || l >= h {
                return Err(Error::InvalidDomain(format!(
                    "axis {d}: need finite lo < hi, got [{l}, {h}]"
                )));
            }
        }
        Ok(DomainBox { lo, hi })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        DomainBox::new(vec![0.0; dim], vec![1.0; dim])
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

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        euclid(&self.lo, &self.hi)
    }

    /// The `2^dim` vertices of the box.
    pub fn corners(&self) -> PointSet {
        let dim = self.dim();
        let mut coords = Vec::with_capacity(dim << dim);
        for mask in 0..(1usize << dim) {
            for d in 0..dim {
                coords.push(if mask >> d & 1 == 1 {
                    self.hi[d]
                } else {
                    self.lo[d]
                });
            }
        }
        PointSet::from_raw(dim, coords)
    }

    /// Membership with an absolute slack scaled to the box size.
    pub fn contains(&self, p: &[f64]) -> bool {
        let slack = 1e-12 * (1.0 + self.diameter());
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (l, h))| *x >= l - slack && *x <= h + slack)
    }

    pub fn contains_set(&self, set: &PointSet) -> bool {
        set.iter().all(|p| self.contains(p))
    }

    /// Uniform random point drawn from the box.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| l + (h - l) * rng.gen::<f64>())
            .collect()
    }

    /// Points used to check that a map sends the box into itself: the
    /// corners, plus a dense grid (1-D) or seeded random samples.
    fn probe_points(&self) -> PointSet {
        let mut coords = self.corners().as_slice().to_vec();
        if self.dim() == 1 {
            let (l, h) = (self.lo[0], self.hi[0]);
            for k in 0..DENSE_SAMPLES {
                coords.push(l + (h - l) * k as f64 / (DENSE_SAMPLES - 1) as f64);
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            for _ in 0..DENSE_SAMPLES {
                coords.extend(self.sample(&mut rng));
            }
        }
        PointSet::from_raw(self.dim(), coords)
    }

    /// Verifies numerically that `f` maps the box into itself.
    pub fn check_self_map(&self, f: &MapDescriptor, index: usize) -> Result<()> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: f.dim(),
            });
        }
        // Affine images of a box are convex hulls of the corner images.
        let probes = if f.is_affine() {
            self.corners()
        } else {
            self.probe_points()
        };
        let mut out = vec![0.0; self.dim()];
        for p in probes.iter() {
            f.apply(p, &mut out);
            if !self.contains(&out) {
                return Err(Error::MapLeavesBox { index, point: out });
            }
        }
        Ok(())
    }
}

/// `x -> matrix * x + offset`, matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    dim: usize,
    matrix: Vec<f64>,
    offset: Vec<f64>,
}

impl AffineMap {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    fn apply(&self, p: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for (r, slot) in out.iter_mut().enumerate().take(n) {
            let row = &self.matrix[r * n..(r + 1) * n];
            *slot = row.iter().zip(p).map(|(a, x)| a * x).sum::<f64>() + self.offset[r];
        }
    }
}

/// Real polynomial in one variable, ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coefficients: Vec<f64>,
}

impl Polynomial {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        let coefficients = if self.coefficients.len() <= 1 {
            vec![0.0]
        } else {
            self.coefficients
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect()
        };
        Polynomial { coefficients }
    }
}

/// Description of one map of the system.
#[derive(Clone, Debug, PartialEq)]
pub enum MapDescriptor {
    Affine(AffineMap),
    Poly1D(Polynomial),
    /// `parts[0] ∘ parts[1] ∘ … ∘ parts[n-1]`: the last part is applied first.
    Composite(Vec<MapDescriptor>),
}

impl MapDescriptor {
    pub fn affine(matrix: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        let dim = offset.len();
        if dim == 0 || dim > MAX_DIM || matrix.len() != dim * dim {
            return Err(Error::InvalidMap(format!(
                "affine map needs a {dim}x{dim} matrix, got {} entries",
                matrix.len()
            )));
        }
        if matrix.iter().chain(&offset).any(|x| !x.is_finite()) {
            return Err(Error::InvalidMap("non-finite affine entry".into()));
        }
        Ok(MapDescriptor::Affine(AffineMap {
            dim,
            matrix,
            offset,
        }))
    }

    /// 1-D affine map `x -> scale * x + shift`.
    pub fn linear_1d(scale: f64, shift: f64) -> Result<Self> {
        MapDescriptor::affine(vec![scale], vec![shift])
    }

    /// `x -> ratio * x + offset` in any dimension.
    pub fn similarity(ratio: f64, offset: Vec<f64>) -> Result<Self> {
        let dim = offset.len();
        let mut matrix = vec![0.0; dim * dim];
        for d in 0..dim {
            matrix[d * dim + d] = ratio;
        }
        MapDescriptor::affine(matrix, offset)
    }

    pub fn poly1d(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidMap("polynomial needs coefficients".into()));
        }
        if coefficients.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMap(
                "non-finite polynomial coefficient".into(),
            ));
        }
        Ok(MapDescriptor::Poly1D(Polynomial { coefficients }))
    }

    pub fn composite(parts: Vec<MapDescriptor>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidMap("empty composite".into()))?;
        let dim = first.dim();
        if let Some(bad) = parts.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(MapDescriptor::Composite(parts))
    }

    pub fn dim(&self) -> usize {
        match self {
            MapDescriptor::Affine(a) => a.dim,
            MapDescriptor::Poly1D(_) => 1,
            MapDescriptor::Composite(parts) => parts[0].dim(),
        }
    }

    pub fn is_affine(&self) -> bool {
        match self {
            MapDescriptor::Affine(_) => true,
            MapDescriptor::Poly1D(_) => false,
            MapDescriptor::Composite(parts) => parts.iter().all(MapDescriptor::is_affine),
        }
    }

    /// Writes `f(p)` into `out`; both slices have length `self.dim()`.
    pub(crate) fn apply(&self, p: &[f64], out: &mut [f64]) {
        match self {
            MapDescriptor::Affine(a) => a.apply(p, out),
            MapDescriptor::Poly1D(poly) => out[0] = poly.eval(p[0]),
            MapDescriptor::Composite(parts) => {
                let mut cur = p.to_vec();
                let mut next = vec![0.0; p.len()];
                for part in parts.iter().rev() {
                    part.apply(&cur, &mut next);
                    std::mem::swap(&mut cur, &mut next);
                }
                out.copy_from_slice(&cur);
            }
        }
    }

    pub fn eval(&self, p: &Point) -> Result<Point> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: p.dim(),
            });
        }
        let mut out = vec![0.0; p.dim()];
        self.apply(p.coords(), &mut out);
        Point::new(out)
    }

    /// Pointwise image of a cloud, preserving order.
    pub fn image(&self, set: &PointSet) -> Result<PointSet> {
        if set.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: set.dim(),
            });
        }
        Ok(self.image_unchecked(set))
    }

    pub(crate) fn image_unchecked(&self, set: &PointSet) -> PointSet {
        let dim = set.dim();
        let mut coords = vec![0.0; set.as_slice().len()];
        for (p, out) in set.iter().zip(coords.chunks_exact_mut(dim)) {
            self.apply(p, out);
        }
        PointSet::from_raw(dim, coords)
    }
}

/// Builds `f_{w1} ∘ f_{w2} ∘ … ∘ f_{wn}` for a word of 0-based symbols.
pub fn compose_word(maps: &[MapDescriptor], word: &[usize]) -> Result<MapDescriptor> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    if let Some(&bad) = word.iter().find(|&&s| s >= maps.len()) {
        return Err(Error::UnknownSymbol {
            symbol: bad,
            count: maps.len(),
        });
    }
    if word.len() == 1 {
        return Ok(maps[word[0]].clone());
    }
    Ok(MapDescriptor::Composite(
        word.iter().map(|&s| maps[s].clone()).collect(),
    ))
}

/// Lipschitz constant of a map on a box; `exact` is false when any part was
/// estimated by sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzBound {
    pub value: f64,
    pub exact: bool,
}

pub fn lipschitz_bound(f: &MapDescriptor, domain: &DomainBox) -> LipschitzBound {
    match f {
        MapDescriptor::Affine(a) => LipschitzBound {
            value: spectral_norm(&a.matrix, a.dim),
            exact: true,
        },
        MapDescriptor::Poly1D(p) => {
            let dp = p.derivative();
            let (l, h) = (domain.lo[0], domain.hi[0]);
            let value = (0..DENSE_SAMPLES)
                .map(|k| l + (h - l) * k as f64 / (DENSE_SAMPLES - 1) as f64)
                .map(|x| dp.eval(x).abs())
                .fold(0.0, f64::max);
            LipschitzBound {
                value,
                exact: false,
            }
        }
        MapDescriptor::Composite(parts) => parts.iter().fold(
            LipschitzBound {
                value: 1.0,
                exact: true,
            },
            |acc, part| {
                let b = lipschitz_bound(part, domain);
                LipschitzBound {
                    value: acc.value * b.value,
                    exact: acc.exact && b.exact,
                }
            },
        ),
    }
}

/// Largest singular value of a row-major `dim x dim` matrix.
///
/// Closed form up to dimension 2, power iteration on the Gram matrix above.
pub fn spectral_norm(matrix: &[f64], dim: usize) -> f64 {
    match dim {
        1 => matrix[0].abs(),
        2 => {
            let (a, b, c, d) = (matrix[0], matrix[1], matrix[2], matrix[3]);
            let s = a * a + b * b + c * c + d * d;
            let det = a * d - b * c;
            let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
            (0.5 * (s + disc)).sqrt()
        }
        _ => power_iteration_norm(matrix, dim),
    }
}

fn power_iteration_norm(matrix: &[f64], n: usize) -> f64 {
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            gram[i * n + j] = (0..n).map(|k| matrix[k * n + i] * matrix[k * n + j]).sum();
        }
    }
    let start = (0..n)
        .max_by(|&i, &j| gram[i * n + i].total_cmp(&gram[j * n + j]))
        .unwrap_or(0);
    if gram[start * n + start] == 0.0 {
        return 0.0;
    }
    // Column of the Gram matrix with the largest diagonal: lies in its range.
    let mut v: Vec<f64> = (0..n).map(|i| gram[i * n + start]).collect();
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let w: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| gram[i * n + j] * v[j]).sum())
            .collect();
        let next: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        v = w;
        if (next - lambda).abs() <= 1e-12 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt()
}

/// Outcome of [`picard_fixed_point`].
#[derive(Clone, Debug, PartialEq)]
pub struct PicardResult {
    pub point: Point,
    pub iterations: usize,
    pub residual: f64,
}

/// Iterates `x_{n+1} = f(x_n)` until `|x_n - f(x_n)| <= tol`.
pub fn picard_fixed_point(
    f: &MapDescriptor,
    x0: &Point,
    tol: f64,
    max_iter: usize,
) -> Result<PicardResult> {
    if x0.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: x0.dim(),
        });
    }
    let mut x = x0.coords().to_vec();
    let mut fx = vec![0.0; x.len()];
    let mut residual = f64::INFINITY;
    for iterations in 0..=max_iter {
        f.apply(&x, &mut fx);
        residual = euclid(&x, &fx);
        if residual <= tol {
            return Ok(PicardResult {
                point: Point::new(x)?,
                iterations,
                residual,
            });
        }
        std::mem::swap(&mut x, &mut fx);
    }
    Err(Error::PicardNonConvergence {
        iterations: max_iter,
        residual,
        last: x,
    })
}
