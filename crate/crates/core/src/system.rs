//! Iterated function systems of convex contractions: the coefficient table
//! with its two conditions, a sampling falsifier for the pairwise inequality,
//! the Hutchinson set map, the attractor engine with its a-priori rate
//! certificate, and exact word-enumeration diagnostics that replay the
//! convergence argument on finite clouds.
//!
//! For maps `f_i`, `f_j` and points `x`, `y` the pairwise inequality reads
//!
//! ```text
//! |f_i(f_j x) - f_i(f_j y)| <= a_ij |x - y| + b_ij |f_i x - f_i y| + c_ij |f_j x - f_j y|
//! ```
//!
//! and the table is admissible when `d = max_ij (a_ij + b_ij + c_ij) < 1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{decimate, delta_unchecked, euclid, hausdorff, PointSet};
use crate::maps::{lipschitz_bound, DomainBox, MapDescriptor};

/// Violations must exceed the right-hand side by more than this.
pub const BETA_SLACK: f64 = 1e-12;

/// Largest number of words of one length enumerated exhaustively.
pub const WORD_BUDGET: u128 = 1 << 20;

/// The three constants attached to an ordered pair of maps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Coefficients {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Coefficients { a, b, c }
    }

    pub fn sum(&self) -> f64 {
        self.a + self.b + self.c
    }
}

/// Square table of [`Coefficients`]; absent entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    size: usize,
    entries: Vec<Coefficients>,
}

impl CoefficientTable {
    pub fn zeros(size: usize) -> Self {
        CoefficientTable {
            size,
            entries: vec![Coefficients::default(); size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn set(&mut self, i: usize, j: usize, coeffs: Coefficients) -> Result<()> {
        if i >= self.size || j >= self.size {
            return Err(Error::InvalidTable(format!(
                "entry ({}, {}) outside a {}x{} table",
                i + 1,
                j + 1,
                self.size,
                self.size
            )));
        }
        for v in [coeffs.a, coeffs.b, coeffs.c] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidTable(format!(
                    "entry ({}, {}) has invalid value {v}",
                    i + 1,
                    j + 1
                )));
            }
        }
        self.entries[i * self.size + j] = coeffs;
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> Coefficients {
        self.entries[i * self.size + j]
    }

    pub fn d_ij(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).sum()
    }

    /// `max_ij d_ij` together with the maximizing pair.
    pub fn max_entry(&self) -> (f64, usize, usize) {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for i in 0..self.size {
            for j in 0..self.size {
                let v = self.d_ij(i, j);
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        best
    }
}

/// Checks that `d < 1` and returns it.
pub fn validate_alpha(table: &CoefficientTable) -> Result<f64> {
    let (d, i, j) = table.max_entry();
    if d.is_nan() || d >= 1.0 {
        return Err(Error::AlphaViolation { i, j, value: d });
    }
    Ok(d)
}

/// Sound table for contractive affine maps: `c_ij = Lip(f_i)`, since
/// `|f_i f_j x - f_i f_j y| <= Lip(f_i) |f_j x - f_j y|`.
pub fn synthesize_affine_coeffs(
    maps: &[MapDescriptor],
    domain: &DomainBox,
) -> Result<CoefficientTable> {
    let mut lips = Vec::with_capacity(maps.len());
    for (index, f) in maps.iter().enumerate() {
        if !f.is_affine() {
            return Err(Error::NotAffine { index });
        }
        let lip = lipschitz_bound(f, domain).value;
        if lip >= 1.0 {
            return Err(Error::NotContractive { index, value: lip });
        }
        lips.push(lip);
    }
    let mut table = CoefficientTable::zeros(maps.len());
    for (i, &lip) in lips.iter().enumerate() {
        for j in 0..maps.len() {
            table.set(i, j, Coefficients::new(0.0, 0.0, lip))?;
        }
    }
    Ok(table)
}

/// Maps, coefficient table and ambient box.
#[derive(Clone, Debug)]
pub struct IFSSystem {
    maps: Vec<MapDescriptor>,
    table: CoefficientTable,
    domain: DomainBox,
}

impl IFSSystem {
    /// Validates shapes and that every map sends the box into itself.
    /// Condition alpha is checked separately by [`validate_alpha`].
    pub fn new(
        maps: Vec<MapDescriptor>,
        table: CoefficientTable,
        domain: DomainBox,
    ) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidMap("system needs at least one map".into()));
        }
        if table.size() != maps.len() {
            return Err(Error::InvalidTable(format!(
                "table is {0}x{0} but the system has {1} maps",
                table.size(),
                maps.len()
            )));
        }
        for (index, f) in maps.iter().enumerate() {
            domain.check_self_map(f, index)?;
        }
        Ok(IFSSystem {
            maps,
            table,
            domain,
        })
    }

    /// Affine system with a synthesized table.
    pub fn affine(maps: Vec<MapDescriptor>, domain: DomainBox) -> Result<Self> {
        let table = synthesize_affine_coeffs(&maps, &domain)?;
        IFSSystem::new(maps, table, domain)
    }

    pub fn maps(&self) -> &[MapDescriptor] {
        &self.maps
    }

    pub fn map(&self, i: usize) -> &MapDescriptor {
        &self.maps[i]
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Number of maps.
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// The constant `d` of the table, or an error when it is not below one.
    pub fn contraction_constant(&self) -> Result<f64> {
        validate_alpha(&self.table)
    }

    pub fn with_table(&self, table: CoefficientTable) -> Result<Self> {
        IFSSystem::new(self.maps.clone(), table, self.domain.clone())
    }

    pub(crate) fn check_cloud(&self, set: &PointSet) -> Result<()> {
        if set.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: set.dim(),
            });
        }
        if !self.domain.contains_set(set) {
            return Err(Error::InvalidPoint("cloud leaves the domain box".into()));
        }
        Ok(())
    }
}

/// A sampled pair violating the pairwise inequality for maps `(i, j)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BetaCounterexample {
    /// 0-based map indices.
    pub i: usize,
    pub j: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Both sides of the pairwise inequality for `(i, j)` at `(x, y)`.
pub fn beta_sides(system: &IFSSystem, i: usize, j: usize, x: &[f64], y: &[f64]) -> (f64, f64) {
    let dim = system.dim();
    let (fi, fj) = (system.map(i), system.map(j));
    let mut fjx = vec![0.0; dim];
    let mut fjy = vec![0.0; dim];
    let mut fix = vec![0.0; dim];
    let mut fiy = vec![0.0; dim];
    let mut fijx = vec![0.0; dim];
    let mut fijy = vec![0.0; dim];
    fj.apply(x, &mut fjx);
    fj.apply(y, &mut fjy);
    fi.apply(x, &mut fix);
    fi.apply(y, &mut fiy);
    fi.apply(&fjx, &mut fijx);
    fi.apply(&fjy, &mut fijy);
    let k = system.table().get(i, j);
    let lhs = euclid(&fijx, &fijy);
    let rhs = k.a * euclid(x, y) + k.b * euclid(&fix, &fiy) + k.c * euclid(&fjx, &fjy);
    (lhs, rhs)
}

/// Searches for violations of the pairwise inequality with `samples` seeded
/// uniform pairs per ordered pair of maps and returns the worst one.
///
/// Finding nothing is evidence, not proof.
pub fn falsify_beta(system: &IFSSystem, samples: usize, seed: u64) -> Option<BetaCounterexample> {
    let n = system.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let worst_per_pair: Vec<Option<BetaCounterexample>> = pairs
        .par_iter()
        .enumerate()
        .map(|(stream, &(i, j))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream as u64);
            let mut worst: Option<BetaCounterexample> = None;
            for _ in 0..samples {
                let x = system.domain().sample(&mut rng);
                let y = system.domain().sample(&mut rng);
                let (lhs, rhs) = beta_sides(system, i, j, &x, &y);
                if lhs > rhs + BETA_SLACK
                    && worst.as_ref().is_none_or(|w| lhs - rhs > w.lhs - w.rhs)
                {
                    worst = Some(BetaCounterexample {
                        i,
                        j,
                        x,
                        y,
                        lhs,
                        rhs,
                    });
                }
            }
            worst
        })
        .collect();
    worst_per_pair
        .into_iter()
        .flatten()
        .fold(None, |best, c| match best {
            Some(b) if b.lhs - b.rhs >= c.lhs - c.rhs => Some(b),
            _ => Some(c),
        })
}

/// `F(B) = f_1(B) ∪ … ∪ f_m(B)`, images concatenated in map order.
pub fn hutchinson(system: &IFSSystem, b: &PointSet) -> Result<PointSet> {
    if b.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: b.dim(),
        });
    }
    Ok(hutchinson_unchecked(system, b))
}

fn hutchinson_unchecked(system: &IFSSystem, b: &PointSet) -> PointSet {
    let images: Vec<PointSet> = if b.len() >= 4096 {
        system
            .maps()
            .par_iter()
            .map(|f| f.image_unchecked(b))
            .collect()
    } else {
        system.maps().iter().map(|f| f.image_unchecked(b)).collect()
    };
    let mut coords = Vec::with_capacity(b.as_slice().len() * system.len());
    for img in &images {
        coords.extend_from_slice(img.as_slice());
    }
    PointSet::from_raw(b.dim(), coords)
}

/// The iterates `B_0, …, B_k` of `B -> decimate(F(B), eps)`, stopping early
/// before any iterate would exceed `max_points`.
pub fn hutchinson_iterates(
    system: &IFSSystem,
    b0: &PointSet,
    n: usize,
    eps_decimate: f64,
    max_points: usize,
) -> Result<Vec<PointSet>> {
    system.check_cloud(b0)?;
    let mut out = vec![decimate(b0, 0.0)];
    for _ in 0..n {
        let last = out.last().expect("non-empty");
        if last.len().saturating_mul(system.len()) > max_points {
            break;
        }
        out.push(decimate(&hutchinson_unchecked(system, last), eps_decimate));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttractorOptions {
    pub tol: f64,
    pub eps_decimate: f64,
    pub max_iter: usize,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        AttractorOptions {
            tol: 1e-6,
            eps_decimate: 1e-6,
            max_iter: 200,
        }
    }
}

/// Output of the attractor engine.
#[derive(Clone, Debug, PartialEq)]
pub struct AttractorResult {
    pub cloud: PointSet,
    pub iterations: usize,
    /// Hausdorff distance between the last two iterates.
    pub step_gap: f64,
    /// A-priori certificate evaluated at `iterations`.
    pub rate_bound: f64,
    /// Sum of the decimation radii applied.
    pub decimation_budget: f64,
}

/// Iterates `B_{n+1} = decimate(F(B_n), eps)` until `h(B_n, B_{n+1}) <= tol`.
pub fn attractor(
    system: &IFSSystem,
    b0: &PointSet,
    opts: &AttractorOptions,
) -> Result<AttractorResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidPoint(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    system.check_cloud(b0)?;
    let cert = RateCertificate::new(system, b0)?;
    let eps = opts.eps_decimate.max(0.0);
    let mut current = b0.clone();
    let mut step_gap = f64::INFINITY;
    for iterations in 1..=opts.max_iter {
        let next = decimate(&hutchinson_unchecked(system, &current), eps);
        step_gap = hausdorff(&current, &next)?;
        current = next;
        if step_gap <= opts.tol {
            return Ok(AttractorResult {
                cloud: current,
                iterations,
                step_gap,
                rate_bound: cert.bound(iterations),
                decimation_budget: eps * iterations as f64,
            });
        }
    }
    Err(Error::AttractorNonConvergence(Box::new(AttractorResult {
        cloud: current,
        iterations: opts.max_iter,
        step_gap,
        rate_bound: cert.bound(opts.max_iter),
        decimation_budget: eps * opts.max_iter as f64,
    })))
}

/// `h(F^n(B), A) <= d^floor(n/2) / (1 - d) * (x_0 + x_1)` with
/// `x_0 = δ(B, F(B))` and `x_1 = max_i δ(f_i(B), f_i(F(B)))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateCertificate {
    pub d: f64,
    pub x0: f64,
    pub x1: f64,
}

impl RateCertificate {
    pub fn new(system: &IFSSystem, b0: &PointSet) -> Result<Self> {
        let d = system.contraction_constant()?;
        if b0.dim() != system.dim() {
            return Err(Error::DimensionMismatch {
                expected: system.dim(),
                found: b0.dim(),
            });
        }
        let fb = hutchinson_unchecked(system, b0);
        let x0 = delta_unchecked(b0, &fb);
        let x1 = system
            .maps()
            .iter()
            .map(|f| delta_unchecked(&f.image_unchecked(b0), &f.image_unchecked(&fb)))
            .fold(0.0, f64::max);
        Ok(RateCertificate { d, x0, x1 })
    }

    pub fn bound(&self, n: usize) -> f64 {
        let half = i32::try_from(n / 2).unwrap_or(i32::MAX);
        self.d.powi(half) / (1.0 - self.d) * (self.x0 + self.x1)
    }
}

pub fn rate_certificate(system: &IFSSystem, b0: &PointSet, n: usize) -> Result<f64> {
    Ok(RateCertificate::new(system, b0)?.bound(n))
}

/// Fails when `maps^depth` words exceed [`WORD_BUDGET`].
pub fn check_word_budget(maps: usize, depth: usize) -> Result<()> {
    let mut count: u128 = 1;
    for _ in 0..depth {
        count = count.saturating_mul(maps as u128);
        if count > WORD_BUDGET {
            return Err(Error::BudgetExceeded {
                requested: (maps as u128).saturating_pow(depth as u32),
                budget: WORD_BUDGET,
            });
        }
    }
    Ok(())
}

/// Sequences `x_k = max_{|w|=k} δ(f_w(Y), f_w(Z))` for `k = 0..=depth` and
/// `y_k = max(x_{k-1}, x_k)` for `k = 1..=depth`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XyDiagnostics {
    pub x: Vec<f64>,
    /// `y[k - 1]` holds `y_k`.
    pub y: Vec<f64>,
}

impl XyDiagnostics {
    pub fn depth(&self) -> usize {
        self.x.len() - 1
    }

    pub fn y(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.y.get(i)).copied()
    }
}

/// Per-level data from exhaustive word enumeration.
struct Level {
    x: f64,
    /// `h(F^k(Y), F^k(Z))`, when requested.
    hausdorff: Option<f64>,
}

/// Walks `Λ_0, …, Λ_depth` keeping `f_w(Y)` and `f_w(Z)` for every word.
/// Words of length `k+1` are built as `i·w`, so each level costs one map
/// application per point.
fn enumerate_levels(
    system: &IFSSystem,
    y: &PointSet,
    z: &PointSet,
    depth: usize,
    with_unions: bool,
) -> Result<Vec<Level>> {
    if y.dim() != system.dim() || z.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: if y.dim() != system.dim() {
                y.dim()
            } else {
                z.dim()
            },
        });
    }
    check_word_budget(system.len(), depth)?;
    let dim = system.dim();
    let (sy, sz) = (y.as_slice().len(), z.as_slice().len());
    let mut ly = y.as_slice().to_vec();
    let mut lz = z.as_slice().to_vec();
    let mut levels = Vec::with_capacity(depth + 1);
    for k in 0..=depth {
        let x = ly
            .par_chunks_exact(sy)
            .zip(lz.par_chunks_exact(sz))
            .map(|(cy, cz)| {
                delta_unchecked(
                    &PointSet::from_raw(dim, cy.to_vec()),
                    &PointSet::from_raw(dim, cz.to_vec()),
                )
            })
            .reduce(|| 0.0, f64::max);
        let hd = if with_unions {
            Some(hausdorff(
                &PointSet::from_raw(dim, ly.clone()),
                &PointSet::from_raw(dim, lz.clone()),
            )?)
        } else {
            None
        };
        levels.push(Level { x, hausdorff: hd });
        if k < depth {
            ly = hutchinson_unchecked(system, &PointSet::from_raw(dim, ly))
                .as_slice()
                .to_vec();
            lz = hutchinson_unchecked(system, &PointSet::from_raw(dim, lz))
                .as_slice()
                .to_vec();
        }
    }
    Ok(levels)
}

pub fn diagnostics_xy(
    system: &IFSSystem,
    y: &PointSet,
    z: &PointSet,
    n_max: usize,
) -> Result<XyDiagnostics> {
    let levels = enumerate_levels(system, y, z, n_max, false)?;
    Ok(xy_from_levels(&levels))
}

fn xy_from_levels(levels: &[Level]) -> XyDiagnostics {
    let x: Vec<f64> = levels.iter().map(|l| l.x).collect();
    let y = x.windows(2).map(|w| w[0].max(w[1])).collect();
    XyDiagnostics { x, y }
}

/// Which inequality of the convergence argument failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProofCheck {
    /// `y_{k+1} <= y_k`
    YNonIncreasing,
    /// `x_{k+1} <= d y_k`
    NextXBound,
    /// `y_{k+2} <= d y_k`
    TwoStepContraction,
    /// `h(F^k Y, F^k Z) <= x_k`
    UnionBound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProofViolation {
    pub check: ProofCheck,
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Exact replay of the convergence inequalities on a pair of clouds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProofReport {
    pub d: f64,
    pub diagnostics: XyDiagnostics,
    /// `h(F^k Y, F^k Z)` for `k = 0..=depth`.
    pub hausdorff: Vec<f64>,
    pub violations: Vec<ProofViolation>,
}

impl ProofReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn passes_check(&self, check: ProofCheck) -> bool {
        self.violations.iter().all(|v| v.check != check)
    }
}

pub fn check_proof_inequalities(
    system: &IFSSystem,
    y: &PointSet,
    z: &PointSet,
    depth: usize,
    slack: f64,
) -> Result<ProofReport> {
    let d = system.contraction_constant()?;
    let levels = enumerate_levels(system, y, z, depth, true)?;
    let diagnostics = xy_from_levels(&levels);
    let hd: Vec<f64> = levels.iter().map(|l| l.hausdorff.unwrap_or(0.0)).collect();
    let mut violations = Vec::new();
    let mut check = |check: ProofCheck, k: usize, lhs: f64, rhs: f64| {
        if lhs > rhs + slack {
            violations.push(ProofViolation { check, k, lhs, rhs });
        }
    };
    let x = &diagnostics.x;
    for k in 1..=depth {
        let yk = diagnostics.y(k).expect("k <= depth");
        if let Some(y1) = diagnostics.y(k + 1) {
            check(ProofCheck::YNonIncreasing, k, y1, yk);
        }
        if k < depth {
            check(ProofCheck::NextXBound, k, x[k + 1], d * yk);
        }
        if let Some(y2) = diagnostics.y(k + 2) {
            check(ProofCheck::TwoStepContraction, k, y2, d * yk);
        }
    }
    for (k, (&h, &xk)) in hd.iter().zip(x).enumerate() {
        check(ProofCheck::UnionBound, k, h, xk);
    }
    Ok(ProofReport {
        d,
        diagnostics,
        hausdorff: hd,
        violations,
    })
}

/// Convenience: uniform random cloud of `n` points in the box.
pub fn random_cloud(domain: &DomainBox, n: usize, seed: u64) -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n.max(1))
        .flat_map(|_| domain.sample(&mut rng))
        .collect();
    PointSet::from_raw(domain.dim(), coords)
}

/// Convenience: the box center as a one-point cloud.
pub fn center_cloud(domain: &DomainBox) -> PointSet {
    PointSet::from_raw(domain.dim(), domain.center())
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn s1(v: &[f64]) -> PointSet {
        PointSet::from_scalars(v).unwrap()
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(validate_alpha(quadratic().table()).unwrap(), 0.5);
        assert!((validate_alpha(cantor().table()).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let mut t = CoefficientTable::zeros(2);
        t.set(1, 0, Coefficients::new(0.5, 0.25, 0.25)).unwrap();
        match validate_alpha(&t) {
            Err(Error::AlphaViolation { i: 1, j: 0, value }) => assert_eq!(value, 1.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(t.set(0, 0, Coefficients::new(-0.1, 0.0, 0.0)).is_err());
        assert!(t.set(2, 0, Coefficients::default()).is_err());
    }

    #[test]
    fn synthesis_examples() {
        let t = cantor().table().clone();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(t.get(i, j), Coefficients::new(0.0, 0.0, 1.0 / 3.0));
            }
        }
        assert_eq!(validate_alpha(sierpinski().table()).unwrap(), 0.5);
        let unit = DomainBox::unit(1).unwrap();
        let iso = vec![MapDescriptor::linear_1d(1.0, 0.0).unwrap()];
        assert!(matches!(
            synthesize_affine_coeffs(&iso, &unit),
            Err(Error::NotContractive { index: 0, .. })
        ));
        let poly = vec![MapDescriptor::poly1d(vec![0.0, 0.5]).unwrap()];
        assert!(matches!(
            synthesize_affine_coeffs(&poly, &unit),
            Err(Error::NotAffine { index: 0 })
        ));
    }

    #[test]
    fn falsifier_examples() {
        assert_eq!(falsify_beta(&quadratic(), 20_000, 42), None);
        let mut bad = quadratic_table();
        bad.set(0, 0, Coefficients::new(0.1, 0.1, 0.1)).unwrap();
        let sys = quadratic().with_table(bad).unwrap();
        let c = falsify_beta(&sys, 20_000, 42).expect("violation");
        assert!(c.lhs > c.rhs);
        assert_eq!((c.i, c.j), (0, 0));
        let (lhs, rhs) = beta_sides(&sys, 0, 0, &[1.0], &[0.9]);
        assert!((lhs - (1.0 - 0.6561) / 8.0).abs() < 1e-15);
        assert!((rhs - 0.029).abs() < 1e-15);

        let mut t = CoefficientTable::zeros(1);
        t.set(0, 0, Coefficients::new(0.25, 0.0, 0.0)).unwrap();
        let single = half().with_table(t).unwrap();
        assert_eq!(falsify_beta(&single, 10_000, 1), None);
    }

    #[test]
    fn falsifier_is_deterministic() {
        let mut bad = quadratic_table();
        bad.set(0, 0, Coefficients::new(0.1, 0.1, 0.1)).unwrap();
        let sys = quadratic().with_table(bad).unwrap();
        assert_eq!(falsify_beta(&sys, 5000, 9), falsify_beta(&sys, 5000, 9));
    }

    #[test]
    fn hutchinson_examples() {
        let out = hutchinson(&cantor(), &s1(&[0.0, 1.0])).unwrap();
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        assert!(hausdorff(&out, &s1(&expect)).unwrap() < 1e-15);
        let b = s1(&[0.3, 0.8]);
        let single = hutchinson(&half(), &b).unwrap();
        assert_eq!(single.as_slice(), &[0.15, 0.4]);
        let q = hutchinson(&quadratic(), &s1(&[0.0, 1.0])).unwrap();
        assert_eq!(q.len(), 4);
        assert_eq!(hausdorff(&q, &s1(&[0.0, 0.5, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn attractor_single_map_reaches_fixed_point() {
        let opts = AttractorOptions {
            tol: 1e-9,
            eps_decimate: 0.0,
            max_iter: 200,
        };
        let r = attractor(&half(), &s1(&[0.9, 0.2]), &opts).unwrap();
        assert!(hausdorff(&r.cloud, &s1(&[0.0])).unwrap() <= 1e-9);
        assert!(r.step_gap <= 1e-9 && r.rate_bound >= 0.0);
    }

    #[test]
    fn attractor_reports_non_convergence() {
        let opts = AttractorOptions {
            tol: 1e-9,
            eps_decimate: 0.0,
            max_iter: 3,
        };
        match attractor(&half(), &s1(&[1.0]), &opts) {
            Err(Error::AttractorNonConvergence(last)) => assert_eq!(last.iterations, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(attractor(&half(), &s1(&[2.0]), &AttractorOptions::default()).is_err());
    }

    #[test]
    fn rate_certificate_examples() {
        let b0 = s1(&[0.0]);
        let cert = RateCertificate::new(&cantor(), &b0).unwrap();
        assert!((cert.bound(0) - (cert.x0 + cert.x1) / (1.0 - cert.d)).abs() < 1e-15);
        assert!((cert.x0 - 2.0 / 3.0).abs() < 1e-15);
        assert!((cert.x1 - 2.0 / 9.0).abs() < 1e-15);
        for n in 0..20 {
            let ratio = cert.bound(n + 2) / cert.bound(n);
            assert!((ratio - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(cert.bound(4), rate_certificate(&cantor(), &b0, 4).unwrap());
    }

    #[test]
    fn diagnostics_examples() {
        let y = s1(&[0.2, 0.6]);
        let diag = diagnostics_xy(&cantor(), &y, &y, 6).unwrap();
        assert!(diag.x.iter().all(|&x| x > 0.0), "δ(A, A) is a diameter");
        let point = s1(&[0.4]);
        let diag = diagnostics_xy(&cantor(), &point, &point, 6).unwrap();
        assert!(diag.x.iter().all(|&x| x == 0.0));
        assert_eq!(diag.depth(), 6);
        assert_eq!(diag.y(0), None);

        let z = s1(&[0.9]);
        let report = check_proof_inequalities(&cantor(), &y, &z, 10, 1e-12).unwrap();
        assert!(report.passes(), "{:?}", report.violations);
        assert!(matches!(
            diagnostics_xy(
                &sierpinski(),
                &random_cloud(sierpinski().domain(), 2, 1),
                &random_cloud(sierpinski().domain(), 2, 2),
                13
            ),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn proof_report_flags_a_wrong_table() {
        // Claiming d = 0.1 for the Cantor maps (true ratio 1/3) must break
        // the next-x bound.
        let mut t = CoefficientTable::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                t.set(i, j, Coefficients::new(0.0, 0.0, 0.1)).unwrap();
            }
        }
        let sys = cantor().with_table(t).unwrap();
        let r = check_proof_inequalities(&sys, &s1(&[0.1]), &s1(&[0.8]), 6, 1e-12).unwrap();
        assert!(!r.passes_check(ProofCheck::NextXBound));
        assert!(r.passes_check(ProofCheck::UnionBound));
    }
}
