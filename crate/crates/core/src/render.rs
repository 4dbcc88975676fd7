//! Chaos-game sampling and grayscale rasterization of 1-D and 2-D clouds.
//!
//! The random orbit is a heuristic: symbols are drawn uniformly and no
//! convergence guarantee is claimed for systems whose members are not
//! contractions. Results are checked against [`crate::system::attractor`].

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::maps::DomainBox;
use crate::system::IFSSystem;

/// Largest accepted `width * height`.
pub const MAX_PIXELS: usize = 16_000_000;

/// Orbit `x_{n+1} = f_{i_n}(x_n)` from the box center with uniformly drawn
/// symbols; the first `burn_in` points are discarded.
pub fn chaos_game(system: &IFSSystem, iters: usize, burn_in: usize, seed: u64) -> Result<PointSet> {
    if iters <= burn_in {
        return Err(Error::Parse(format!(
            "chaos game needs iters > burn_in (got {iters} <= {burn_in})"
        )));
    }
    let dim = system.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = system.domain().center();
    let mut next = vec![0.0; dim];
    let mut coords = Vec::with_capacity((iters - burn_in) * dim);
    for n in 0..iters {
        let i = rng.gen_range(0..system.len());
        system.map(i).apply(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
        if n >= burn_in {
            coords.extend_from_slice(&x);
        }
    }
    Ok(PointSet::from_raw(dim, coords))
}

/// Visit counts on a `width x height` grid. Row 0 is the bottom row.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    pixels: Vec<u64>,
    viewport: DomainBox,
    dropped: usize,
}

impl Raster {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn viewport(&self) -> &DomainBox {
        &self.viewport
    }

    /// Count in column `col`, row `row` (row 0 at the bottom).
    pub fn count(&self, col: usize, row: usize) -> u64 {
        self.pixels[row * self.width + col]
    }

    pub fn pixels(&self) -> &[u64] {
        &self.pixels
    }

    pub fn total(&self) -> u64 {
        self.pixels.iter().sum()
    }

    /// Points that fell outside the viewport.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Pixel pitch along each axis (`width` then `height` for 2-D).
    pub fn pitch(&self) -> Vec<f64> {
        let lo = self.viewport.lo();
        let hi = self.viewport.hi();
        let mut p = vec![(hi[0] - lo[0]) / self.width as f64];
        if lo.len() == 2 {
            p.push((hi[1] - lo[1]) / self.height as f64);
        }
        p
    }

    /// `round(255 * ln(1 + c) / ln(1 + c_max))`, top row first.
    pub fn grayscale(&self) -> Vec<u8> {
        let max = self.pixels.iter().copied().max().unwrap_or(0);
        let denom = (max as f64).ln_1p();
        let mut out = Vec::with_capacity(self.pixels.len());
        for row in (0..self.height).rev() {
            for &c in &self.pixels[row * self.width..(row + 1) * self.width] {
                let v = if max == 0 {
                    0.0
                } else {
                    (255.0 * (c as f64).ln_1p() / denom).round()
                };
                out.push(v as u8);
            }
        }
        out
    }

    /// Binary P5 with maxval 255.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.grayscale())?;
        w.flush()
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_pgm(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }
}

fn cell(v: f64, lo: f64, hi: f64, n: usize) -> Option<usize> {
    if !(v >= lo && v <= hi) {
        return None;
    }
    let k = ((v - lo) / (hi - lo) * n as f64).floor() as usize;
    // Half-open cells, except that the top edge belongs to the last cell.
    Some(k.min(n - 1))
}

/// Bins `points` into a grid covering `viewport`. 1-D clouds are drawn on
/// the middle row.
pub fn rasterize(
    points: &PointSet,
    width: usize,
    height: usize,
    viewport: &DomainBox,
) -> Result<Raster> {
    let dim = viewport.dim();
    if dim > 2 {
        return Err(Error::DegenerateViewport(format!(
            "rendering supports dim <= 2, got {dim}"
        )));
    }
    if points.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: points.dim(),
        });
    }
    if width == 0 || height == 0 || width.saturating_mul(height) > MAX_PIXELS {
        return Err(Error::DegenerateViewport(format!(
            "raster size {width}x{height} outside 1..={MAX_PIXELS} pixels"
        )));
    }
    let (lo, hi) = (viewport.lo(), viewport.hi());
    if lo.iter().zip(hi).any(|(l, h)| !(h > l)) {
        return Err(Error::DegenerateViewport("viewport has zero extent".into()));
    }
    let mut pixels = vec![0u64; width * height];
    let mut dropped = 0;
    for p in points.iter() {
        let col = cell(p[0], lo[0], hi[0], width);
        let row = if dim == 2 {
            cell(p[1], lo[1], hi[1], height)
        } else {
            Some(height / 2)
        };
        match (col, row) {
            (Some(c), Some(r)) => pixels[r * width + c] += 1,
            _ => dropped += 1,
        }
    }
    Ok(Raster {
        width,
        height,
        pixels,
        viewport: viewport.clone(),
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hausdorff;
    use crate::system::fixtures::*;

    fn unit_square() -> DomainBox {
        DomainBox::unit(2).unwrap()
    }

    #[test]
    fn single_map_orbit_collapses() {
        let pts = chaos_game(&half(), 200, 60, 1).unwrap();
        assert_eq!(pts.len(), 140);
        assert!(pts.iter().all(|p| p[0].abs() <= 1e-15));
    }

    #[test]
    fn chaos_game_is_seeded() {
        let s = sierpinski();
        let a = chaos_game(&s, 5000, 100, 42).unwrap();
        let b = chaos_game(&s, 5000, 100, 42).unwrap();
        let c = chaos_game(&s, 5000, 100, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(chaos_game(&s, 10, 10, 0).is_err());
    }

    #[test]
    fn chaos_game_tracks_cantor() {
        let c = cantor();
        let pts = chaos_game(&c, 20000, 100, 7).unwrap();
        let reference = crate::system::attractor(
            &c,
            &PointSet::from_scalars(&[0.5]).unwrap(),
            &crate::system::AttractorOptions {
                tol: 1e-4,
                eps_decimate: 1e-4,
                max_iter: 200,
            },
        )
        .unwrap();
        assert!(hausdorff(&pts, &reference.cloud).unwrap() <= 2.0 / 512.0);
    }

    #[test]
    fn center_point_lands_in_center_cell() {
        let pts = PointSet::singleton(&[0.5, 0.5]).unwrap();
        let r = rasterize(&pts, 3, 3, &unit_square()).unwrap();
        assert_eq!(r.count(1, 1), 1);
        assert_eq!(r.total(), 1);
    }

    #[test]
    fn boundary_convention() {
        let pts = PointSet::new(2, vec![0.0, 0.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
        let r = rasterize(&pts, 4, 4, &unit_square()).unwrap();
        assert_eq!(r.count(0, 0), 1);
        assert_eq!(r.count(3, 3), 1);
        assert_eq!(r.count(3, 0), 1);
        // Bottom-left count ends up in the last PGM row.
        let g = r.grayscale();
        assert_eq!(g[12], 255);
        assert_eq!(g[3], 255);
    }

    #[test]
    fn coincident_points_and_drops() {
        let pts = PointSet::new(2, vec![0.3, 0.3, 0.3, 0.3, 1.5, 0.2, -0.1, 0.5]).unwrap();
        let r = rasterize(&pts, 10, 10, &unit_square()).unwrap();
        assert_eq!(r.count(3, 3), 2);
        assert_eq!(r.dropped(), 2);
        assert_eq!(r.total() as usize + r.dropped(), pts.len());
    }

    #[test]
    fn one_dimensional_strip() {
        let pts = PointSet::from_scalars(&[0.0, 0.5, 1.0]).unwrap();
        let r = rasterize(&pts, 4, 5, &DomainBox::unit(1).unwrap()).unwrap();
        assert_eq!(r.count(0, 2), 1);
        assert_eq!(r.count(2, 2), 1);
        assert_eq!(r.count(3, 2), 1);
    }

    #[test]
    fn degenerate_inputs() {
        let pts = PointSet::singleton(&[0.5, 0.5]).unwrap();
        let p3 = PointSet::singleton(&[0.5, 0.5, 0.5]).unwrap();
        assert!(matches!(
            rasterize(&p3, 3, 3, &DomainBox::unit(3).unwrap()),
            Err(Error::DegenerateViewport(_))
        ));
        assert!(rasterize(&pts, 0, 3, &unit_square()).is_err());
        assert!(rasterize(&pts, 5000, 5000, &unit_square()).is_err());
    }

    #[test]
    fn pgm_header_and_scaling() {
        let pts = PointSet::new(2, vec![0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.9, 0.9]).unwrap();
        let r = rasterize(&pts, 2, 2, &unit_square()).unwrap();
        let bytes = r.to_pgm_bytes();
        assert!(bytes.starts_with(b"P5\n2 2\n255\n"));
        let body = &bytes[bytes.len() - 4..];
        // Top row: (0,1)=0, (1,1)=1 visit; bottom row: (0,0)=3 visits.
        let one = (255.0 * 2f64.ln() / 4f64.ln()).round() as u8;
        assert_eq!(body, &[0, one, 255, 0]);
        assert_eq!(bytes, r.to_pgm_bytes());
    }
}
