use std::io::Write;

use crate::error::{ensure, Result};
use crate::math::{interp_zero, trapz};

/// A probability density sampled on an ascending voltage grid. Values between
/// nodes are linear; outside the grid the density is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct MembraneDensity {
    grid: Vec<f64>,
    density: Vec<f64>,
    lower_bound: f64,
}

impl MembraneDensity {
    pub fn new(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        ensure(grid.len() >= 2 && grid.len() == density.len(), || {
            format!("density needs matching grids of at least 2 points, got {} and {}", grid.len(), density.len())
        })?;
        ensure(grid.windows(2).all(|w| w[1] > w[0]), || "density grid must be strictly ascending".into())?;
        ensure(density.iter().all(|p| p.is_finite()), || "density values must be finite".into())?;
        let lower_bound = grid[0];
        Ok(MembraneDensity { grid, density, lower_bound })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.density
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn mass(&self) -> f64 {
        trapz(&self.grid, &self.density)
    }

    pub fn at(&self, v: f64) -> f64 {
        interp_zero(&self.grid, &self.density, v)
    }

    pub fn mean(&self) -> f64 {
        let vp: Vec<f64> = self.grid.iter().zip(&self.density).map(|(v, p)| v * p).collect();
        trapz(&self.grid, &vp) / self.mass()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let vp: Vec<f64> = self.grid.iter().zip(&self.density).map(|(v, p)| (v - m) * (v - m) * p).collect();
        trapz(&self.grid, &vp) / self.mass()
    }

    /// Exact integral of the piecewise-linear density over `[a, b]`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let g = &self.grid;
        let (lo, hi) = (a.max(g[0]), b.min(g[g.len() - 1]));
        if hi <= lo {
            return 0.0;
        }
        let mut total = 0.0;
        for k in 0..g.len() - 1 {
            let (x0, x1) = (g[k].max(lo), g[k + 1].min(hi));
            if x1 > x0 {
                total += 0.5 * (x1 - x0) * (self.at(x0) + self.at(x1));
            }
        }
        total
    }

    /// `∫ |self - other| dv`, evaluated on the union of both grids.
    pub fn l1_distance(&self, other: &MembraneDensity) -> f64 {
        let mut xs: Vec<f64> = self.grid.iter().chain(&other.grid).copied().collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        // Refine so that crossings between the two curves are resolved.
        let mut fine = Vec::with_capacity(xs.len() * 4);
        for w in xs.windows(2) {
            for s in 0..4 {
                fine.push(w[0] + (w[1] - w[0]) * s as f64 / 4.0);
            }
        }
        fine.push(*xs.last().expect("non-empty grids"));
        let diff: Vec<f64> = fine.iter().map(|&v| (self.at(v) - other.at(v)).abs()).collect();
        trapz(&fine, &diff)
    }

    /// Write `v,density` rows with a header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["v", "density"])?;
        for (v, p) in self.grid.iter().zip(&self.density) {
            out.write_record([format!("{v}"), format!("{p}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Normalised histogram of voltage samples with equal-width bins.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub density: Vec<f64>,
    /// Fraction of samples that fell outside `[lo, hi)`.
    pub outside: f64,
}

impl Histogram {
    pub fn from_samples<'a>(samples: impl IntoIterator<Item = &'a f64>, lo: f64, hi: f64, bins: usize) -> Self {
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        let (mut n, mut out) = (0u64, 0u64);
        for &x in samples {
            n += 1;
            let b = ((x - lo) / width).floor();
            if b >= 0.0 && (b as usize) < bins {
                counts[b as usize] += 1;
            } else {
                out += 1;
            }
        }
        let norm = if n == 0 { 0.0 } else { 1.0 / (n as f64 * width) };
        Histogram {
            lo,
            hi,
            density: counts.iter().map(|&c| c as f64 * norm).collect(),
            outside: if n == 0 { 0.0 } else { out as f64 / n as f64 },
        }
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.density.len() as f64
    }

    pub fn centres(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..self.density.len()).map(|k| self.lo + (k as f64 + 0.5) * w).collect()
    }

    /// `∫ |p - h| dv`, comparing bin averages of `p` against the histogram and
    /// adding any probability either side places outside the histogram range.
    pub fn l1_distance(&self, p: &MembraneDensity) -> f64 {
        let w = self.bin_width();
        let inside: f64 = self
            .density
            .iter()
            .enumerate()
            .map(|(k, &h)| {
                let a = self.lo + k as f64 * w;
                (p.mass_between(a, a + w) - h * w).abs()
            })
            .sum();
        let p_outside = (p.mass() - p.mass_between(self.lo, self.hi)).max(0.0);
        inside + p_outside + self.outside
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> MembraneDensity {
        MembraneDensity::new(vec![0.0, 0.5, 1.0], vec![1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn mass_and_moments() {
        let d = uniform();
        assert!((d.mass() - 1.0).abs() < 1e-15);
        assert!((d.mean() - 0.5).abs() < 1e-15);
        assert!((d.mass_between(0.25, 2.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(MembraneDensity::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(MembraneDensity::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn l1_of_disjoint_is_two() {
        let a = MembraneDensity::new(vec![0.0, 1e-9, 1.0 - 1e-9, 1.0], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let b = MembraneDensity::new(vec![2.0, 2.0 + 1e-9, 3.0 - 1e-9, 3.0], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((a.l1_distance(&b) - 2.0).abs() < 1e-6);
        assert!(a.l1_distance(&a).abs() < 1e-15);
    }

    #[test]
    fn histogram_of_uniform_samples() {
        let xs: Vec<f64> = (0..10_000).map(|i| (i as f64 + 0.5) / 10_000.0).collect();
        let h = Histogram::from_samples(&xs, 0.0, 1.0, 20);
        assert!(h.density.iter().all(|&d| (d - 1.0).abs() < 1e-12));
        assert!(h.l1_distance(&uniform()) < 1e-12);
    }

    #[test]
    fn csv_has_header() {
        let mut buf = Vec::new();
        uniform().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("v,density\n0,1\n"));
    }
}
