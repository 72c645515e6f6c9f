//! Surrogate derivatives of the spike nonlinearity.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::math::trapz;
use crate::theory::density::MembraneDensity;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum SurrogateShape {
    /// `H'(v) = 1` for `|v - V_th| <= half_width`, else 0.
    Boxcar { half_width: f64 },
    /// `H'` sampled at `offsets` from threshold, linear in between, zero outside.
    Tabulated { offsets: Vec<f64>, values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    #[serde(flatten)]
    pub shape: SurrogateShape,
    #[serde(default = "one")]
    pub kappa: f64,
}

fn one() -> f64 {
    1.0
}

impl SurrogateSpec {
    pub fn boxcar(half_width: f64) -> Self {
        SurrogateSpec { shape: SurrogateShape::Boxcar { half_width }, kappa: 1.0 }
    }

    pub fn tabulated(offsets: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s = SurrogateSpec { shape: SurrogateShape::Tabulated { offsets, values }, kappa: 1.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        SurrogateSpec { kappa, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.kappa.is_finite() && self.kappa >= 0.0, || format!("kappa must be >= 0, got {}", self.kappa))?;
        match &self.shape {
            SurrogateShape::Boxcar { half_width } => {
                ensure(*half_width > 0.0 && half_width.is_finite(), || format!("boxcar half-width must be positive, got {half_width}"))
            }
            SurrogateShape::Tabulated { offsets, values } => {
                ensure(offsets.len() >= 2 && offsets.len() == values.len(), || "tabulated surrogate needs >= 2 matching samples".into())?;
                ensure(offsets.windows(2).all(|w| w[1] > w[0]), || "surrogate offsets must be ascending".into())?;
                ensure(values.iter().all(|&h| h >= 0.0 && h.is_finite()), || "surrogate values must be finite and >= 0".into())
            }
        }
    }

    /// Offsets from threshold outside of which `H'` vanishes.
    pub fn support(&self) -> (f64, f64) {
        match &self.shape {
            SurrogateShape::Boxcar { half_width } => (-half_width, *half_width),
            SurrogateShape::Tabulated { offsets, .. } => (offsets[0], offsets[offsets.len() - 1]),
        }
    }

    /// Largest distance from threshold at which `H'` can be nonzero.
    pub fn reach(&self) -> f64 {
        let (a, b) = self.support();
        a.abs().max(b.abs())
    }

    /// `H'(v)` without `kappa`.
    pub fn derivative(&self, v: f64, v_th: f64) -> f64 {
        let x = v - v_th;
        match &self.shape {
            SurrogateShape::Boxcar { half_width } => (x.abs() <= *half_width) as u8 as f64,
            SurrogateShape::Tabulated { offsets, values } => crate::math::interp_zero(offsets, values, x),
        }
    }

    /// `kappa H'(v)`.
    pub fn scaled(&self, v: f64, v_th: f64) -> f64 {
        self.kappa * self.derivative(v, v_th)
    }

    /// `∫_{-inf}^{v} H'`, without `kappa`.
    pub fn antiderivative(&self, v: f64, v_th: f64) -> f64 {
        let x = v - v_th;
        match &self.shape {
            SurrogateShape::Boxcar { half_width } => (x + half_width).clamp(0.0, 2.0 * half_width),
            SurrogateShape::Tabulated { offsets, values } => {
                let mut acc = 0.0;
                for k in 0..offsets.len() - 1 {
                    let (x0, x1) = (offsets[k], offsets[k + 1]);
                    if x <= x0 {
                        break;
                    }
                    let (y0, y1) = (values[k], values[k + 1]);
                    let xe = x.min(x1);
                    let ye = y0 + (y1 - y0) * (xe - x0) / (x1 - x0);
                    acc += 0.5 * (xe - x0) * (y0 + ye);
                }
                acc
            }
        }
    }
}

/// `∫ H'(v)² P(v) dv` with `kappa` left out.
pub fn surrogate_mass(density: &MembraneDensity, surrogate: &SurrogateSpec, v_th: f64) -> Result<f64> {
    surrogate.validate()?;
    let (lo, hi) = surrogate.support();
    let grid = density.grid();
    let (g0, g1) = (grid[0], grid[grid.len() - 1]);
    if v_th + lo < g0 || v_th + hi > g1 {
        return Err(Error::InvalidParameter(format!(
            "surrogate support [{}, {}] extends beyond the density grid [{g0}, {g1}]",
            v_th + lo,
            v_th + hi
        )));
    }
    match &surrogate.shape {
        SurrogateShape::Boxcar { .. } => Ok(density.mass_between(v_th + lo, v_th + hi)),
        SurrogateShape::Tabulated { offsets, .. } => {
            let mut xs: Vec<f64> = grid.iter().copied().filter(|&v| v > v_th + lo && v < v_th + hi).collect();
            xs.extend(offsets.iter().map(|o| v_th + o));
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let mut fine = Vec::with_capacity(xs.len() * 8);
            for w in xs.windows(2) {
                for s in 0..8 {
                    fine.push(w[0] + (w[1] - w[0]) * s as f64 / 8.0);
                }
            }
            fine.push(v_th + hi);
            let ys: Vec<f64> = fine.iter().map(|&v| surrogate.derivative(v, v_th).powi(2) * density.at(v)).collect();
            Ok(trapz(&fine, &ys))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_density(top: f64) -> MembraneDensity {
        let n = 10_200;
        let grid: Vec<f64> = (0..=n).map(|k| top * k as f64 / n as f64).collect();
        let vals = grid.iter().map(|&v| if v <= 1.0 { 1.0 } else { 0.0 }).collect();
        MembraneDensity::new(grid, vals).unwrap()
    }

    #[test]
    fn boxcar_on_uniform() {
        let i = surrogate_mass(&step_density(1.02), &SurrogateSpec::boxcar(0.01), 1.0).unwrap();
        assert!((i - 0.01).abs() < 1e-4, "{i}");
        assert!(surrogate_mass(&step_density(1.0), &SurrogateSpec::boxcar(0.01), 1.0).is_err());
    }

    #[test]
    fn zero_surrogate_sees_nothing() {
        let s = SurrogateSpec::tabulated(vec![-0.1, 0.1], vec![0.0, 0.0]).unwrap();
        assert_eq!(surrogate_mass(&step_density(1.2), &s, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn tabulated_boxcar_agrees() {
        let d = step_density(1.2);
        let s = SurrogateSpec::tabulated(vec![-0.3, 0.3], vec![1.0, 1.0]).unwrap();
        let b = SurrogateSpec::boxcar(0.3);
        let (x, y) = (surrogate_mass(&d, &s, 0.8).unwrap(), surrogate_mass(&d, &b, 0.8).unwrap());
        assert!((x - y).abs() < 1e-4, "{x} vs {y}");
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        let s = SurrogateSpec::tabulated(vec![-0.2, 0.0, 0.1, 0.3], vec![0.0, 2.0, 1.0, 0.5]).unwrap();
        // Trapezoid areas 0.2 + 0.15 + 0.15.
        assert!((s.antiderivative(0.35, 0.0) - 0.5).abs() < 1e-14);
        assert!((s.antiderivative(-0.1, 0.0) - 0.05).abs() < 1e-14);
        assert_eq!(s.antiderivative(-0.5, 0.0), 0.0);
        assert!((SurrogateSpec::boxcar(0.01).antiderivative(1.0, 1.0) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(SurrogateSpec::boxcar(0.0).validate().is_err());
        assert!(SurrogateSpec::tabulated(vec![0.0, -1.0], vec![1.0, 1.0]).is_err());
        assert!(SurrogateSpec::tabulated(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
    }
}
