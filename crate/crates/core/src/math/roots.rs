//! Brent's method for scalar roots.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    /// Stop when the bracket is narrower than `x_tol` (absolute) ...
    pub x_tol: f64,
    /// ... or when `|f| <= f_tol`.
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { x_tol: 1e-12, f_tol: 0.0, max_iter: 200 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Root {
    pub x: f64,
    pub f: f64,
    pub iterations: usize,
}

/// Find a root of `f` in `[a, b]`. `f(a)` and `f(b)` must differ in sign.
pub fn brent<F>(mut f: F, a: f64, b: f64, opts: RootOptions) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(Root { x: a, f: fa, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, f: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidParameter(format!(
            "root is not bracketed: f({a}) = {fa}, f({b}) = {fb}"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=opts.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * opts.x_tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb.abs() <= opts.f_tol {
            return Ok(Root { x: b, f: fb, iterations: iter });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::NotConverged(format!("Brent iteration limit {} reached near x = {b}", opts.max_iter)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let r = brent(|x| Ok(x * x * x - 2.0), 0.0, 2.0, RootOptions::default()).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-11);
    }

    #[test]
    fn f_tolerance_stops_early() {
        let opts = RootOptions { f_tol: 1e-3, ..Default::default() };
        let r = brent(|x| Ok(x - 0.3), 0.0, 1.0, opts).unwrap();
        assert!(r.f.abs() <= 1e-3);
    }

    #[test]
    fn unbracketed_is_an_error() {
        assert!(brent(|x| Ok(x * x + 1.0), -1.0, 1.0, RootOptions::default()).is_err());
    }

    #[test]
    fn errors_propagate() {
        let r = brent(|_| Err(Error::Numerical("boom".into())), 0.0, 1.0, RootOptions::default());
        assert!(matches!(r, Err(Error::Numerical(_))));
    }
}
