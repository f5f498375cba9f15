use crate::error::{Error, Result};

/// A sign-changing interval of a scalar function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Result of a bisection run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub f_x: f64,
    /// Final bracket, still sign-changing unless `f_x == 0`.
    pub bracket: Bracket,
    pub iterations: usize,
}

fn sign_change(a: f64, b: f64) -> bool {
    (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0) || a == 0.0 || b == 0.0
}

/// Evaluates `f` on `grid` and returns every adjacent pair with a sign change,
/// in grid order. Non-finite samples never form a bracket.
pub fn scan_brackets<F>(mut f: F, grid: &[f64]) -> Result<Vec<Bracket>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &x in grid {
        let fx = f(x)?;
        if let Some((xp, fp)) = prev {
            if fp.is_finite() && fx.is_finite() && sign_change(fp, fx) && !(fp == 0.0 && fx == 0.0) {
                out.push(Bracket {
                    lo: xp,
                    hi: x,
                    f_lo: fp,
                    f_hi: fx,
                });
            }
        }
        prev = Some((x, fx));
    }
    Ok(out)
}

/// Bisects a bracket until either `|f| <= f_tol`, the bracket is narrower than
/// `x_tol`, or floating point can no longer split it.
pub fn bisect<F>(mut f: F, bracket: Bracket, x_tol: f64, f_tol: f64) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let Bracket {
        mut lo,
        mut hi,
        mut f_lo,
        mut f_hi,
    } = bracket;
    if !sign_change(f_lo, f_hi) {
        return Err(Error::InvalidParameter(format!(
            "bisection needs a sign change, got f({lo}) = {f_lo}, f({hi}) = {f_hi}"
        )));
    }
    if f_lo == 0.0 {
        return Ok(Root { x: lo, f_x: 0.0, bracket, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Root { x: hi, f_x: 0.0, bracket, iterations: 0 });
    }
    let mut iterations = 0;
    loop {
        let mid = lo + 0.5 * (hi - lo);
        let f_mid = f(mid)?;
        iterations += 1;
        let done = f_mid == 0.0
            || f_mid.abs() <= f_tol
            || (hi - lo).abs() <= x_tol
            || mid <= lo.min(hi)
            || mid >= lo.max(hi)
            || iterations >= 400;
        if done {
            return Ok(Root {
                x: mid,
                f_x: f_mid,
                bracket: Bracket { lo, hi, f_lo, f_hi },
                iterations,
            });
        }
        if sign_change(f_lo, f_mid) {
            hi = mid;
            f_hi = f_mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
}

/// Evenly spaced grid of `panels + 1` points spanning `[a, b]`.
pub fn linspace(a: f64, b: f64, panels: usize) -> Vec<f64> {
    let n = panels.max(1);
    (0..=n)
        .map(|i| {
            if i == n {
                b
            } else {
                a + (b - a) * i as f64 / n as f64
            }
        })
        .collect()
}
