//! One-dimensional minimization of a criterion over a log-scaled parameter:
//! a coarse grid followed by golden-section refinement inside the bracket
//! around the best grid point.

/// Which end of the search interval the minimum sits on, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogSearch {
    pub x_min: f64,
    pub f_min: f64,
    pub boundary: Option<Boundary>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LogSearchOptions {
    pub lower: f64,
    pub upper: f64,
    pub grid_points: usize,
    /// stop once the bracket satisfies `hi / lo <= 1 + rel_tol`
    pub rel_tol: f64,
}

impl Default for LogSearchOptions {
    fn default() -> Self {
        Self {
            lower: 1e-8,
            upper: 1e8,
            grid_points: 41,
            rel_tol: 1e-4,
        }
    }
}

impl LogSearchOptions {
    pub fn grid(&self) -> Vec<f64> {
        log_grid(self.lower, self.upper, self.grid_points)
    }
}

/// `points` values spaced evenly in log10 between `lower` and `upper`.
pub fn log_grid(lower: f64, upper: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && lower > 0.0 && upper > lower);
    let (a, b) = (lower.log10(), upper.log10());
    (0..points)
        .map(|i| {
            if i == 0 {
                lower
            } else if i == points - 1 {
                upper
            } else {
                10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)
            }
        })
        .collect()
}

/// Minimizes `f` over `[lower, upper]`.
///
/// The grid is evaluated from the largest value downward (so stateful
/// criteria can warm-start from smoother fits). Non-finite criterion values
/// are treated as `+∞`. Exact ties go to the larger argument.
pub fn minimize_log<F: FnMut(f64) -> f64>(mut f: F, opts: &LogSearchOptions) -> Option<LogSearch> {
    let grid = opts.grid();
    let mut values = vec![f64::INFINITY; grid.len()];
    let mut evaluations = 0;
    for i in (0..grid.len()).rev() {
        let v = f(grid[i]);
        evaluations += 1;
        values[i] = if v.is_finite() { v } else { f64::INFINITY };
    }
    let mut best = None;
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) if *v <= values[b] => best = Some(i),
            _ => {}
        }
    }
    let best = best?;
    let last = grid.len() - 1;
    let boundary = if best == 0 {
        Some(Boundary::Lower)
    } else if best == last {
        Some(Boundary::Upper)
    } else {
        None
    };
    if boundary.is_some() {
        return Some(LogSearch {
            x_min: grid[best],
            f_min: values[best],
            boundary,
            evaluations,
        });
    }

    // golden section on ln(x) within the bracketing neighbours
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = grid[best - 1].ln();
    let mut b = grid[best + 1].ln();
    let tol = (1.0 + opts.rel_tol).ln();
    let mut x_best = grid[best];
    let mut f_best = values[best];
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c.exp());
    let mut fd = f(d.exp());
    evaluations += 2;
    let consider = |x: f64, v: f64, xb: &mut f64, fb: &mut f64| {
        if v.is_finite() && (v < *fb || (v == *fb && x > *xb)) {
            *xb = x;
            *fb = v;
        }
    };
    consider(c.exp(), fc, &mut x_best, &mut f_best);
    consider(d.exp(), fd, &mut x_best, &mut f_best);
    while b - a > tol {
        if fc < fd || (!fd.is_finite() && fc.is_finite()) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c.exp());
            evaluations += 1;
            consider(c.exp(), fc, &mut x_best, &mut f_best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d.exp());
            evaluations += 1;
            consider(d.exp(), fd, &mut x_best, &mut f_best);
        }
    }
    Some(LogSearch {
        x_min: x_best,
        f_min: f_best,
        boundary: None,
        evaluations,
    })
}
