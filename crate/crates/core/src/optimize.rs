//! Scalar root finding and 1-D optimization.

/// Inverse golden ratio, (sqrt(5) - 1) / 2.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Bisection on a sign change of `f` over `[lo, hi]`, with `f(lo) <= 0 <= f(hi)`.
///
/// `done(lo, hi)` decides convergence; the midpoint of the final bracket is
/// returned.
pub fn bisect<F, D>(f: F, mut lo: f64, mut hi: f64, done: D) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64, f64) -> bool,
{
    for _ in 0..2000 {
        if done(lo, hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
///
/// Stops once the bracket is narrower than `rtol * |x|`, or after 500
/// contractions. Returns `(x, f(x))`.
pub fn golden_section_min<F>(f: F, mut a: f64, mut b: f64, rtol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= rtol * mid.abs() || (b - a).abs() <= f64::EPSILON * mid.abs() {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // the interior probes can beat the midpoint at a kink
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, p| if p.1 < best.1 { p } else { best })
}

/// Minimize `f` over an explicit grid, then refine with golden section
/// between the neighbours of the best grid point.
pub fn grid_then_golden_min<F>(f: F, grid: &[f64], rtol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    assert!(!grid.is_empty(), "empty search grid");
    let (best, _) =
        grid.iter()
            .enumerate()
            .map(|(i, &x)| (i, f(x)))
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (x, fx) = if hi > lo {
        golden_section_min(&f, lo, hi, rtol)
    } else {
        (grid[best], f(grid[best]))
    };
    let fg = f(grid[best]);
    if fg < fx {
        (grid[best], fg)
    } else {
        (x, fx)
    }
}

/// Maximizing counterpart of [`grid_then_golden_min`].
pub fn grid_then_golden_max<F>(f: F, grid: &[f64], rtol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (x, neg) = grid_then_golden_min(|x| -f(x), grid, rtol);
    (x, -neg)
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}
