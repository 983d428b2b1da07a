//! Adaptive tensor Gauss-Legendre cubature on rectangles.
//!
//! Used to pin down reference means of test integrands.

use crate::error::{Error, Result};

/// Nodes and weights of the `m`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_m.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubature {
    pub value: f64,
    /// Sum of the local error estimates of the final cells.
    pub error: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn quarters(&self) -> [Rect; 4] {
        let xm = 0.5 * (self.x0 + self.x1);
        let ym = 0.5 * (self.y0 + self.y1);
        [
            Rect {
                x0: self.x0,
                x1: xm,
                y0: self.y0,
                y1: ym,
            },
            Rect {
                x0: xm,
                x1: self.x1,
                y0: self.y0,
                y1: ym,
            },
            Rect {
                x0: self.x0,
                x1: xm,
                y0: ym,
                y1: self.y1,
            },
            Rect {
                x0: xm,
                x1: self.x1,
                y0: ym,
                y1: self.y1,
            },
        ]
    }
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    fn apply(&self, f: &impl Fn(f64, f64) -> f64, r: &Rect) -> f64 {
        let (cx, hx) = (0.5 * (r.x0 + r.x1), 0.5 * (r.x1 - r.x0));
        let (cy, hy) = (0.5 * (r.y0 + r.y1), 0.5 * (r.y1 - r.y0));
        let mut sum = 0.0;
        for (xi, wi) in self.nodes.iter().zip(&self.weights) {
            for (yj, wj) in self.nodes.iter().zip(&self.weights) {
                sum += wi * wj * f(cx + hx * xi, cy + hy * yj);
            }
        }
        sum * hx * hy
    }
}

const ORDER: usize = 8;
const MAX_CELLS: usize = 2_000_000;

struct Cell {
    rect: Rect,
    /// Rule applied to each quarter, summed.
    fine: f64,
    /// `|fine - single-rule value|`.
    error: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[x0, x1] x [y0, y1]` to absolute tolerance `tol`.
///
/// Globally adaptive: the cell with the largest error estimate (difference
/// between the rule on the cell and the rule on its four quarters) is split
/// until the summed estimate drops below `tol`.
pub fn integrate_2d(
    f: impl Fn(f64, f64) -> f64,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    tol: f64,
) -> Result<Cubature> {
    if [tol, x1 - x0, y1 - y0]
        .iter()
        .any(|v| v.is_nan() || *v <= 0.0)
    {
        return Err(Error::InvalidArgument(
            "cubature needs a positive tolerance and a non-empty rectangle".into(),
        ));
    }
    let (nodes, weights) = gauss_legendre(ORDER);
    let rule = Rule { nodes, weights };
    let make = |rect: Rect, coarse: f64| -> Result<Cell> {
        let parts = rect.quarters().map(|q| rule.apply(&f, &q));
        let fine: f64 = parts.iter().sum();
        if !fine.is_finite() {
            return Err(Error::InvalidArgument("integrand is not finite".into()));
        }
        let error = (fine - coarse).abs();
        Ok(Cell { rect, fine, error })
    };

    let domain = Rect { x0, x1, y0, y1 };
    let root = make(domain, rule.apply(&f, &domain))?;
    let mut error = root.error;
    let mut heap = std::collections::BinaryHeap::from([root]);

    while error > tol {
        if heap.len() >= MAX_CELLS {
            return Err(Error::InvalidArgument(format!(
                "cubature did not reach tolerance {tol:e} (estimate {error:e})"
            )));
        }
        let cell = heap.pop().expect("heap is never empty");
        error -= cell.error;
        let parts = cell.rect.quarters().map(|q| rule.apply(&f, &q));
        for (q, coarse) in cell.rect.quarters().into_iter().zip(parts) {
            let child = make(q, coarse)?;
            error += child.error;
            heap.push(child);
        }
        error = error.max(0.0);
    }

    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), c| (v + c.fine, e + c.error));
    Ok(Cubature {
        value,
        error,
        cells: heap.len(),
    })
}
