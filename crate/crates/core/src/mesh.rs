//! Quadrature rules, Lagrange interpolation, and the two-level time mesh.
//!
//! The solver partitions `[0, T]` into `N` uniform outer intervals. Each
//! interval carries `M + 1` Gauss-Lobatto points ("subnodes"), so every
//! interval is itself split into `M` subintervals. Gauss-Lobatto placement
//! makes both interval endpoints collocation points, which is what lets the
//! SDC update march subnode to subnode.
//!
//! Node computations use Newton iterations on Legendre polynomials with a
//! bisection fallback; computed rules are symmetrized so that
//! `nodes[i] == -nodes[p-1-i]` holds bitwise. That exactness matters later:
//! the adjoint solve runs in reversed time and mirrored meshes must line up
//! without fuzz.

use crate::{Error, Result};

/// Newton tolerance for quadrature node computation.
const NODE_TOLERANCE: f64 = 1e-15;
const NODE_MAX_ITER: usize = 100;

/// A quadrature rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    /// Nodes in ascending order.
    pub nodes: Vec<f64>,
    /// Weights; `sum(weights) == 2`.
    pub weights: Vec<f64>,
}

/// Evaluates the Legendre polynomial `P_n` and its derivative at `x`.
///
/// Uses the three-term recurrence for the value and the companion
/// recurrence for the derivative, both stable on `[-1, 1]`.
pub(crate) fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut dp_prev) = (1.0, 0.0); // P_0
    let (mut p, mut dp) = (x, 1.0); // P_1
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        let dp_next = ((2.0 * kf + 1.0) * (p + x * dp) - kf * dp_prev) / (kf + 1.0);
        p_prev = p;
        dp_prev = dp;
        p = p_next;
        dp = dp_next;
    }
    (p, dp)
}

/// Second derivative of `P_n` from the Legendre differential equation;
/// valid away from the endpoints.
fn legendre_second_deriv(n: usize, x: f64) -> f64 {
    let (p, dp) = legendre_with_deriv(n, x);
    let nf = n as f64;
    (2.0 * x * dp - nf * (nf + 1.0) * p) / (1.0 - x * x)
}

/// Newton iteration with a bracketed bisection fallback.
///
/// `f` returns `(value, derivative)`. The bracket `[lo, hi]` must contain a
/// sign change of the value.
fn newton_with_bisection(
    f: impl Fn(f64) -> (f64, f64),
    guess: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let mut x = guess;
    for _ in 0..NODE_MAX_ITER {
        let (v, d) = f(x);
        if d != 0.0 {
            let dx = v / d;
            x -= dx;
            if dx.abs() <= NODE_TOLERANCE {
                return Ok(x);
            }
            if x > lo && x < hi {
                continue;
            }
        }
        // Newton stalled or escaped the bracket: bisect instead.
        let (mut a, mut b) = (lo, hi);
        let (va, _) = f(a);
        if va == 0.0 {
            return Ok(a);
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let (vm, _) = f(mid);
            if vm == 0.0 || 0.5 * (b - a) <= NODE_TOLERANCE {
                return Ok(mid);
            }
            if (vm > 0.0) == (va > 0.0) {
                a = mid;
            } else {
                b = mid;
            }
        }
        return Ok(0.5 * (a + b));
    }
    Ok(x)
}

/// Enforces exact symmetry: `nodes[i] == -nodes[p-1-i]` and matching weights.
fn symmetrize(rule: &mut QuadRule) {
    let p = rule.nodes.len();
    for i in 0..p / 2 {
        let j = p - 1 - i;
        let mag = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        rule.nodes[i] = -mag;
        rule.nodes[j] = mag;
        let w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if p % 2 == 1 {
        rule.nodes[p / 2] = 0.0;
    }
}

/// Gauss-Legendre rule with `p >= 1` points; exact for degree `2p - 1`.
pub fn gauss_legendre(p: usize) -> Result<QuadRule> {
    if p == 0 {
        return Err(Error::InvalidArgument(
            "Gauss-Legendre rule needs at least one point".to_string(),
        ));
    }
    let mut nodes = vec![0.0; p];
    let mut weights = vec![0.0; p];
    for i in 0..p {
        // Standard asymptotic initial guess; descending in i, so store mirrored.
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (p as f64 + 0.5)).cos();
        let x = newton_with_bisection(|x| legendre_with_deriv(p, x), guess, -1.0, 1.0)?;
        let (_, dp) = legendre_with_deriv(p, x);
        nodes[p - 1 - i] = x;
        weights[p - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    let mut rule = QuadRule { nodes, weights };
    symmetrize(&mut rule);
    Ok(rule)
}

/// Gauss-Lobatto rule with `p >= 2` points; exact for degree `2p - 3`.
///
/// Both endpoints are nodes, assigned exactly (`-1.0`, `1.0`). Interior
/// nodes are the roots of the derivative of the Legendre polynomial of
/// degree `p - 1`.
pub fn gauss_lobatto(p: usize) -> Result<QuadRule> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!(
            "Gauss-Lobatto rule needs at least two points, got {p}"
        )));
    }
    let n = p - 1;
    let mut nodes = vec![0.0; p];
    let mut weights = vec![0.0; p];
    nodes[0] = -1.0;
    nodes[n] = 1.0;

    for i in 1..n {
        // Chebyshev-Lobatto points bracket and approximate the roots of P'_n.
        let angle = |s: f64| -(std::f64::consts::PI * s / n as f64).cos();
        let x = newton_with_bisection(
            |x| {
                let (_, dp) = legendre_with_deriv(n, x);
                (dp, legendre_second_deriv(n, x))
            },
            angle(i as f64),
            angle(i as f64 - 0.5),
            angle(i as f64 + 0.5),
        )?;
        nodes[i] = x;
    }
    let scale = 2.0 / (p as f64 * n as f64);
    for i in 0..p {
        let (pn, _) = legendre_with_deriv(n, nodes[i]);
        weights[i] = scale / (pn * pn);
    }
    let mut rule = QuadRule { nodes, weights };
    symmetrize(&mut rule);
    rule.nodes[0] = -1.0;
    rule.nodes[n] = 1.0;
    Ok(rule)
}

fn check_distinct(nodes: &[f64]) -> Result<()> {
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if nodes[i] == nodes[j] {
                return Err(Error::InvalidArgument(format!(
                    "duplicate interpolation node {} at indices {i}, {j}",
                    nodes[i]
                )));
            }
        }
    }
    Ok(())
}

/// Value of the `i`-th Lagrange basis polynomial on `nodes` at `t`.
///
/// Evaluation at a node returns exactly `1.0` or `0.0`: every factor of the
/// product is either exactly one or contains an exactly zero difference.
pub fn lagrange_basis(nodes: &[f64], i: usize, t: f64) -> Result<f64> {
    if i >= nodes.len() {
        return Err(Error::InvalidArgument(format!(
            "basis index {i} out of range for {} nodes",
            nodes.len()
        )));
    }
    check_distinct(nodes)?;
    Ok(lagrange_value(nodes, i, t))
}

/// Derivative of the `i`-th Lagrange basis polynomial at `t`.
pub fn lagrange_basis_deriv(nodes: &[f64], i: usize, t: f64) -> Result<f64> {
    if i >= nodes.len() {
        return Err(Error::InvalidArgument(format!(
            "basis index {i} out of range for {} nodes",
            nodes.len()
        )));
    }
    check_distinct(nodes)?;
    Ok(lagrange_deriv(nodes, i, t))
}

/// Unchecked product-form Lagrange value (callers guarantee distinct nodes).
pub(crate) fn lagrange_value(nodes: &[f64], i: usize, t: f64) -> f64 {
    let mut prod = 1.0;
    for (j, &xj) in nodes.iter().enumerate() {
        if j != i {
            prod *= (t - xj) / (nodes[i] - xj);
        }
    }
    prod
}

/// Unchecked Lagrange derivative: sum over the product rule.
pub(crate) fn lagrange_deriv(nodes: &[f64], i: usize, t: f64) -> f64 {
    let mut sum = 0.0;
    for (k, &xk) in nodes.iter().enumerate() {
        if k == i {
            continue;
        }
        let mut prod = 1.0 / (nodes[i] - xk);
        for (j, &xj) in nodes.iter().enumerate() {
            if j != i && j != k {
                prod *= (t - xj) / (nodes[i] - xj);
            }
        }
        sum += prod;
    }
    sum
}

/// The two-level time mesh: uniform outer intervals, Gauss-Lobatto subnodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    /// Final time `T`.
    pub t_final: f64,
    /// Outer interval boundaries `t_0 = 0 < t_1 < ... < t_N = T`.
    pub outer: Vec<f64>,
    /// `subnodes[n]` holds the `M + 1` collocation points of interval `n`;
    /// `subnodes[n][0] == outer[n]` and `subnodes[n][M] == outer[n+1]` bitwise.
    pub subnodes: Vec<Vec<f64>>,
    /// `lengths[n][m] = subnodes[n][m+1] - subnodes[n][m]`.
    pub lengths: Vec<Vec<f64>>,
    /// Flattened subinterval boundaries, ascending; `flat[n*M + m] == subnodes[n][m]`.
    flat: Vec<f64>,
}

/// Builds the mesh for `[0, t_final]` with `n` outer intervals and `m`
/// subintervals (i.e. `m + 1` Gauss-Lobatto subnodes) per interval.
///
/// Interval endpoints are assigned exactly rather than through the affine
/// map, so shared boundaries agree bitwise between neighbors.
pub fn build_mesh(t_final: f64, n: usize, m: usize) -> Result<TimeMesh> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "final time must be positive and finite, got {t_final}"
        )));
    }
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "mesh needs at least one interval and one subinterval (N = {n}, M = {m})"
        )));
    }
    let rule = gauss_lobatto(m + 1)?;
    let outer: Vec<f64> = (0..=n).map(|i| t_final * i as f64 / n as f64).collect();

    let mut subnodes = Vec::with_capacity(n);
    let mut lengths = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (outer[i], outer[i + 1]);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let nodes: Vec<f64> = (0..=m)
            .map(|j| {
                if j == 0 {
                    a
                } else if j == m {
                    b
                } else {
                    mid + half * rule.nodes[j]
                }
            })
            .collect();
        let lens: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if lens.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::NumericalFailure(format!(
                "degenerate subinterval in outer interval {i}"
            )));
        }
        subnodes.push(nodes);
        lengths.push(lens);
    }

    let mut flat = Vec::with_capacity(n * m + 1);
    for nodes in &subnodes {
        flat.extend_from_slice(&nodes[..m]);
    }
    flat.push(outer[n]);

    Ok(TimeMesh {
        t_final,
        outer,
        subnodes,
        lengths,
        flat,
    })
}

impl TimeMesh {
    /// Number of outer intervals `N`.
    pub fn interval_count(&self) -> usize {
        self.outer.len() - 1
    }

    /// Number of subintervals `M` per outer interval.
    pub fn subinterval_count(&self) -> usize {
        self.subnodes[0].len() - 1
    }

    /// Width of outer interval `n`.
    pub fn interval_length(&self, n: usize) -> f64 {
        self.outer[n + 1] - self.outer[n]
    }

    /// Locates the subinterval containing `t`.
    ///
    /// Interior breakpoints are right-closed: a point sitting exactly on a
    /// boundary belongs to the subinterval that *ends* there, which gives
    /// left-limit semantics for functions that jump at interval boundaries.
    pub fn locate(&self, t: f64) -> Result<(usize, usize)> {
        if !(t >= 0.0 && t <= self.t_final) {
            return Err(Error::InvalidArgument(format!(
                "time {t} outside mesh domain [0, {}]",
                self.t_final
            )));
        }
        let m = self.subinterval_count();
        let below = self.flat.partition_point(|&x| x < t);
        let s = below.saturating_sub(1).min(self.flat.len() - 2);
        Ok((s / m, s % m))
    }

    /// Breakpoints of this mesh lying strictly inside `(a, b)`.
    pub fn breakpoints_within(&self, a: f64, b: f64) -> &[f64] {
        let lo = self.flat.partition_point(|&x| x <= a);
        let hi = self.flat.partition_point(|&x| x < b);
        &self.flat[lo.min(hi)..hi]
    }

    /// The time-reversed mesh: interval `n`, subnode `j` maps to
    /// `T - subnodes[N-1-n][M-j]`. Outer boundaries of the reversed mesh
    /// reproduce `0` and `T` exactly.
    pub(crate) fn reversed(&self) -> TimeMesh {
        let t = self.t_final;
        let n = self.interval_count();
        let m = self.subinterval_count();
        let outer: Vec<f64> = (0..=n).map(|i| t - self.outer[n - i]).collect();
        let subnodes: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..=m)
                    .map(|j| t - self.subnodes[n - 1 - i][m - j])
                    .collect()
            })
            .collect();
        let lengths: Vec<Vec<f64>> = subnodes
            .iter()
            .map(|nodes: &Vec<f64>| nodes.windows(2).map(|w| w[1] - w[0]).collect())
            .collect();
        let mut flat = Vec::with_capacity(n * m + 1);
        for nodes in &subnodes {
            flat.extend_from_slice(&nodes[..m]);
        }
        flat.push(outer[n]);
        TimeMesh {
            t_final: t,
            outer,
            subnodes,
            lengths,
            flat,
        }
    }
}
