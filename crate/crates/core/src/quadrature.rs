//! Gauss–Legendre and Gauss–Lobatto–Legendre rules on `[-1, 1]`, and
//! Lagrange interpolation on arbitrary nodes.

use std::f64::consts::PI;

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // P_n'(±1) = (±1)^{n+1} n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[n - 1 - i] = z;
        x[i] = -z;
        w[n - 1 - i] = wi;
        w[i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Lobatto–Legendre rule with `n + 1` points (exact to degree `2n − 1`),
/// nodes ascending and including `±1`.
pub fn gauss_lobatto(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let nf = n as f64;
    let mut x = vec![0.0; n + 1];
    let mut w = vec![0.0; n + 1];
    x[0] = -1.0;
    x[n] = 1.0;
    // interior nodes: roots of P_n'
    for i in 1..n {
        let mut z = -(PI * i as f64 / nf).cos();
        for _ in 0..100 {
            // Newton on (1 − x²) P_n'(x), whose derivative is −n(n+1) P_n(x)
            let (p, dp) = legendre_with_derivative(n, z);
            let f = (1.0 - z * z) * dp;
            let df = -nf * (nf + 1.0) * p;
            let dz = f / df;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
    }
    for i in 0..=n {
        let (p, _) = legendre_with_derivative(n, x[i]);
        w[i] = 2.0 / (nf * (nf + 1.0) * p * p);
    }
    (x, w)
}

/// Lagrange basis on fixed nodes, evaluated by the barycentric formula.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(nodes: &[f64]) -> Self {
        let n = nodes.len();
        let bary = (0..n)
            .map(|j| {
                1.0 / (0..n)
                    .filter(|&k| k != j)
                    .map(|k| nodes[j] - nodes[k])
                    .product::<f64>()
            })
            .collect();
        LagrangeBasis {
            nodes: nodes.to_vec(),
            bary,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Values `ℓ_j(x)` of every basis function.
    pub fn values(&self, x: f64) -> Vec<f64> {
        if let Some(j) = self.nodes.iter().position(|&xj| xj == x) {
            let mut v = vec![0.0; self.len()];
            v[j] = 1.0;
            return v;
        }
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.bary)
            .map(|(xj, bj)| bj / (x - xj))
            .collect();
        let s: f64 = terms.iter().sum();
        terms.into_iter().map(|t| t / s).collect()
    }

    /// Derivatives `ℓ_j'(x)`.
    pub fn derivatives(&self, x: f64) -> Vec<f64> {
        let n = self.len();
        if let Some(i) = self.nodes.iter().position(|&xj| xj == x) {
            // row i of the differentiation matrix
            let mut d = vec![0.0; n];
            let mut diag = 0.0;
            for j in 0..n {
                if j != i {
                    d[j] = self.bary[j] / self.bary[i] / (self.nodes[i] - self.nodes[j]);
                    diag -= d[j];
                }
            }
            d[i] = diag;
            return d;
        }
        let l = self.values(x);
        // ℓ_j' = ℓ_j Σ_{k≠j} 1/(x − x_k); stays accurate next to a node
        let inv: Vec<f64> = self.nodes.iter().map(|xj| 1.0 / (x - xj)).collect();
        (0..n)
            .map(|j| {
                let s: f64 = (0..n).filter(|&k| k != j).map(|k| inv[k]).sum();
                l[j] * s
            })
            .collect()
    }
}
