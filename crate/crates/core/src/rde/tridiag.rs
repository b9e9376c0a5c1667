//! Constant-coefficient tridiagonal solves (Thomas algorithm).

/// Factorization of the `n × n` matrix with `diag` on the diagonal and `off`
/// on both off-diagonals.
#[derive(Debug, Clone)]
pub struct ConstTridiagonal {
    off: f64,
    /// Modified super-diagonal `c'_i`.
    upper: Vec<f64>,
    /// Reciprocal pivots.
    inv_pivot: Vec<f64>,
}

impl ConstTridiagonal {
    pub fn new(n: usize, diag: f64, off: f64) -> Self {
        let mut upper = Vec::with_capacity(n);
        let mut inv_pivot = Vec::with_capacity(n);
        let mut prev = 0.0;
        for _ in 0..n {
            let piv = diag - off * prev;
            let ip = 1.0 / piv;
            prev = off * ip;
            upper.push(prev);
            inv_pivot.push(ip);
        }
        Self { off, upper, inv_pivot }
    }

    pub fn len(&self) -> usize {
        self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        if n == 0 {
            return;
        }
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.off * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_against_matvec() {
        let n = 50;
        let (d, e) = (3.0, -1.2);
        let x: Vec<f64> = (0..n).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = d * x[i];
                if i > 0 {
                    s += e * x[i - 1];
                }
                if i + 1 < n {
                    s += e * x[i + 1];
                }
                s
            })
            .collect();
        ConstTridiagonal::new(n, d, e).solve_in_place(&mut b);
        for (a, b) in x.iter().zip(&b) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
