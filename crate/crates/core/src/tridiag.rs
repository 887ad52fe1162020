//! Thomas algorithm for tridiagonal systems.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TridiagError {
    #[error("band lengths do not match: lower {lower}, diag {diag}, upper {upper}, rhs {rhs}")]
    Shape {
        lower: usize,
        diag: usize,
        upper: usize,
        rhs: usize,
    },
    #[error("zero pivot at row {0}")]
    ZeroPivot(usize),
}

/// Tridiagonal matrix stored by bands.
///
/// `lower[i]` multiplies `x[i-1]` in row `i` (so `lower[0]` is unused) and
/// `upper[i]` multiplies `x[i+1]` (so `upper[m-1]` is unused).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Strict row diagonal dominance.
    pub fn is_diagonally_dominant(&self) -> bool {
        let m = self.len();
        (0..m).all(|i| {
            let off = if i > 0 { self.lower[i].abs() } else { 0.0 }
                + if i + 1 < m { self.upper[i].abs() } else { 0.0 };
            self.diag[i].abs() > off
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < m {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Solves `A x = rhs` by forward elimination and back substitution.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, TridiagError> {
        let m = self.len();
        if self.lower.len() != m || self.upper.len() != m || rhs.len() != m {
            return Err(TridiagError::Shape {
                lower: self.lower.len(),
                diag: m,
                upper: self.upper.len(),
                rhs: rhs.len(),
            });
        }
        if m == 0 {
            return Ok(Vec::new());
        }
        let mut c = vec![0.0; m];
        let mut x = vec![0.0; m];
        let mut pivot = self.diag[0];
        if pivot == 0.0 {
            return Err(TridiagError::ZeroPivot(0));
        }
        c[0] = self.upper[0] / pivot;
        x[0] = rhs[0] / pivot;
        for i in 1..m {
            pivot = self.diag[i] - self.lower[i] * c[i - 1];
            if pivot == 0.0 {
                return Err(TridiagError::ZeroPivot(i));
            }
            c[i] = if i + 1 < m { self.upper[i] / pivot } else { 0.0 };
            x[i] = (rhs[i] - self.lower[i] * x[i - 1]) / pivot;
        }
        for i in (0..m - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }
}
