use crate::OracleError;

/// Dense `ρ₁ I + ρ₂ D₀ᵀ D₀` for the cyclic difference matrix `D₀`, assembled
/// entry by entry from `D₀`.
pub fn difference_system_matrix(n: usize, rho1: f64, rho2: f64) -> Vec<Vec<f64>> {
    let mut d0 = vec![vec![0.0; n]; n];
    for (i, row) in d0.iter_mut().enumerate() {
        row[i] += 1.0;
        row[(i + 1) % n] -= 1.0;
    }
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let dtd: f64 = (0..n).map(|r| d0[r][i] * d0[r][j]).sum();
            a[i][j] = rho2 * dtd + if i == j { rho1 } else { 0.0 };
        }
    }
    a
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, OracleError> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| row.iter().copied().chain(std::iter::once(*bi)).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("non-empty range");
        if m[pivot][col] == 0.0 {
            return Err(OracleError::Singular(col));
        }
        m.swap(col, pivot);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..=n {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = dense_solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        assert!(dense_solve(&[vec![0.0]], &[1.0]).is_err());
    }

    #[test]
    fn two_slot_system() {
        let a = difference_system_matrix(2, 0.5, 1.0);
        assert_eq!(a, vec![vec![2.5, -2.0], vec![-2.0, 2.5]]);
    }
}
