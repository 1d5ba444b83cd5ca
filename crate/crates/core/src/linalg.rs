//! Dense and Krylov linear solves shared by the Newton loops.

use nalgebra::{DMatrix, DVector};

/// LU solve with partial pivoting; `None` when the factorization breaks down.
pub(crate) fn lu_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let lu = a.lu();
    lu.solve(b)
}

/// Plain GMRES without restarts. `matvec` applies the (preconditioned)
/// operator; returns the solution once the relative residual drops under
/// `tol` or the Krylov space is exhausted.
pub(crate) fn gmres(
    matvec: impl Fn(&DVector<f64>) -> DVector<f64>,
    b: &DVector<f64>,
    tol: f64,
    max_dim: usize,
) -> Option<DVector<f64>> {
    let n = b.len();
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Some(DVector::zeros(n));
    }
    let mut basis: Vec<DVector<f64>> = vec![b / b_norm];
    let m = max_dim.min(n);
    let mut h = DMatrix::<f64>::zeros(m + 1, m);
    // Givens rotations keep the least-squares residual explicit
    let mut cs = vec![0.0_f64; m];
    let mut sn = vec![0.0_f64; m];
    let mut beta = DVector::<f64>::zeros(m + 1);
    beta[0] = b_norm;

    let mut k_used = 0;
    for k in 0..m {
        let mut w = matvec(&basis[k]);
        for (j, vj) in basis.iter().enumerate() {
            let hjk = w.dot(vj);
            h[(j, k)] = hjk;
            w.axpy(-hjk, vj, 1.0);
        }
        let hk1 = w.norm();
        h[(k + 1, k)] = hk1;

        for j in 0..k {
            let tmp = cs[j] * h[(j, k)] + sn[j] * h[(j + 1, k)];
            h[(j + 1, k)] = -sn[j] * h[(j, k)] + cs[j] * h[(j + 1, k)];
            h[(j, k)] = tmp;
        }
        let denom = (h[(k, k)] * h[(k, k)] + hk1 * hk1).sqrt();
        if denom == 0.0 {
            k_used = k;
            break;
        }
        cs[k] = h[(k, k)] / denom;
        sn[k] = hk1 / denom;
        h[(k, k)] = denom;
        h[(k + 1, k)] = 0.0;
        beta[k + 1] = -sn[k] * beta[k];
        beta[k] *= cs[k];
        k_used = k + 1;

        let rel = beta[k + 1].abs() / b_norm;
        if rel < tol {
            break;
        }
        if hk1 == 0.0 {
            break;
        }
        basis.push(w / hk1);
    }
    if k_used == 0 {
        return None;
    }
    // back substitution on the k_used × k_used triangle
    let mut y = DVector::<f64>::zeros(k_used);
    for i in (0..k_used).rev() {
        let mut s = beta[i];
        for j in i + 1..k_used {
            s -= h[(i, j)] * y[j];
        }
        if h[(i, i)] == 0.0 {
            return None;
        }
        y[i] = s / h[(i, i)];
    }
    let mut x = DVector::<f64>::zeros(n);
    for (j, vj) in basis.iter().take(k_used).enumerate() {
        x.axpy(y[j], vj, 1.0);
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gmres_solves_a_small_spd_system() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let b = DVector::from_column_slice(&[1.0, -2.0, 0.5]);
        let x = gmres(|v| &a * v, &b, 1e-13, 10).unwrap();
        assert!((&a * &x - &b).norm() < 1e-11);
        let xd = lu_solve(a.clone(), &b).unwrap();
        assert!((x - xd).norm() < 1e-10);
    }
}
