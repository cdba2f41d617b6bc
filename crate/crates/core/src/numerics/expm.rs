//! Dense matrix exponential, used as a test oracle for uniformization.

use super::NumericsError;

pub const DENSE_LIMIT: usize = 200;

type Dense = Vec<Vec<f64>>;

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn norm_inf(a: &Dense) -> f64 {
    a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `e^{Qt}` by scaling and squaring with a Taylor series.
pub fn expm_dense(q: &[Vec<f64>], t: f64) -> Result<Dense, NumericsError> {
    let n = q.len();
    if n > DENSE_LIMIT {
        return Err(NumericsError::TooLarge(n));
    }
    if q.iter().any(|r| r.len() != n) {
        return Err(NumericsError::InvalidArgument("matrix is not square".into()));
    }
    let mut a: Dense = q.iter().map(|r| r.iter().map(|x| x * t).collect()).collect();
    let norm = norm_inf(&a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = 2f64.powi(-squarings);
    a.iter_mut().flatten().for_each(|x| *x *= scale);

    let mut result: Dense = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut term = result.clone();
    for k in 1..=40 {
        term = matmul(&term, &a);
        let inv = 1.0 / k as f64;
        term.iter_mut().flatten().for_each(|x| *x *= inv);
        for (r, tr) in result.iter_mut().zip(&term) {
            for (x, y) in r.iter_mut().zip(tr) {
                *x += y;
            }
        }
        if norm_inf(&term) < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_generator_gives_identity() {
        let e = expm_dense(&[vec![0.0, 0.0], vec![0.0, 0.0]], 3.0).unwrap();
        assert_eq!(e, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn scalar_case() {
        let e = expm_dense(&[vec![-2.0]], 1.5).unwrap();
        assert!((e[0][0] - (-3.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn random_generator_rows_are_stochastic() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 10;
        let mut q = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random_bool(0.4) {
                    q[i][j] = rng.random_range(0.1..10.0);
                }
            }
            q[i][i] = -q[i].iter().sum::<f64>();
        }
        let e = expm_dense(&q, 2.0).unwrap();
        for row in &e {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            assert!(row.iter().all(|&x| x > -1e-14));
        }
    }

    #[test]
    fn size_cap() {
        let q = vec![vec![0.0; DENSE_LIMIT + 1]; DENSE_LIMIT + 1];
        assert_eq!(expm_dense(&q, 1.0), Err(NumericsError::TooLarge(DENSE_LIMIT + 1)));
    }
}
