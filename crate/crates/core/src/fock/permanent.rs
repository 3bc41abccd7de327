use nalgebra::DMatrix;
use num_complex::Complex64;

use super::FockError;

/// Matrix permanent by Ryser's formula, enumerating column subsets in Gray-code
/// order so each step updates the row sums with a single column.
///
/// Runs in O(2^k k) for a k×k matrix. The permanent of the empty matrix is 1.
pub fn permanent(m: &DMatrix<Complex64>) -> Result<Complex64, FockError> {
    if m.nrows() != m.ncols() {
        return Err(FockError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(ryser_gray(m))
}

pub(crate) fn ryser_gray(m: &DMatrix<Complex64>) -> Complex64 {
    let n = m.nrows();
    match n {
        0 => return Complex64::new(1.0, 0.0),
        1 => return m[(0, 0)],
        2 => return m[(0, 0)] * m[(1, 1)] + m[(0, 1)] * m[(1, 0)],
        _ => {}
    }
    assert!(n < 64, "permanent of a {n}x{n} matrix is out of reach");

    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut in_subset = vec![false; n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut subset_size = 0usize;

    for k in 1u64..(1u64 << n) {
        let col = k.trailing_zeros() as usize;
        if in_subset[col] {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= m[(i, col)];
            }
            subset_size -= 1;
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += m[(i, col)];
            }
            subset_size += 1;
        }
        in_subset[col] = !in_subset[col];

        let prod = row_sums
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s);
        if (n - subset_size) % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

#[cfg(test)]
pub(crate) mod oracle {
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    /// Leibniz-style expansion over all permutations, O(k!·k).
    pub fn leibniz_permanent(m: &DMatrix<Complex64>) -> Complex64 {
        let n = m.nrows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut total = Complex64::new(0.0, 0.0);
        heap_permutations(n, &mut perm, &mut |p| {
            total += p
                .iter()
                .enumerate()
                .fold(Complex64::new(1.0, 0.0), |acc, (i, &j)| acc * m[(i, j)]);
        });
        if n == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            total
        }
    }

    fn heap_permutations(k: usize, a: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if k <= 1 {
            visit(a);
            return;
        }
        heap_permutations(k - 1, a, visit);
        for i in 0..k - 1 {
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap_permutations(k - 1, a, visit);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::leibniz_permanent;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(k, k, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn empty_matrix_has_unit_permanent() {
        let m = DMatrix::<Complex64>::zeros(0, 0);
        assert_eq!(permanent(&m).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn identity() {
        let m = DMatrix::<Complex64>::identity(3, 3);
        assert!((permanent(&m).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_by_two_definition() {
        let (a, b, cc, d) = (c(1.0, 2.0), c(-0.5, 0.3), c(0.1, -1.0), c(2.0, 0.0));
        let m = DMatrix::from_row_slice(2, 2, &[a, b, cc, d]);
        assert!((permanent(&m).unwrap() - (a * d + b * cc)).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_square() {
        let m = DMatrix::<Complex64>::zeros(2, 3);
        assert!(matches!(
            permanent(&m),
            Err(FockError::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn all_ones_gives_factorial() {
        for k in 0..7 {
            let m = DMatrix::from_element(k, k, c(1.0, 0.0));
            let fact: f64 = (1..=k).map(|v| v as f64).product();
            assert!((permanent(&m).unwrap().re - fact).abs() < 1e-9);
        }
    }

    #[test]
    fn random_5x5_matches_leibniz() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 5);
        let fast = permanent(&m).unwrap();
        let slow = leibniz_permanent(&m);
        assert!((fast - slow).norm() <= 1e-10 * slow.norm().max(1.0));
    }

    #[test]
    fn hundred_random_fixtures_up_to_6() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
        for trial in 0..100 {
            let k = 1 + trial % 6;
            let m = random_matrix(&mut rng, k);
            let fast = permanent(&m).unwrap();
            let slow = leibniz_permanent(&m);
            let rel = (fast - slow).norm() / slow.norm().max(1e-300);
            assert!(rel <= 1e-10, "k={k} rel={rel}");
        }
    }
}
