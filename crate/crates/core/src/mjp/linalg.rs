//! Dense solves for the tiny `d_y × d_y` systems of the conditioned hazard.

/// Smallest acceptable absolute pivot.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

/// Solves `a · u = b` in place (`a` row-major `d × d`, overwritten; `b` becomes `u`)
/// by Gaussian elimination with partial pivoting. Returns the offending pivot
/// when the matrix is numerically singular.
pub fn solve_in_place(a: &mut [f64], b: &mut [f64], d: usize) -> Result<(), f64> {
    debug_assert_eq!(a.len(), d * d);
    debug_assert_eq!(b.len(), d);
    for col in 0..d {
        let mut piv = col;
        for row in col + 1..d {
            if a[row * d + col].abs() > a[piv * d + col].abs() {
                piv = row;
            }
        }
        let pivot = a[piv * d + col];
        if !(pivot.abs() >= PIVOT_THRESHOLD) {
            return Err(pivot);
        }
        if piv != col {
            for k in 0..d {
                a.swap(piv * d + k, col * d + k);
            }
            b.swap(piv, col);
        }
        for row in col + 1..d {
            let f = a[row * d + col] / pivot;
            if f != 0.0 {
                for k in col..d {
                    a[row * d + k] -= f * a[col * d + k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    for col in (0..d).rev() {
        let mut acc = b[col];
        for k in col + 1..d {
            acc -= a[col * d + k] * b[k];
        }
        b[col] = acc / a[col * d + col];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_with_pivoting() {
        let mut a = vec![0.0, 2.0, 3.0, 1.0];
        let mut b = vec![4.0, 5.0];
        solve_in_place(&mut a, &mut b, 2).unwrap();
        // 2y = 4, 3x + y = 5
        assert!((b[0] - 1.0).abs() < 1e-15 && (b[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn flags_singular() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 1.0];
        assert!(solve_in_place(&mut a, &mut b, 2).is_err());
        let mut z = vec![0.0];
        assert!(solve_in_place(&mut z, &mut [1.0], 1).is_err());
    }
}
