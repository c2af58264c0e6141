//! Exact linear systems over Q by reduced row echelon form.

use num_traits::Zero;

use super::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum LinearSolution {
    /// A particular solution with every free variable set to zero.
    Solved { x: Vec<Scalar>, free: Vec<usize> },
    /// Index of an equation reduced to `0 = c` with `c ≠ 0`.
    Inconsistent { equation: usize },
}

impl LinearSolution {
    pub fn unique(&self) -> Option<&[Scalar]> {
        match self {
            LinearSolution::Solved { x, free } if free.is_empty() => Some(x),
            _ => None,
        }
    }
}

/// Solve `a x = b` for `ncols` unknowns. Rows are sparse `(column, coefficient)` lists.
pub fn solve(rows: &[Vec<(usize, Scalar)>], b: &[Scalar], ncols: usize) -> LinearSolution {
    assert_eq!(rows.len(), b.len());
    let mut m: Vec<(Vec<Scalar>, Scalar, usize)> = rows
        .iter()
        .zip(b)
        .enumerate()
        .map(|(k, (r, rhs))| {
            let mut dense = vec![Scalar::zero(); ncols];
            for (c, v) in r {
                dense[*c] += v;
            }
            (dense, rhs.clone(), k)
        })
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        let Some(p) = (row..m.len()).find(|&r| !m[r].0[col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row].0[col].recip();
        for v in m[row].0.iter_mut() {
            *v *= &inv;
        }
        m[row].1 *= &inv;
        let (prow, prhs) = (m[row].0.clone(), m[row].1.clone());
        for (r, entry) in m.iter_mut().enumerate() {
            if r == row || entry.0[col].is_zero() {
                continue;
            }
            let f = entry.0[col].clone();
            for (v, pv) in entry.0.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            entry.1 -= &f * &prhs;
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    if let Some(bad) = m[row..].iter().find(|r| !r.1.is_zero()) {
        return LinearSolution::Inconsistent { equation: bad.2 };
    }
    let mut x = vec![Scalar::zero(); ncols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = m[r].1.clone();
    }
    let free = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    LinearSolution::Solved { x, free }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ratio;

    #[test]
    fn unique_solution() {
        // x + y = 3, x - y = 1
        let rows = vec![
            vec![(0, ratio(1, 1)), (1, ratio(1, 1))],
            vec![(0, ratio(1, 1)), (1, ratio(-1, 1))],
        ];
        let s = solve(&rows, &[ratio(3, 1), ratio(1, 1)], 2);
        assert_eq!(s.unique().unwrap(), &[ratio(2, 1), ratio(1, 1)]);
    }

    #[test]
    fn inconsistent_system() {
        let rows = vec![vec![(0, ratio(2, 1))], vec![(0, ratio(1, 1))]];
        let s = solve(&rows, &[ratio(2, 1), ratio(3, 1)], 1);
        assert_eq!(s, LinearSolution::Inconsistent { equation: 1 });
    }

    #[test]
    fn underdetermined_reports_free_columns() {
        let rows = vec![vec![(0, ratio(1, 1)), (2, ratio(1, 1))]];
        match solve(&rows, &[ratio(5, 1)], 3) {
            LinearSolution::Solved { x, free } => {
                assert_eq!(free, vec![1, 2]);
                assert_eq!(x[0], ratio(5, 1));
            }
            other => panic!("{other:?}"),
        }
    }
}
