//! Occupation-number bases with a total-number constraint.

use std::fmt;

/// Constraint on the total occupation `Σ n_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    AtMost(usize),
    Exactly(usize),
}

/// Pascal triangle large enough for all rank computations of one basis.
#[derive(Clone, Debug)]
struct Binomials {
    size: usize,
    table: Vec<usize>,
}

impl Binomials {
    fn new(max_n: usize) -> Self {
        let size = max_n + 1;
        let mut table = vec![0usize; size * size];
        for n in 0..size {
            table[n * size] = 1;
            for k in 1..=n {
                let a = table[(n - 1) * size + k - 1];
                let b = if k <= n - 1 { table[(n - 1) * size + k] } else { 0 };
                table[n * size + k] = a.saturating_add(b);
            }
        }
        Binomials { size, table }
    }

    fn get(&self, n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        debug_assert!(n < self.size);
        self.table[n * self.size + k]
    }

    /// Number of tuples of length `m` with sum at most `r`.
    fn at_most(&self, m: usize, r: usize) -> usize {
        self.get(r + m, m)
    }

    /// Number of tuples of length `m` with sum exactly `r`.
    fn exactly(&self, m: usize, r: usize) -> usize {
        if m == 0 {
            usize::from(r == 0)
        } else {
            self.get(r + m - 1, m - 1)
        }
    }
}

/// Enumerated occupation tuples in lexicographic order (first mode most significant).
#[derive(Clone)]
pub struct OccupationBasis {
    modes: usize,
    constraint: Constraint,
    states: Vec<u16>,
    binom: Binomials,
}

impl fmt::Debug for OccupationBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OccupationBasis")
            .field("modes", &self.modes)
            .field("constraint", &self.constraint)
            .field("dim", &self.dim())
            .finish()
    }
}

impl PartialEq for OccupationBasis {
    fn eq(&self, other: &Self) -> bool {
        self.modes == other.modes && self.constraint == other.constraint
    }
}

impl OccupationBasis {
    /// All tuples with `Σ n_i ≤ n_max`; dimension `C(n_max + modes, modes)`.
    pub fn at_most(modes: usize, n_max: usize) -> Self {
        Self::build(modes, Constraint::AtMost(n_max))
    }

    /// All tuples with `Σ n_i = total`; dimension `C(total + modes - 1, total)`.
    pub fn exactly(modes: usize, total: usize) -> Self {
        Self::build(modes, Constraint::Exactly(total))
    }

    fn build(modes: usize, constraint: Constraint) -> Self {
        let cutoff = match constraint {
            Constraint::AtMost(n) | Constraint::Exactly(n) => n,
        };
        let binom = Binomials::new(modes + cutoff + 1);
        let dim = match constraint {
            Constraint::AtMost(n) => binom.at_most(modes, n),
            Constraint::Exactly(n) => binom.exactly(modes, n),
        };
        let mut states = Vec::with_capacity(dim * modes);
        let mut current = vec![0u16; modes];
        enumerate(&mut current, 0, cutoff, constraint, &mut states);
        debug_assert_eq!(states.len(), dim * modes);
        OccupationBasis { modes, constraint, states, binom }
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    /// Total-number cutoff (or fixed total).
    pub fn cutoff(&self) -> usize {
        match self.constraint {
            Constraint::AtMost(n) | Constraint::Exactly(n) => n,
        }
    }

    pub fn dim(&self) -> usize {
        if self.modes == 0 {
            return 1;
        }
        self.states.len() / self.modes
    }

    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i * self.modes..(i + 1) * self.modes]
    }

    pub fn total(&self, i: usize) -> usize {
        self.state(i).iter().map(|&n| n as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u16]> {
        (0..self.dim()).map(move |i| self.state(i))
    }

    /// Position of `occ` in the enumeration, if it belongs to the basis.
    pub fn index_of(&self, occ: &[u16]) -> Option<usize> {
        if occ.len() != self.modes {
            return None;
        }
        let total: usize = occ.iter().map(|&n| n as usize).sum();
        match self.constraint {
            Constraint::AtMost(n) => (total <= n).then(|| self.rank_at_most(occ, n)),
            Constraint::Exactly(n) => (total == n).then(|| self.rank_exactly(occ, n)),
        }
    }

    /// Lexicographic rank of `occ` among tuples of the same length with sum `≤ budget`.
    ///
    /// `budget` may be smaller than the basis cutoff, which is how product bases
    /// with a joint cutoff index their second factor.
    pub fn rank_at_most(&self, occ: &[u16], budget: usize) -> usize {
        let m = occ.len();
        let mut rank = 0;
        let mut rem = budget;
        for (i, &n) in occ.iter().enumerate() {
            for v in 0..n as usize {
                rank += self.binom.at_most(m - i - 1, rem - v);
            }
            rem -= n as usize;
        }
        rank
    }

    /// Number of tuples of `modes` entries with sum `≤ budget`.
    pub fn count_at_most(&self, budget: usize) -> usize {
        self.binom.at_most(self.modes, budget)
    }

    fn rank_exactly(&self, occ: &[u16], total: usize) -> usize {
        let m = occ.len();
        let mut rank = 0;
        let mut rem = total;
        for (i, &n) in occ.iter().enumerate().take(m.saturating_sub(1)) {
            for v in 0..n as usize {
                rank += self.binom.exactly(m - i - 1, rem - v);
            }
            rem -= n as usize;
        }
        rank
    }
}

fn enumerate(current: &mut [u16], pos: usize, rem: usize, constraint: Constraint, out: &mut Vec<u16>) {
    let m = current.len();
    if m == 0 {
        return;
    }
    if pos == m - 1 {
        match constraint {
            Constraint::AtMost(_) => {
                for v in 0..=rem {
                    current[pos] = v as u16;
                    out.extend_from_slice(current);
                }
            }
            Constraint::Exactly(_) => {
                current[pos] = rem as u16;
                out.extend_from_slice(current);
            }
        }
        current[pos] = 0;
        return;
    }
    for v in 0..=rem {
        current[pos] = v as u16;
        enumerate(current, pos + 1, rem - v, constraint, out);
    }
    current[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn dimensions() {
        for modes in 1..5 {
            for n in 0..6 {
                assert_eq!(OccupationBasis::at_most(modes, n).dim(), binom(n + modes, modes));
                assert_eq!(OccupationBasis::exactly(modes, n).dim(), binom(n + modes - 1, n));
            }
        }
    }

    #[test]
    fn ordering_is_lexicographic_and_ranks_match() {
        for b in [OccupationBasis::at_most(3, 4), OccupationBasis::exactly(4, 3)] {
            for i in 0..b.dim() {
                assert_eq!(b.index_of(b.state(i)), Some(i));
                if i > 0 {
                    assert!(b.state(i - 1) < b.state(i));
                }
            }
        }
        let b = OccupationBasis::at_most(2, 2);
        let all: Vec<Vec<u16>> = b.iter().map(|s| s.to_vec()).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![2, 0]]);
    }

    #[test]
    fn out_of_basis_lookups() {
        let b = OccupationBasis::at_most(2, 2);
        assert_eq!(b.index_of(&[2, 1]), None);
        let e = OccupationBasis::exactly(3, 2);
        assert_eq!(e.index_of(&[1, 0, 0]), None);
        assert_eq!(e.index_of(&[1, 0]), None);
    }

    #[test]
    fn reduced_budget_rank_counts_prefix() {
        let b = OccupationBasis::at_most(3, 5);
        let small = OccupationBasis::at_most(3, 2);
        for (i, s) in small.iter().enumerate() {
            assert_eq!(b.rank_at_most(s, 2), i);
        }
        assert_eq!(b.count_at_most(2), small.dim());
    }
}
