use std::fmt;
use std::ops::Index;

/// Exponent (or Chebyshev degree) vector `α ∈ ℕ₀ⁿ`.
///
/// Ordering is lexicographic on the entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// `k·e_i` in `n` variables.
    pub fn unit(n: usize, i: usize, k: u32) -> Self {
        let mut v = vec![0; n];
        v[i] = k;
        MultiIndex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// `|α|`
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `ω(α)`, the number of nonzero entries.
    pub fn support_count(&self) -> usize {
        self.0.iter().filter(|&&a| a != 0).count()
    }

    pub fn degree_in(&self, vars: &[usize]) -> u32 {
        vars.iter().map(|&i| self.0[i]).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// All `α ∈ ℕ₀ⁿ` with `|α| ≤ max_degree`, graded then lexicographic.
    pub fn up_to_degree(n: usize, max_degree: u32) -> MultiIndexIter {
        MultiIndexIter::new(n, max_degree)
    }
}

impl Index<usize> for MultiIndex {
    type Output = u32;

    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Iterator over multi-indices of bounded total degree.
///
/// Degrees are visited in increasing order; within one degree the indices
/// come out in descending lexicographic order, e.g. `(1,0)` before `(0,1)`.
#[derive(Debug, Clone)]
pub struct MultiIndexIter {
    n: usize,
    max_degree: u32,
    current: Option<Vec<u32>>,
}

impl MultiIndexIter {
    fn new(n: usize, max_degree: u32) -> Self {
        MultiIndexIter {
            n,
            max_degree,
            current: Some(vec![0; n]),
        }
    }
}

impl Iterator for MultiIndexIter {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let cur = self.current.take()?;
        let out = MultiIndex(cur.clone());
        self.current = advance(cur, self.n, self.max_degree);
        Some(out)
    }
}

/// Next index in graded reverse-lex order, or `None` past the last one.
fn advance(mut a: Vec<u32>, n: usize, max_degree: u32) -> Option<Vec<u32>> {
    if n == 0 {
        return None;
    }
    let deg: u32 = a.iter().sum();
    // Find the rightmost position (other than the last) holding mass and
    // move one unit right, collecting the tail onto that next slot.
    let last = n - 1;
    let tail = a[last];
    a[last] = 0;
    if let Some(i) = (0..last).rev().find(|&i| a[i] > 0) {
        a[i] -= 1;
        a[i + 1] = tail + 1;
        return Some(a);
    }
    if deg == max_degree {
        return None;
    }
    let mut b = vec![0; n];
    b[0] = deg + 1;
    Some(b)
}
