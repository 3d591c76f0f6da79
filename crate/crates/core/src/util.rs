//! Small numeric helpers: deterministic sampling, tiny linear solves,
//! clustering of near-degenerate values.

/// SplitMix64: deterministic, seedable, good enough for sampling test
/// points. Sampling order is fixed so logs are bit-reproducible.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// Solve the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Intended for the small (<= 8 unknowns) systems that appear in
/// shooting Jacobians and least-squares normal equations.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap()
        })?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = rhs[col];
        for k in (col + 1)..n {
            s -= m[col][k] * x[k];
        }
        x[col] = s / m[col][col];
    }
    Some(x)
}

/// Linear least squares `min ||A x - b||` via normal equations with an
/// optional per-row weight. Columns of `a` are the basis functions.
pub fn least_squares(a: &[Vec<f64>], b: &[f64], weights: Option<&[f64]>) -> Option<Vec<f64>> {
    let rows = b.len();
    if rows == 0 {
        return None;
    }
    let cols = a[0].len();
    let w = |i: usize| weights.map_or(1.0, |ws| ws[i]);
    let mut ata = vec![vec![0.0; cols]; cols];
    let mut atb = vec![0.0; cols];
    for i in 0..rows {
        let wi = w(i);
        for p in 0..cols {
            atb[p] += wi * a[i][p] * b[i];
            for q in p..cols {
                ata[p][q] += wi * a[i][p] * a[i][q];
            }
        }
    }
    for p in 0..cols {
        for q in 0..p {
            ata[p][q] = ata[q][p];
        }
    }
    solve_dense(&ata, &atb)
}

/// Group a sorted slice of values into clusters whose consecutive gaps are
/// below `tol`; returns (cluster mean, count) pairs.
pub fn cluster_sorted(values: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let mut j = i + 1;
        let mut sum = values[i];
        while j < values.len() && values[j] - values[j - 1] < tol {
            sum += values[j];
            j += 1;
        }
        out.push((sum / (j - i) as f64, j - i));
        i = j;
    }
    out
}

/// Round-trip text for an `f64` (shortest representation that parses back
/// to the same bits); used by every CSV writer.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
