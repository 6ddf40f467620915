use super::EmbeddingError;

/// Spatial coordinates are packed 16 bits each into a `u128`.
pub const MAX_DIM: usize = 8;
/// Largest admissible absolute coordinate (`|c| < 2^15`).
pub const MAX_COORD: i32 = (1 << 15) - 1;

const OFFSET: i32 = 1 << 15;

/// Packs a lattice point into a hashable key. Fails on coordinates with
/// `|c| >= 2^15`.
#[inline]
pub fn pack_site(coords: &[i32]) -> Result<u128, EmbeddingError> {
    debug_assert!(coords.len() <= MAX_DIM);
    let mut key = 0u128;
    for &c in coords {
        if c.abs() > MAX_COORD {
            return Err(EmbeddingError::CoordinateOverflow(c as i64));
        }
        key = (key << 16) | (c + OFFSET) as u128;
    }
    Ok(key)
}

/// Index of the subgroup of `Z^d` generated by `vectors`, or `None` when they
/// do not span a full-rank lattice. Integer row reduction with Euclid steps.
pub(crate) fn lattice_index(vectors: &[Vec<i32>], dim: usize) -> Option<i128> {
    let mut rows: Vec<Vec<i128>> = vectors
        .iter()
        .map(|v| v.iter().map(|&x| x as i128).collect())
        .collect();
    let mut index = 1i128;
    let mut pivot_row = 0;
    for col in 0..dim {
        loop {
            // smallest nonzero |entry| in this column among remaining rows
            let best = (pivot_row..rows.len())
                .filter(|&r| rows[r][col] != 0)
                .min_by_key(|&r| rows[r][col].abs());
            let Some(best) = best else { return None };
            rows.swap(pivot_row, best);
            let pivot = rows[pivot_row][col];
            let mut done = true;
            for r in pivot_row + 1..rows.len() {
                let q = rows[r][col] / pivot;
                if q != 0 {
                    for c in col..dim {
                        rows[r][c] -= q * rows[pivot_row][c];
                    }
                }
                if rows[r][col] != 0 {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        index *= rows[pivot_row][col].abs();
        pivot_row += 1;
    }
    Some(index)
}
