//! Reference-point scalarization and gap-based reference selection.

use crate::error::{Error, Result};

/// Two-branch scalarization around a reference point `r`:
/// `-∏(rᵢ - fᵢ)²` when `f` weakly dominates `r`, else `Σ max(0, fᵢ - rᵢ)²`.
pub fn scalarize_phi_r(f: &[f64; 2], r: &[f64; 2]) -> f64 {
    if f[0] <= r[0] && f[1] <= r[1] {
        -((r[0] - f[0]) * (r[0] - f[0]) * (r[1] - f[1]) * (r[1] - f[1]))
    } else {
        let a = (f[0] - r[0]).max(0.0);
        let b = (f[1] - r[1]).max(0.0);
        a * a + b * b
    }
}

/// Picks reference points targeting the largest gap in the current front,
/// rotating among equally large gaps (least-recently-targeted tie-break).
#[derive(Debug, Clone, Default)]
pub struct ReferenceSelector {
    /// Nadir corners returned so far, oldest first.
    history: Vec<[f64; 2]>,
}

impl ReferenceSelector {
    pub fn new() -> Self {
        Self::default()
    }

    /// `front` must hold the current feasible nondominated objectives.
    ///
    /// With one point the reference is that point pushed 10% of the objective
    /// ranges toward worse values; with two or more it is the componentwise
    /// worse corner (local nadir) of the adjacent pair with the largest
    /// Euclidean gap in min-max-normalized objective space.
    pub fn select(&mut self, front: &[[f64; 2]]) -> Result<[f64; 2]> {
        if front.is_empty() {
            return Err(Error::Domain("reference selection needs a nonempty front".into()));
        }
        let mut pts = front.to_vec();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]));

        if pts.len() == 1 {
            let y = pts[0];
            let inflate = [
                0.1 * y[0].abs().max(1.0),
                0.1 * y[1].abs().max(1.0),
            ];
            let r = [y[0] + inflate[0], y[1] + inflate[1]];
            self.history.push(r);
            return Ok(r);
        }

        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = [((hi[0] - lo[0])).max(1e-300), ((hi[1] - lo[1])).max(1e-300)];

        // Normalized gap length per adjacent pair.
        let mut gaps: Vec<(usize, f64, [f64; 2])> = Vec::with_capacity(pts.len() - 1);
        for i in 0..pts.len() - 1 {
            let (a, b) = (pts[i], pts[i + 1]);
            let dx = (b[0] - a[0]) / span[0];
            let dy = (a[1] - b[1]) / span[1]; // front is decreasing in f2
            let nadir = [a[0].max(b[0]), a[1].max(b[1])];
            gaps.push((i, (dx * dx + dy * dy).sqrt(), nadir));
        }
        let best_len = gaps.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);

        // Among (near-)ties, prefer the gap least recently targeted.
        let mut best: Option<(usize, [f64; 2])> = None;
        let mut best_age = usize::MAX; // position in history; MAX = never used
        for (_, len, nadir) in gaps.iter().filter(|g| g.1 >= best_len * (1.0 - 1e-12)) {
            let age = self
                .history
                .iter()
                .rposition(|h| h == nadir)
                .map(|p| self.history.len() - p)
                .unwrap_or(usize::MAX);
            if best.is_none() || age > best_age || (age == usize::MAX && best_age != usize::MAX) {
                best = Some((0, *nadir));
                best_age = age;
            }
            let _ = len;
        }
        let (_, r) = best.expect("at least one gap");
        self.history.push(r);
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn phi_substitution_cases() {
        assert_relative_eq!(scalarize_phi_r(&[0.0, 0.0], &[1.0, 1.0]), -1.0);
        assert_relative_eq!(scalarize_phi_r(&[2.0, 0.5], &[1.0, 1.0]), 1.0);
        assert_relative_eq!(scalarize_phi_r(&[1.0, 1.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn phi_is_continuous_across_the_branch_boundary() {
        let r = [0.7, -0.3];
        for i in 0..100 {
            let t = i as f64 / 99.0;
            // Points on the boundary f = r along each face.
            let on_face_1 = [r[0], r[1] - t];
            let on_face_2 = [r[0] - t, r[1]];
            assert!(scalarize_phi_r(&on_face_1, &r).abs() <= 1e-12);
            assert!(scalarize_phi_r(&on_face_2, &r).abs() <= 1e-12);
        }
    }

    #[test]
    fn phi_sign_correctness() {
        let r = [1.0, 1.0];
        // Strictly better in both coordinates: negative.
        assert!(scalarize_phi_r(&[0.5, 0.9], &r) < 0.0);
        // Weakly dominating with a zero factor: zero, not negative.
        assert_eq!(scalarize_phi_r(&[1.0, 0.5], &r), 0.0);
        // Violating either coordinate: positive.
        assert!(scalarize_phi_r(&[1.5, 0.0], &r) > 0.0);
        assert!(scalarize_phi_r(&[0.0, 1.5], &r) > 0.0);
    }

    #[test]
    fn single_gap_nadir_corner() {
        let mut sel = ReferenceSelector::new();
        let r = sel.select(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(r, [1.0, 1.0]);
    }

    #[test]
    fn largest_normalized_gap_is_selected() {
        let mut sel = ReferenceSelector::new();
        let r = sel.select(&[[0.0, 10.0], [1.0, 9.0], [9.0, 1.0]]).unwrap();
        assert_eq!(r, [9.0, 9.0]);
    }

    #[test]
    fn equal_gaps_rotate_least_recently_targeted() {
        // Four equally spaced points → three equal gaps; successive calls
        // must rotate through all three nadir corners before repeating.
        let front = [[0.0, 3.0], [1.0, 2.0], [2.0, 1.0], [3.0, 0.0]];
        let mut sel = ReferenceSelector::new();
        let mut seen = Vec::new();
        for _ in 0..3 {
            let r = sel.select(&front).unwrap();
            assert!(!seen.contains(&r), "gap {r:?} repeated before rotation finished");
            seen.push(r);
        }
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn empty_front_is_an_error() {
        assert!(ReferenceSelector::new().select(&[]).is_err());
    }
}
