//! Pareto archive: dominance, nondominated filtering and 2-D hypervolume.

use crate::eval::Evaluation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    Strong,
    Weak,
    None,
}

/// Componentwise comparison of two objective vectors (minimization).
pub fn dominates(y1: &[f64; 2], y2: &[f64; 2]) -> Dominance {
    let le = y1[0] <= y2[0] && y1[1] <= y2[1];
    if !le {
        Dominance::None
    } else if y1 != y2 {
        Dominance::Strong
    } else {
        Dominance::Weak
    }
}

/// Indices of points not strongly dominated by any other, in input order.
pub fn pareto_filter(points: &[[f64; 2]]) -> Vec<usize> {
    let mut keep = Vec::new();
    'outer: for (i, y) in points.iter().enumerate() {
        for (j, other) in points.iter().enumerate() {
            if i != j && dominates(other, y) == Dominance::Strong {
                continue 'outer;
            }
        }
        // Duplicate points weakly dominate each other; keep the first.
        if points[..i].contains(y) {
            continue;
        }
        keep.push(i);
    }
    keep
}

/// Area dominated by a nondominated front and bounded by `y_ref`, by sorting
/// on the first objective and summing disjoint strips. Points not weakly
/// dominating `y_ref` are clipped out.
pub fn hypervolume_2d(front: &[[f64; 2]], y_ref: &[f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = front
        .iter()
        .filter(|y| y[0] <= y_ref[0] && y[1] <= y_ref[1])
        .cloned()
        .collect();
    if pts.is_empty() {
        return 0.0;
    }
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut prev_f2 = y_ref[1];
    for p in &pts {
        if p[1] < prev_f2 {
            area += (y_ref[0] - p[0]) * (prev_f2 - p[1]);
            prev_f2 = p[1];
        }
    }
    area
}

/// One evaluated design with its raw search coordinates.
#[derive(Debug, Clone)]
pub struct ArchiveEntry {
    pub point: Vec<f64>,
    pub eval: Evaluation,
}

/// Every evaluation ever made, in evaluation order, with nondominated
/// filtering over the feasible subset.
#[derive(Debug, Clone, Default)]
pub struct ParetoArchive {
    pub entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, point: Vec<f64>, eval: Evaluation) {
        self.entries.push(ArchiveEntry { point, eval });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn feasible_objectives(&self, upto: usize) -> Vec<(usize, [f64; 2])> {
        self.entries[..upto]
            .iter()
            .enumerate()
            .filter(|(_, e)| e.eval.feasible())
            .map(|(i, e)| (i, e.eval.objectives))
            .collect()
    }

    /// Indices of the current nondominated feasible entries.
    pub fn front_indices(&self) -> Vec<usize> {
        let feas = self.feasible_objectives(self.entries.len());
        let objs: Vec<[f64; 2]> = feas.iter().map(|(_, y)| *y).collect();
        pareto_filter(&objs).into_iter().map(|k| feas[k].0).collect()
    }

    pub fn front(&self) -> Vec<[f64; 2]> {
        self.front_indices()
            .into_iter()
            .map(|i| self.entries[i].eval.objectives)
            .collect()
    }

    /// Componentwise worst feasible objectives, if any point is feasible.
    pub fn nadir(&self) -> Option<[f64; 2]> {
        let feas = self.feasible_objectives(self.entries.len());
        if feas.is_empty() {
            return None;
        }
        let mut worst = [f64::NEG_INFINITY; 2];
        for (_, y) in feas {
            worst[0] = worst[0].max(y[0]);
            worst[1] = worst[1].max(y[1]);
        }
        Some(worst)
    }

    pub fn hypervolume(&self, y_ref: &[f64; 2]) -> f64 {
        hypervolume_2d(&self.front(), y_ref)
    }

    /// Hypervolume of the front restricted to the first `k` evaluations, for
    /// k = 1..=len; monotonically nondecreasing for a fixed reference point.
    pub fn hypervolume_trace(&self, y_ref: &[f64; 2]) -> Vec<f64> {
        let mut trace = Vec::with_capacity(self.entries.len());
        for k in 1..=self.entries.len() {
            let feas = self.feasible_objectives(k);
            let objs: Vec<[f64; 2]> = feas.iter().map(|(_, y)| *y).collect();
            let idx = pareto_filter(&objs);
            let front: Vec<[f64; 2]> = idx.into_iter().map(|i| objs[i]).collect();
            trace.push(hypervolume_2d(&front, y_ref));
        }
        trace
    }
}
