//! Ranked hypothesis generation.
//!
//! * [`hungarian`] solves a rectangular linear assignment problem in which
//!   every row must be assigned and columns may be left free.
//! * [`murty`] enumerates the best assignments in order of increasing cost.
//! * [`k_shortest_paths`] enumerates survive/die selections over the two-column
//!   survival trellis in order of increasing cost.
//!
//! Costs are negative log-likelihoods; `f64::INFINITY` marks forbidden pairs.
//! Infinite entries are never used in potential arithmetic, so no NaN can arise.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A complete row → column assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `columns[i]` is the column chosen for row `i`.
    pub columns: Vec<usize>,
    pub cost: f64,
}

fn assignment_cost(cost: &DMatrix<f64>, columns: &[usize]) -> f64 {
    columns
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[(i, j)])
        .sum()
}

/// Minimum-cost assignment of every row to a distinct column.
pub fn hungarian(cost: &DMatrix<f64>) -> Result<Assignment> {
    let (n, m) = cost.shape();
    if n == 0 {
        return Ok(Assignment {
            columns: Vec::new(),
            cost: 0.0,
        });
    }
    if n > m {
        return Err(Error::Infeasible);
    }
    if cost.iter().any(|c| c.is_nan() || *c == f64::NEG_INFINITY) {
        return Err(Error::Precondition("cost matrix contains NaN or -inf".into()));
    }

    // Shortest augmenting paths with row/column potentials, 1-based with a
    // virtual column 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![inf; m + 1];
    let mut used = vec![false; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        minv.fill(inf);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let c = cost[(i0 - 1, j - 1)];
                if c.is_finite() {
                    let reduced = c - u[i0] - v[j];
                    if reduced < minv[j] {
                        minv[j] = reduced;
                        way[j] = j0;
                    }
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if j1 == 0 {
                return Err(Error::Infeasible);
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut columns = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            columns[owner[j] - 1] = j - 1;
        }
    }
    Ok(Assignment {
        cost: assignment_cost(cost, &columns),
        columns,
    })
}

/// Detection/misdetection cost matrix `[D | M]` for one hypothesis and
/// partition: rows are tracks, the first columns measurement groups and the
/// remaining square block per-track misdetection.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignCostMatrix {
    /// `n_tracks × n_groups`, `-log η` of assigning a group to a track.
    pub detect: DMatrix<f64>,
    /// `-log q_D` per track; the diagonal of the misdetection block.
    pub misdetect: Vec<f64>,
}

/// Column choice of one track in an [`AssignCostMatrix`] solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Choice {
    Group(usize),
    Missed,
}

impl AssignCostMatrix {
    pub fn new(detect: DMatrix<f64>, misdetect: Vec<f64>) -> Result<Self> {
        if detect.nrows() != misdetect.len() {
            return Err(Error::DimensionMismatch(
                "misdetection costs must have one entry per track".into(),
            ));
        }
        Ok(Self { detect, misdetect })
    }

    pub fn n_tracks(&self) -> usize {
        self.detect.nrows()
    }

    pub fn n_groups(&self) -> usize {
        self.detect.ncols()
    }

    /// The full `n × (g + n)` matrix with `+∞` off the misdetection diagonal.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let (n, g) = self.detect.shape();
        DMatrix::from_fn(n, g + n, |i, j| {
            if j < g {
                self.detect[(i, j)]
            } else if j - g == i {
                self.misdetect[i]
            } else {
                f64::INFINITY
            }
        })
    }

    pub fn decode(&self, a: &Assignment) -> Vec<Choice> {
        let g = self.n_groups();
        a.columns
            .iter()
            .map(|&j| if j < g { Choice::Group(j) } else { Choice::Missed })
            .collect()
    }

    /// Sum of each row's cheapest entry; a lower bound on any assignment.
    pub fn row_min_bound(&self) -> f64 {
        (0..self.n_tracks())
            .map(|i| {
                self.detect
                    .row(i)
                    .iter()
                    .copied()
                    .fold(self.misdetect[i], f64::min)
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
struct MurtyNode {
    solution: Assignment,
    forced: Vec<(usize, usize)>,
    forbidden: Vec<(usize, usize)>,
}

impl PartialEq for MurtyNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for MurtyNode {}

impl PartialOrd for MurtyNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MurtyNode {
    // Reversed so that BinaryHeap pops the cheapest, then lexicographically
    // smallest, solution first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .solution
            .cost
            .total_cmp(&self.solution.cost)
            .then_with(|| other.solution.columns.cmp(&self.solution.columns))
    }
}

fn solve_constrained(
    cost: &DMatrix<f64>,
    forced: &[(usize, usize)],
    forbidden: &[(usize, usize)],
) -> Option<Assignment> {
    let mut c = cost.clone();
    for &(i, j) in forbidden {
        c[(i, j)] = f64::INFINITY;
    }
    for &(i, j) in forced {
        for jj in 0..c.ncols() {
            if jj != j {
                c[(i, jj)] = f64::INFINITY;
            }
        }
        for ii in 0..c.nrows() {
            if ii != i {
                c[(ii, j)] = f64::INFINITY;
            }
        }
    }
    let a = hungarian(&c).ok()?;
    let cost = assignment_cost(cost, &a.columns);
    cost.is_finite().then_some(Assignment {
        columns: a.columns,
        cost,
    })
}

/// The `n_best` lowest-cost assignments in non-decreasing cost order.
///
/// Uses Murty's partitioning of the solution space: each popped solution
/// spawns one sub-problem per free row, forbidding that row's current column
/// and fixing the columns of the rows before it.
pub fn murty(cost: &DMatrix<f64>, n_best: usize) -> Vec<Assignment> {
    let mut out = Vec::new();
    if n_best == 0 {
        return out;
    }
    let Some(first) = solve_constrained(cost, &[], &[]) else {
        return out;
    };
    let mut heap = BinaryHeap::new();
    heap.push(MurtyNode {
        solution: first,
        forced: Vec::new(),
        forbidden: Vec::new(),
    });
    while let Some(node) = heap.pop() {
        let MurtyNode {
            solution,
            forced,
            forbidden,
        } = node;
        out.push(solution.clone());
        if out.len() >= n_best {
            break;
        }
        let mut fixed = forced.clone();
        for (row, &col) in solution.columns.iter().enumerate() {
            if forced.iter().any(|&(r, _)| r == row) {
                continue;
            }
            let mut child_forbidden = forbidden.clone();
            child_forbidden.push((row, col));
            if let Some(s) = solve_constrained(cost, &fixed, &child_forbidden) {
                heap.push(MurtyNode {
                    solution: s,
                    forced: fixed.clone(),
                    forbidden: child_forbidden,
                });
            }
            fixed.push((row, col));
        }
    }
    out
}

/// Survive/die costs of one track: `(-log η_S, -log q_S)`.
pub type SurvivalCosts = (f64, f64);

/// A ranked survivor selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivorSubset {
    /// `survives[i]` is true when row `i` took the survival column.
    pub survives: Vec<bool>,
    pub cost: f64,
}

#[derive(Debug, PartialEq)]
struct PathState {
    cost: f64,
    flips: Vec<usize>,
}

impl Eq for PathState {}

impl PartialOrd for PathState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PathState {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.flips.cmp(&self.flips))
    }
}

/// The `k` cheapest top-to-bottom paths through the `n × 2` survival trellis.
///
/// Every path picks one column per row, so a path is a survivor subset and its
/// cost is a sum of independent row costs. Starting from the row-wise optimum,
/// paths are generated by flipping rows in order of increasing flip penalty;
/// each state either extends its last flip to the next row or adds the next
/// row as a new flip, which visits every subset exactly once in
/// non-decreasing cost order. Ties prefer survival.
pub fn k_shortest_paths(costs: &[SurvivalCosts], k: usize) -> Vec<SurvivorSubset> {
    let n = costs.len();
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let base: Vec<bool> = costs.iter().map(|&(s, d)| s <= d).collect();
    let penalty: Vec<f64> = costs.iter().map(|&(s, d)| (s - d).abs()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| penalty[a].total_cmp(&penalty[b]).then(a.cmp(&b)));

    let materialize = |flips: &[usize]| {
        let mut survives = base.clone();
        for &f in flips {
            let row = order[f];
            survives[row] = !survives[row];
        }
        let cost = survives
            .iter()
            .zip(costs)
            .map(|(&s, &(cs, cd))| if s { cs } else { cd })
            .sum::<f64>();
        SurvivorSubset { survives, cost }
    };

    let root = materialize(&[]);
    if !root.cost.is_finite() {
        return out;
    }
    let base_cost = root.cost;
    out.push(root);

    let mut heap = BinaryHeap::new();
    if n > 0 && penalty[order[0]].is_finite() {
        heap.push(PathState {
            cost: base_cost + penalty[order[0]],
            flips: vec![0],
        });
    }
    while out.len() < k {
        let Some(PathState { cost, flips }) = heap.pop() else {
            break;
        };
        let last = *flips.last().expect("states hold at least one flip");
        if last + 1 < n {
            let next_pen = penalty[order[last + 1]];
            if next_pen.is_finite() {
                let mut extended = flips.clone();
                extended.push(last + 1);
                heap.push(PathState {
                    cost: cost + next_pen,
                    flips: extended,
                });
                let mut shifted = flips.clone();
                *shifted.last_mut().expect("non-empty") = last + 1;
                heap.push(PathState {
                    cost: cost - penalty[order[last]] + next_pen,
                    flips: shifted,
                });
            }
        }
        out.push(materialize(&flips));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn hungarian_small_examples() {
        let a = hungarian(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).unwrap();
        assert_eq!(a.columns, vec![0, 1]);
        assert_eq!(a.cost, 2.0);

        let a = hungarian(&DMatrix::from_element(1, 1, 5.0)).unwrap();
        assert_eq!(a.columns, vec![0]);
        assert_eq!(a.cost, 5.0);

        let c = DMatrix::from_row_slice(2, 2, &[1.0, INF, 1.0, INF]);
        assert!(matches!(hungarian(&c), Err(Error::Infeasible)));
    }

    #[test]
    fn hungarian_rectangular_and_negative() {
        let c = DMatrix::from_row_slice(2, 4, &[-3.0, 5.0, 0.0, INF, -2.0, -4.0, INF, 0.0]);
        let a = hungarian(&c).unwrap();
        assert_eq!(a.columns, vec![0, 1]);
        assert_eq!(a.cost, -7.0);
    }

    #[test]
    fn hungarian_rejects_more_rows_than_columns() {
        let c = DMatrix::from_element(3, 2, 1.0);
        assert!(matches!(hungarian(&c), Err(Error::Infeasible)));
    }

    #[test]
    fn murty_two_targets_one_group() {
        let (a, b, c, d) = (1.0, 2.5, 0.7, 1.9);
        let m = AssignCostMatrix::new(DMatrix::from_row_slice(2, 1, &[a, b]), vec![c, d]).unwrap();
        let sols = murty(&m.to_matrix(), 3);
        let mut expected = vec![
            (vec![Choice::Group(0), Choice::Missed], a + d),
            (vec![Choice::Missed, Choice::Group(0)], b + c),
            (vec![Choice::Missed, Choice::Missed], c + d),
        ];
        expected.sort_by(|x, y| x.1.total_cmp(&y.1));
        assert_eq!(sols.len(), 3);
        for (s, (choice, cost)) in sols.iter().zip(&expected) {
            assert_eq!(&m.decode(s), choice);
            assert_relative_eq!(s.cost, *cost, epsilon = 1e-12);
        }
        // Only three feasible assignments exist.
        assert_eq!(murty(&m.to_matrix(), 10).len(), 3);
    }

    #[test]
    fn murty_single_best_is_hungarian() {
        let c = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0]);
        let best = murty(&c, 1);
        assert_eq!(best.len(), 1);
        assert_eq!(best[0], hungarian(&c).unwrap());
    }

    #[test]
    fn murty_all_detections_forbidden() {
        let m = AssignCostMatrix::new(DMatrix::from_element(2, 3, INF), vec![1.0, 2.0]).unwrap();
        let sols = murty(&m.to_matrix(), 5);
        assert_eq!(sols.len(), 1);
        assert_eq!(m.decode(&sols[0]), vec![Choice::Missed, Choice::Missed]);
        assert_eq!(sols[0].cost, 3.0);
    }

    #[test]
    fn ksp_two_tracks() {
        let costs = [(-(0.9f64.ln()), -(0.1f64.ln())), (-(0.8f64.ln()), -(0.2f64.ln()))];
        let paths = k_shortest_paths(&costs, 10);
        let subsets: Vec<Vec<bool>> = paths.iter().map(|p| p.survives.clone()).collect();
        assert_eq!(
            subsets,
            vec![
                vec![true, true],
                vec![true, false],
                vec![false, true],
                vec![false, false]
            ]
        );
        for (p, prob) in paths.iter().zip([0.72, 0.18, 0.08, 0.02]) {
            assert_relative_eq!(p.cost, -f64::ln(prob), epsilon = 1e-12);
        }
    }

    #[test]
    fn ksp_tie_prefers_survival() {
        let c = -(0.5f64.ln());
        let paths = k_shortest_paths(&[(c, c)], 5);
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].survives, vec![true]);
        assert_eq!(paths[1].survives, vec![false]);
        assert_eq!(paths[0].cost, paths[1].cost);
    }

    #[test]
    fn ksp_single_path_and_empty() {
        let costs = [(0.1, 2.0), (3.0, 0.2), (0.5, 0.6)];
        let p = k_shortest_paths(&costs, 1);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].survives, vec![true, false, true]);
        let p = k_shortest_paths(&[], 3);
        assert_eq!(p.len(), 1);
        assert!(p[0].survives.is_empty());
    }
}
