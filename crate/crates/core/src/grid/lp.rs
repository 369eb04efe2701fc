//! Dense two-phase primal simplex.
//!
//! Sized for the dispatch problems of small test systems: a handful of
//! generator variables and a few dozen flow-limit rows. Bland's rule is used
//! for both the entering and the leaving variable, which rules out cycling
//! and makes every run deterministic.

use crate::grid::GridError;

/// Minimum magnitude of a pivot element.
pub const PIVOT_TOL: f64 = 1e-9;
/// Largest phase-one infeasibility accepted as feasible.
pub const FEAS_TOL: f64 = 1e-7;

const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self { coeffs, relation, rhs }
    }
}

/// `min c·x` subject to the listed constraints and `lower ≤ x ≤ upper`.
///
/// Lower bounds must be finite; upper bounds may be `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, bounds: Vec<(f64, f64)>) -> Self {
        Self {
            objective,
            constraints: Vec::new(),
            bounds,
        }
    }

    pub fn push(&mut self, constraint: Constraint) {
        self.constraints.push(constraint);
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn solve(&self) -> Result<LpOutcome, GridError> {
        let n = self.num_vars();
        if self.bounds.len() != n || self.constraints.iter().any(|c| c.coeffs.len() != n) {
            return Err(GridError::MalformedLp("dimension mismatch".into()));
        }
        for &(lo, hi) in &self.bounds {
            if !lo.is_finite() || hi.is_nan() {
                return Err(GridError::MalformedLp("lower bounds must be finite".into()));
            }
            if hi < lo - FEAS_TOL {
                return Ok(LpOutcome::Infeasible);
            }
        }

        // Shift x = lower + y so that y >= 0, and turn finite upper bounds into rows.
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
        for c in &self.constraints {
            let shift: f64 = c.coeffs.iter().zip(&self.bounds).map(|(a, (lo, _))| a * lo).sum();
            rows.push((c.coeffs.clone(), c.relation, c.rhs - shift));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if hi.is_finite() {
                let mut coeffs = vec![0.0; n];
                coeffs[j] = 1.0;
                rows.push((coeffs, Relation::Le, (hi - lo).max(0.0)));
            }
        }

        let shift_obj: f64 = self.objective.iter().zip(&self.bounds).map(|(c, (lo, _))| c * lo).sum();

        let mut tableau = Tableau::build(n, rows);
        let Some(y) = tableau.solve(&self.objective)? else {
            return Ok(LpOutcome::Infeasible);
        };
        let x: Vec<f64> = y
            .iter()
            .zip(&self.bounds)
            .map(|(yj, (lo, hi))| (lo + yj).min(*hi))
            .collect();
        let objective = self.objective.iter().zip(&y).map(|(c, v)| c * v).sum::<f64>() + shift_obj;
        Ok(LpOutcome::Optimal { x, objective })
    }
}

struct Tableau {
    /// Row-major constraint rows, each `width + 1` long (last entry is the rhs).
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    structural: usize,
    /// First artificial column; columns at or past this index are artificial.
    artificial_start: usize,
    width: usize,
}

impl Tableau {
    fn build(structural: usize, raw: Vec<(Vec<f64>, Relation, f64)>) -> Self {
        let mut normalized = Vec::with_capacity(raw.len());
        for (mut coeffs, mut rel, mut rhs) in raw {
            if rhs < 0.0 {
                coeffs.iter_mut().for_each(|a| *a = -*a);
                rhs = -rhs;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            normalized.push((coeffs, rel, rhs));
        }
        let slack_count = normalized.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
        let artificial_count = normalized.iter().filter(|(_, r, _)| *r != Relation::Le).count();
        let artificial_start = structural + slack_count;
        let width = artificial_start + artificial_count;

        let mut rows = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let mut next_slack = structural;
        let mut next_art = artificial_start;
        for (coeffs, rel, rhs) in normalized {
            let mut row = vec![0.0; width + 1];
            row[..structural].copy_from_slice(&coeffs);
            row[width] = rhs;
            match rel {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
        }
        Self {
            rows,
            basis,
            structural,
            artificial_start,
            width,
        }
    }

    /// Returns `None` when infeasible, otherwise the structural solution.
    fn solve(&mut self, cost: &[f64]) -> Result<Option<Vec<f64>>, GridError> {
        if self.artificial_start < self.width {
            let mut phase1 = vec![0.0; self.width];
            phase1[self.artificial_start..].iter_mut().for_each(|c| *c = 1.0);
            self.optimize(&phase1, self.width)?;
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.rows)
                .filter(|(b, _)| **b >= self.artificial_start)
                .map(|(_, row)| row[self.width])
                .sum();
            if infeasibility > FEAS_TOL {
                return Ok(None);
            }
            self.evict_artificials();
        }
        let mut phase2 = vec![0.0; self.width];
        phase2[..self.structural].copy_from_slice(cost);
        self.optimize(&phase2, self.artificial_start)?;

        let mut y = vec![0.0; self.structural];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.structural {
                y[b] = row[self.width].max(0.0);
            }
        }
        Ok(Some(y))
    }

    /// Pivots zero-level artificials out of the basis; drops redundant rows.
    fn evict_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= self.artificial_start {
                let entering = (0..self.artificial_start).find(|&j| self.rows[r][j].abs() > PIVOT_TOL);
                match entering {
                    Some(j) => self.pivot(r, j),
                    None => {
                        self.rows.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    /// Minimizes `cost` using only columns `< allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<(), GridError> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed).find(|&j| self.reduced_cost(cost, j) < -PIVOT_TOL);
            let Some(j) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let a = row[j];
                if a > PIVOT_TOL {
                    let ratio = row[self.width] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((best, best_ratio)) => {
                            if ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && self.basis[r] < self.basis[best])
                            {
                                Some((r, ratio))
                            } else {
                                Some((best, best_ratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(GridError::UnboundedLp);
            };
            self.pivot(r, j);
        }
        Err(GridError::MalformedLp("pivot limit exceeded".into()))
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        let mut d = cost[j];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            d -= cost[b] * row[j];
        }
        d
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.rows[r][j];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
                row[j] = 0.0;
            }
        }
        self.basis[r] = j;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_generator_merit_order() {
        // load 100, caps 60/60, costs 1/2
        let mut lp = LinearProgram::new(vec![1.0, 2.0], vec![(0.0, 60.0), (0.0, 60.0)]);
        lp.push(Constraint::new(vec![1.0, 1.0], Relation::Eq, 100.0));
        match lp.solve().unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert!((x[0] - 60.0).abs() < 1e-9);
                assert!((x[1] - 40.0).abs() < 1e-9);
                assert!((objective - 140.0).abs() < 1e-9);
            }
            LpOutcome::Infeasible => panic!("expected optimum"),
        }
    }

    #[test]
    fn detects_infeasibility() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0], vec![(0.0, 10.0), (0.0, 10.0)]);
        lp.push(Constraint::new(vec![1.0, 1.0], Relation::Ge, 25.0));
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        let mut lp = LinearProgram::new(vec![-1.0, 0.0], vec![(0.0, f64::INFINITY), (0.0, 1.0)]);
        lp.push(Constraint::new(vec![1.0, -1.0], Relation::Ge, 0.0));
        assert!(matches!(lp.solve(), Err(GridError::UnboundedLp)));
    }

    #[test]
    fn negative_lower_bounds_and_redundant_equalities() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0], vec![(-5.0, 5.0), (-5.0, 5.0)]);
        lp.push(Constraint::new(vec![1.0, -1.0], Relation::Eq, 2.0));
        lp.push(Constraint::new(vec![2.0, -2.0], Relation::Eq, 4.0));
        match lp.solve().unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert!((x[0] + 3.0).abs() < 1e-9, "{x:?}");
                assert!((x[1] + 5.0).abs() < 1e-9);
                assert!((objective + 8.0).abs() < 1e-9);
            }
            LpOutcome::Infeasible => panic!("expected optimum"),
        }
    }

    #[test]
    fn degenerate_start_terminates() {
        // classic degenerate vertex at the origin
        let mut lp = LinearProgram::new(vec![-0.75, 150.0, -0.02, 6.0], vec![(0.0, f64::INFINITY); 4]);
        lp.push(Constraint::new(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0));
        lp.push(Constraint::new(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0));
        lp.push(Constraint::new(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0));
        match lp.solve().unwrap() {
            LpOutcome::Optimal { objective, .. } => assert!((objective + 0.05).abs() < 1e-9),
            LpOutcome::Infeasible => panic!("expected optimum"),
        }
    }
}
