use serde::{Deserialize, Serialize};

use super::flow::ptdf;
use super::lp::{Constraint, LinearProgram, LpOutcome, Relation};
use super::{GridError, GridModel, LineId};

/// Per-generator window `base ± range` used for corrective redispatch.
#[derive(Debug, Clone, PartialEq)]
pub struct Redispatch {
    pub base_mw: Vec<f64>,
    pub range_mw: Vec<f64>,
}

impl Redispatch {
    pub fn uniform(base_mw: Vec<f64>, range_mw: f64) -> Self {
        let range_mw = vec![range_mw; base_mw.len()];
        Self { base_mw, range_mw }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    /// Output per generator in MW; empty when infeasible.
    pub outputs_mw: Vec<f64>,
    pub cost: f64,
    pub feasible: bool,
}

impl DispatchSolution {
    fn infeasible() -> Self {
        Self {
            outputs_mw: Vec::new(),
            cost: f64::INFINITY,
            feasible: false,
        }
    }
}

/// Cost-minimal DC dispatch subject to balance, generator limits and line limits.
///
/// `loads` is per bus. With `redispatch`, each generator is further confined
/// to its window around the base dispatch.
pub fn solve_dcopf(
    grid: &GridModel,
    loads: &[f64],
    redispatch: Option<&Redispatch>,
) -> Result<DispatchSolution, GridError> {
    dispatch_lp(grid, loads, redispatch, None, true)
}

pub(crate) fn dispatch_lp(
    grid: &GridModel,
    loads: &[f64],
    redispatch: Option<&Redispatch>,
    outaged: Option<LineId>,
    minimize_cost: bool,
) -> Result<DispatchSolution, GridError> {
    if loads.len() != grid.num_buses() {
        return Err(GridError::LengthMismatch {
            expected: grid.num_buses(),
            got: loads.len(),
        });
    }
    let gens = grid.generators();
    let mut bounds: Vec<(f64, f64)> = gens.iter().map(|g| (g.p_min_mw, g.p_max_mw)).collect();
    if let Some(window) = redispatch {
        if window.base_mw.len() != gens.len() || window.range_mw.len() != gens.len() {
            return Err(GridError::LengthMismatch {
                expected: gens.len(),
                got: window.base_mw.len(),
            });
        }
        for (b, (base, range)) in bounds.iter_mut().zip(window.base_mw.iter().zip(&window.range_mw)) {
            b.0 = b.0.max(base - range);
            b.1 = b.1.min(base + range);
        }
    }

    let shift = ptdf(grid, outaged)?;
    let gen_bus: Vec<usize> = gens
        .iter()
        .map(|g| grid.bus_position(g.bus).expect("validated"))
        .collect();
    let objective = if minimize_cost {
        gens.iter().map(|g| g.cost_per_mwh).collect()
    } else {
        vec![0.0; gens.len()]
    };

    let mut lp = LinearProgram::new(objective, bounds);
    lp.push(Constraint::new(vec![1.0; gens.len()], Relation::Eq, loads.iter().sum()));
    for (line, row) in grid.lines().iter().zip(&shift) {
        if Some(line.id) == outaged {
            continue;
        }
        let coeffs: Vec<f64> = gen_bus.iter().map(|&k| row[k]).collect();
        let load_flow: f64 = row.iter().zip(loads).map(|(f, d)| f * d).sum();
        lp.push(Constraint::new(
            coeffs.clone(),
            Relation::Le,
            line.flow_limit_mw + load_flow,
        ));
        lp.push(Constraint::new(coeffs, Relation::Ge, -line.flow_limit_mw + load_flow));
    }

    Ok(match lp.solve()? {
        LpOutcome::Optimal { x, objective } => DispatchSolution {
            outputs_mw: x,
            cost: if minimize_cost { objective } else { 0.0 },
            feasible: true,
        },
        LpOutcome::Infeasible => DispatchSolution::infeasible(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{Bus, Generator, Line, NetworkFile};
    use super::*;

    #[test]
    fn zero_load_zero_dispatch() {
        let mut file: NetworkFile = GridModel::case6ww().into();
        file.generators.iter_mut().for_each(|g| g.p_min_mw = 0.0);
        let grid = GridModel::new(file).unwrap();
        let sol = solve_dcopf(&grid, &[0.0; 6], None).unwrap();
        assert!(sol.feasible);
        assert!(sol.outputs_mw.iter().all(|g| g.abs() < 1e-9));
        assert!(sol.cost.abs() < 1e-9);
    }

    #[test]
    fn merit_order_when_lines_do_not_bind() {
        let mut file: NetworkFile = GridModel::case6ww().into();
        file.lines.iter_mut().for_each(|l| l.flow_limit_mw = 1e6);
        file.generators.iter_mut().for_each(|g| g.p_min_mw = 0.0);
        let grid = GridModel::new(file).unwrap();
        let loads = grid.expand_loads(&[50.0, 50.0, 50.0]).unwrap();
        let sol = solve_dcopf(&grid, &loads, None).unwrap();
        assert!(sol.feasible);
        assert!((sol.outputs_mw[2] - 150.0).abs() < 1e-6);
        assert!(sol.outputs_mw[0].abs() < 1e-6 && sol.outputs_mw[1].abs() < 1e-6);
        assert!((sol.cost - 1200.0).abs() < 1e-6);
    }

    #[test]
    fn single_bus_two_generators() {
        // One generator bus carrying the load, a dummy line to the slack.
        let grid = GridModel::new(NetworkFile {
            version: "test".into(),
            base_mva: 100.0,
            buses: vec![
                Bus {
                    id: 1,
                    slack: true,
                    has_load: true,
                },
                Bus {
                    id: 2,
                    slack: false,
                    has_load: false,
                },
            ],
            lines: vec![Line {
                id: 1,
                from_bus: 1,
                to_bus: 2,
                reactance_pu: 0.1,
                flow_limit_mw: 1e6,
            }],
            generators: vec![
                Generator {
                    id: 1,
                    bus: 1,
                    p_min_mw: 0.0,
                    p_max_mw: 60.0,
                    cost_per_mwh: 1.0,
                },
                Generator {
                    id: 2,
                    bus: 1,
                    p_min_mw: 0.0,
                    p_max_mw: 60.0,
                    cost_per_mwh: 2.0,
                },
            ],
        })
        .unwrap();
        let sol = solve_dcopf(&grid, &[100.0, 0.0], None).unwrap();
        assert!((sol.outputs_mw[0] - 60.0).abs() < 1e-9);
        assert!((sol.outputs_mw[1] - 40.0).abs() < 1e-9);
        assert!((sol.cost - 140.0).abs() < 1e-9);
    }

    #[test]
    fn overload_makes_dispatch_infeasible() {
        let grid = GridModel::case6ww();
        let loads = grid.expand_loads(&[150.0, 150.0, 150.0]).unwrap();
        let sol = solve_dcopf(&grid, &loads, None).unwrap();
        assert!(!sol.feasible);
        assert!(sol.outputs_mw.is_empty());
    }

    #[test]
    fn redispatch_window_is_respected() {
        let grid = GridModel::case6ww();
        let loads = grid.expand_loads(&[70.0, 70.0, 70.0]).unwrap();
        let base = solve_dcopf(&grid, &loads, None).unwrap();
        let window = Redispatch::uniform(base.outputs_mw.clone(), 5.0);
        let sol = solve_dcopf(&grid, &loads, Some(&window)).unwrap();
        assert!(sol.feasible);
        for (g, b) in sol.outputs_mw.iter().zip(&base.outputs_mw) {
            assert!((g - b).abs() <= 5.0 + 1e-9);
        }
        assert!((sol.cost - base.cost).abs() < 1e-6);
    }
}
