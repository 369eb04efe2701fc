use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{GridError, GridModel, LineId, BALANCE_TOL_MW};

/// Net injection per bus in MW (generation minus load), in bus order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection(Vec<f64>);

impl Injection {
    pub fn new(per_bus_mw: Vec<f64>) -> Self {
        Self(per_bus_mw)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn residual(&self) -> f64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSolution {
    /// Phase angle per bus in radians; the slack bus is exactly zero.
    pub angles_rad: Vec<f64>,
    /// Flow per line in MW, in line order, positive from `from_bus` to `to_bus`.
    /// An outaged line carries exactly zero.
    pub flows_mw: Vec<f64>,
}

/// Inverse of the reduced (slack-removed) susceptance matrix, embedded back
/// into a full bus-by-bus matrix with a zero slack row and column.
pub(crate) fn reactance_matrix(grid: &GridModel, outaged: Option<LineId>) -> Result<DMatrix<f64>, GridError> {
    if let Some(id) = outaged {
        grid.line(id)?;
        if !grid.is_connected(outaged) {
            return Err(GridError::IslandedNetwork(id));
        }
    }
    let n = grid.num_buses();
    let slack = grid.slack_index();
    let reduced = |k: usize| if k < slack { k } else { k - 1 };
    let mut b = DMatrix::<f64>::zeros(n - 1, n - 1);
    for line in grid.in_service(outaged) {
        let f = grid.bus_position(line.from_bus).expect("validated");
        let t = grid.bus_position(line.to_bus).expect("validated");
        let y = 1.0 / line.reactance_pu;
        if f != slack {
            b[(reduced(f), reduced(f))] += y;
        }
        if t != slack {
            b[(reduced(t), reduced(t))] += y;
        }
        if f != slack && t != slack {
            b[(reduced(f), reduced(t))] -= y;
            b[(reduced(t), reduced(f))] -= y;
        }
    }
    let inv = b.lu().try_inverse().ok_or(GridError::SingularSystem)?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(GridError::SingularSystem);
    }
    let mut full = DMatrix::<f64>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            if r != slack && c != slack {
                full[(r, c)] = inv[(reduced(r), reduced(c))];
            }
        }
    }
    Ok(full)
}

/// Power transfer distribution factors: MW flow on each line per MW injected
/// at each bus (withdrawn at the slack). Outaged lines get a zero row.
pub(crate) fn ptdf(grid: &GridModel, outaged: Option<LineId>) -> Result<Vec<Vec<f64>>, GridError> {
    let x = reactance_matrix(grid, outaged)?;
    let n = grid.num_buses();
    Ok(grid
        .lines()
        .iter()
        .map(|line| {
            if Some(line.id) == outaged {
                return vec![0.0; n];
            }
            let f = grid.bus_position(line.from_bus).expect("validated");
            let t = grid.bus_position(line.to_bus).expect("validated");
            (0..n).map(|k| (x[(f, k)] - x[(t, k)]) / line.reactance_pu).collect()
        })
        .collect())
}

/// Solves `B·θ = P` with the slack angle fixed at zero.
pub fn solve_dc_power_flow(
    grid: &GridModel,
    injection: &Injection,
    outaged_line: Option<LineId>,
) -> Result<FlowSolution, GridError> {
    let p = injection.as_slice();
    if p.len() != grid.num_buses() {
        return Err(GridError::LengthMismatch {
            expected: grid.num_buses(),
            got: p.len(),
        });
    }
    let residual = injection.residual();
    if residual.abs() > BALANCE_TOL_MW {
        return Err(GridError::Unbalanced(residual));
    }
    let x = reactance_matrix(grid, outaged_line)?;
    let base = grid.base_mva();
    let p_pu = DVector::from_iterator(p.len(), p.iter().map(|v| v / base));
    let mut angles: Vec<f64> = (&x * p_pu).iter().copied().collect();
    angles[grid.slack_index()] = 0.0;
    let flows = grid
        .lines()
        .iter()
        .map(|line| {
            if Some(line.id) == outaged_line {
                return 0.0;
            }
            let f = grid.bus_position(line.from_bus).expect("validated");
            let t = grid.bus_position(line.to_bus).expect("validated");
            (angles[f] - angles[t]) / line.reactance_pu * base
        })
        .collect();
    Ok(FlowSolution {
        angles_rad: angles,
        flows_mw: flows,
    })
}
