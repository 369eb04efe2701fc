use serde::{Deserialize, Serialize};

use super::opf::{dispatch_lp, Redispatch};
use super::{GridError, GridModel, LineId, BALANCE_TOL_MW};

/// Post-contingency security outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum SecurityLabel {
    Insecure = 0,
    Secure = 1,
}

impl SecurityLabel {
    pub fn from_secure(secure: bool) -> Self {
        if secure {
            SecurityLabel::Secure
        } else {
            SecurityLabel::Insecure
        }
    }

    pub fn is_secure(self) -> bool {
        self == SecurityLabel::Secure
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

impl From<SecurityLabel> for u8 {
    fn from(label: SecurityLabel) -> u8 {
        label.as_u8()
    }
}

impl TryFrom<u8> for SecurityLabel {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(SecurityLabel::Insecure),
            1 => Ok(SecurityLabel::Secure),
            other => Err(format!("security label must be 0 or 1, got {other}")),
        }
    }
}

/// A balanced pre-fault operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct PreFaultCondition {
    /// Load per bus in MW.
    pub loads_mw: Vec<f64>,
    /// Output per generator in MW.
    pub dispatch_mw: Vec<f64>,
}

/// Exact security check of one condition against one line outage.
///
/// Secure iff some redispatch within `±corrective_range` of the pre-fault set
/// points (and inside generator limits) restores balance and all DC line
/// limits on the post-fault network. An islanding outage is insecure.
pub fn assess_security(
    grid: &GridModel,
    condition: &PreFaultCondition,
    contingency: LineId,
    corrective_range: f64,
) -> Result<SecurityLabel, GridError> {
    grid.line(contingency)?;
    if !(corrective_range >= 0.0) {
        return Err(GridError::InvalidNetwork(format!(
            "corrective range must be non-negative, got {corrective_range}"
        )));
    }
    let residual = condition.dispatch_mw.iter().sum::<f64>() - condition.loads_mw.iter().sum::<f64>();
    if residual.abs() > BALANCE_TOL_MW {
        return Err(GridError::Unbalanced(residual));
    }
    if !grid.is_connected(Some(contingency)) {
        return Ok(SecurityLabel::Insecure);
    }
    let window = Redispatch::uniform(condition.dispatch_mw.clone(), corrective_range);
    match dispatch_lp(grid, &condition.loads_mw, Some(&window), Some(contingency), false) {
        Ok(sol) => Ok(SecurityLabel::from_secure(sol.feasible)),
        Err(GridError::IslandedNetwork(_)) => Ok(SecurityLabel::Insecure),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{solve_dcopf, Bus, Generator, Line, NetworkFile};
    use super::*;

    fn base_condition(grid: &GridModel, loads: [f64; 3]) -> PreFaultCondition {
        let loads_mw = grid.expand_loads(&loads).unwrap();
        let sol = solve_dcopf(grid, &loads_mw, None).unwrap();
        assert!(sol.feasible);
        PreFaultCondition {
            loads_mw,
            dispatch_mw: sol.outputs_mw,
        }
    }

    #[test]
    fn light_load_outage_is_secure_without_redispatch() {
        let grid = GridModel::case6ww();
        let cond = base_condition(&grid, [50.0, 50.0, 50.0]);
        assert_eq!(assess_security(&grid, &cond, 11, 0.0).unwrap(), SecurityLabel::Secure);
    }

    #[test]
    fn islanding_a_load_bus_is_insecure() {
        // radial load bus 3 hangs off line 2
        let grid = GridModel::new(NetworkFile {
            version: "test".into(),
            base_mva: 100.0,
            buses: vec![
                Bus {
                    id: 1,
                    slack: true,
                    has_load: false,
                },
                Bus {
                    id: 2,
                    slack: false,
                    has_load: false,
                },
                Bus {
                    id: 3,
                    slack: false,
                    has_load: true,
                },
            ],
            lines: vec![
                Line {
                    id: 1,
                    from_bus: 1,
                    to_bus: 2,
                    reactance_pu: 0.1,
                    flow_limit_mw: 100.0,
                },
                Line {
                    id: 2,
                    from_bus: 2,
                    to_bus: 3,
                    reactance_pu: 0.1,
                    flow_limit_mw: 100.0,
                },
            ],
            generators: vec![Generator {
                id: 1,
                bus: 1,
                p_min_mw: 0.0,
                p_max_mw: 100.0,
                cost_per_mwh: 1.0,
            }],
        })
        .unwrap();
        let cond = PreFaultCondition {
            loads_mw: vec![0.0, 0.0, 40.0],
            dispatch_mw: vec![40.0],
        };
        assert_eq!(assess_security(&grid, &cond, 2, 20.0).unwrap(), SecurityLabel::Insecure);
    }

    #[test]
    fn unbalanced_condition_is_rejected() {
        let grid = GridModel::case6ww();
        let mut cond = base_condition(&grid, [60.0, 60.0, 60.0]);
        cond.dispatch_mw[0] += 1.0;
        assert!(matches!(
            assess_security(&grid, &cond, 3, 20.0),
            Err(GridError::Unbalanced(_))
        ));
    }

    #[test]
    fn label_serializes_as_integer() {
        assert_eq!(serde_json::to_string(&SecurityLabel::Secure).unwrap(), "1");
        assert!(serde_json::from_str::<SecurityLabel>("2").is_err());
    }
}
