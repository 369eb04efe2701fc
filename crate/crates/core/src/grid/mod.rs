//! DC network model, power flow, dispatch and the exact security oracle.
//!
//! The same DC machinery serves two roles: it dispatches the generators for
//! every sampled pre-fault condition, and it decides post-contingency
//! security by checking whether a corrective redispatch exists.

mod flow;
pub mod lp;
mod opf;
mod security;

use std::collections::{HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use flow::{solve_dc_power_flow, FlowSolution, Injection};
pub use opf::{solve_dcopf, DispatchSolution, Redispatch};
pub use security::{assess_security, PreFaultCondition, SecurityLabel};

pub type BusId = u32;
pub type LineId = u32;
pub type GeneratorId = u32;

/// Redispatch window used when labeling post-contingency security.
pub const CORRECTIVE_RANGE_MW: f64 = 20.0;
/// Largest accepted power-balance residual.
pub const BALANCE_TOL_MW: f64 = 1e-6;

const EMBEDDED_CASE6WW: &str = include_str!("../../data/case6ww.json");

#[derive(Debug, Error)]
pub enum GridError {
    #[error("line {0} outage islands the network")]
    IslandedNetwork(LineId),
    #[error("reduced susceptance matrix is singular")]
    SingularSystem,
    #[error("linear program is unbounded; the network model is malformed")]
    UnboundedLp,
    #[error("malformed linear program: {0}")]
    MalformedLp(String),
    #[error("injections do not balance: residual {0} MW")]
    Unbalanced(f64),
    #[error("unknown line id {0}")]
    UnknownLine(LineId),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed network file: {0}")]
    MalformedFile(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub slack: bool,
    pub has_load: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: LineId,
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub reactance_pu: f64,
    pub flow_limit_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: GeneratorId,
    pub bus: BusId,
    pub p_min_mw: f64,
    pub p_max_mw: f64,
    pub cost_per_mwh: f64,
}

/// On-disk layout of `network.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub version: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
}

/// Validated, immutable network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkFile", into = "NetworkFile")]
pub struct GridModel {
    version: String,
    base_mva: f64,
    buses: Vec<Bus>,
    lines: Vec<Line>,
    generators: Vec<Generator>,
    bus_index: HashMap<BusId, usize>,
    slack: usize,
}

impl TryFrom<NetworkFile> for GridModel {
    type Error = GridError;

    fn try_from(file: NetworkFile) -> Result<Self, GridError> {
        GridModel::new(file)
    }
}

impl From<GridModel> for NetworkFile {
    fn from(grid: GridModel) -> Self {
        NetworkFile {
            version: grid.version,
            base_mva: grid.base_mva,
            buses: grid.buses,
            lines: grid.lines,
            generators: grid.generators,
        }
    }
}

impl GridModel {
    pub fn new(file: NetworkFile) -> Result<Self, GridError> {
        let invalid = |msg: String| Err(GridError::InvalidNetwork(msg));
        if !(file.base_mva > 0.0) {
            return invalid(format!("base_mva must be positive, got {}", file.base_mva));
        }
        let mut bus_index = HashMap::new();
        for (k, bus) in file.buses.iter().enumerate() {
            if bus_index.insert(bus.id, k).is_some() {
                return invalid(format!("duplicate bus id {}", bus.id));
            }
        }
        let slacks: Vec<usize> = (0..file.buses.len()).filter(|&k| file.buses[k].slack).collect();
        if slacks.len() != 1 {
            return invalid(format!("expected exactly one slack bus, found {}", slacks.len()));
        }
        let mut line_ids = HashMap::new();
        for line in &file.lines {
            if line_ids.insert(line.id, ()).is_some() {
                return invalid(format!("duplicate line id {}", line.id));
            }
            if !bus_index.contains_key(&line.from_bus) || !bus_index.contains_key(&line.to_bus) {
                return invalid(format!("line {} references an unknown bus", line.id));
            }
            if line.from_bus == line.to_bus {
                return invalid(format!("line {} is a self-loop", line.id));
            }
            if !(line.reactance_pu > 0.0) || !(line.flow_limit_mw > 0.0) {
                return invalid(format!("line {} needs positive reactance and flow limit", line.id));
            }
        }
        for gen in &file.generators {
            if !bus_index.contains_key(&gen.bus) {
                return invalid(format!("generator {} references an unknown bus", gen.id));
            }
            if !(gen.p_min_mw <= gen.p_max_mw) {
                return invalid(format!("generator {} has p_min > p_max", gen.id));
            }
        }
        let grid = GridModel {
            version: file.version,
            base_mva: file.base_mva,
            buses: file.buses,
            lines: file.lines,
            generators: file.generators,
            bus_index,
            slack: slacks[0],
        };
        if !grid.is_connected(None) {
            return invalid("network graph is not connected".into());
        }
        Ok(grid)
    }

    /// The Wood & Wollenberg 6-bus system shipped with the crate.
    pub fn case6ww() -> Self {
        Self::from_json(EMBEDDED_CASE6WW).expect("embedded network data is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, GridError> {
        serde_json::from_str::<NetworkFile>(text)
            .map_err(|e| GridError::MalformedFile(e.to_string()))
            .and_then(GridModel::new)
    }

    pub fn load(path: &Path) -> Result<Self, GridError> {
        let text = std::fs::read_to_string(path).map_err(|source| GridError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&NetworkFile::from(self.clone())).expect("network serializes")
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn slack_index(&self) -> usize {
        self.slack
    }

    pub fn bus_position(&self, id: BusId) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    pub fn line_position(&self, id: LineId) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    pub fn line(&self, id: LineId) -> Result<&Line, GridError> {
        self.lines.iter().find(|l| l.id == id).ok_or(GridError::UnknownLine(id))
    }

    /// Positions of buses that carry load, in bus order.
    pub fn load_buses(&self) -> Vec<usize> {
        (0..self.buses.len()).filter(|&k| self.buses[k].has_load).collect()
    }

    /// Per-bus load vector from the loads at the load buses.
    pub fn expand_loads(&self, loads: &[f64]) -> Result<Vec<f64>, GridError> {
        let load_buses = self.load_buses();
        if loads.len() != load_buses.len() {
            return Err(GridError::LengthMismatch {
                expected: load_buses.len(),
                got: loads.len(),
            });
        }
        let mut per_bus = vec![0.0; self.buses.len()];
        for (&k, &l) in load_buses.iter().zip(loads) {
            per_bus[k] = l;
        }
        Ok(per_bus)
    }

    /// Net injection (generation minus load) per bus.
    pub fn injection(&self, dispatch: &[f64], loads: &[f64]) -> Result<Injection, GridError> {
        if dispatch.len() != self.generators.len() {
            return Err(GridError::LengthMismatch {
                expected: self.generators.len(),
                got: dispatch.len(),
            });
        }
        if loads.len() != self.buses.len() {
            return Err(GridError::LengthMismatch {
                expected: self.buses.len(),
                got: loads.len(),
            });
        }
        let mut p: Vec<f64> = loads.iter().map(|l| -l).collect();
        for (gen, &g) in self.generators.iter().zip(dispatch) {
            p[self.bus_index[&gen.bus]] += g;
        }
        Ok(Injection::new(p))
    }

    pub(crate) fn in_service(&self, outaged: Option<LineId>) -> impl Iterator<Item = &Line> {
        self.lines.iter().filter(move |l| Some(l.id) != outaged)
    }

    pub fn is_connected(&self, outaged: Option<LineId>) -> bool {
        let n = self.buses.len();
        let mut adjacency = vec![Vec::new(); n];
        for line in self.in_service(outaged) {
            let f = self.bus_index[&line.from_bus];
            let t = self.bus_index[&line.to_bus];
            adjacency[f].push(t);
            adjacency[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([self.slack]);
        seen[self.slack] = true;
        while let Some(k) = queue.pop_front() {
            for &m in &adjacency[k] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}
