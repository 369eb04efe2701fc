//! Equal-count binning, Brier score and reliability-diagram output.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CalibrationError;
use crate::grid::SecurityLabel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub mean_value: f64,
    pub secure_fraction: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBins {
    pub bins: Vec<ReliabilityBin>,
    pub brier: f64,
}

/// Sorts by value, splits into `n_bins` contiguous groups (the first
/// `len % n_bins` get one extra member) and averages the squared gap between
/// mean value and secure fraction.
pub fn brier_score(
    values: &[f64],
    labels: &[SecurityLabel],
    n_bins: usize,
) -> Result<ReliabilityBins, CalibrationError> {
    if values.len() != labels.len() {
        return Err(CalibrationError::InvalidInput(
            "values and labels differ in length".into(),
        ));
    }
    if n_bins == 0 || n_bins > values.len() {
        return Err(CalibrationError::InsufficientData(format!(
            "{} bins requested for {} examples",
            n_bins,
            values.len()
        )));
    }
    let mut order: Vec<(f64, u8)> = values.iter().zip(labels).map(|(&v, l)| (v, l.as_u8())).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let base = order.len() / n_bins;
    let extra = order.len() % n_bins;
    let mut bins = Vec::with_capacity(n_bins);
    let mut start = 0;
    for k in 0..n_bins {
        let size = base + usize::from(k < extra);
        let chunk = &order[start..start + size];
        start += size;
        let mean_value = chunk.iter().map(|c| c.0).sum::<f64>() / size as f64;
        let secure_fraction = chunk.iter().filter(|c| c.1 == 1).count() as f64 / size as f64;
        bins.push(ReliabilityBin {
            mean_value,
            secure_fraction,
            count: size,
        });
    }
    let brier = bins
        .iter()
        .map(|b| (b.mean_value - b.secure_fraction).powi(2))
        .sum::<f64>()
        / n_bins as f64;
    Ok(ReliabilityBins { bins, brier })
}

/// `bin,mean_value,secure_fraction,count` with 1-based bin numbers.
pub fn write_reliability_csv(bins: &ReliabilityBins, path: &Path) -> Result<(), CalibrationError> {
    let io = |e: std::io::Error| CalibrationError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(["bin", "mean_value", "secure_fraction", "count"])
        .map_err(|e| io(e.into()))?;
    for (k, b) in bins.bins.iter().enumerate() {
        w.write_record([
            (k + 1).to_string(),
            b.mean_value.to_string(),
            b.secure_fraction.to_string(),
            b.count.to_string(),
        ])
        .map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

/// Reads a reliability CSV back; the Brier score is recomputed from the bins.
pub fn read_reliability_csv(path: &Path) -> Result<ReliabilityBins, CalibrationError> {
    let bad = |m: String| CalibrationError::InvalidInput(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut bins = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 4 {
            return Err(bad(format!("row {} has {} fields", k + 1, rec.len())));
        }
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(format!("row {}: {e}", k + 1)));
        if num(0)? != (k + 1) as f64 {
            return Err(bad(format!("row {} is numbered {}", k + 1, &rec[0])));
        }
        bins.push(ReliabilityBin {
            mean_value: num(1)?,
            secure_fraction: num(2)?,
            count: rec[3].parse().map_err(|e| bad(format!("row {}: {e}", k + 1)))?,
        });
    }
    if bins.is_empty() {
        return Err(bad("no bins".into()));
    }
    let brier = bins
        .iter()
        .map(|b| (b.mean_value - b.secure_fraction).powi(2))
        .sum::<f64>()
        / bins.len() as f64;
    Ok(ReliabilityBins { bins, brier })
}

#[cfg(test)]
mod tests {
    use super::*;
    use SecurityLabel::{Insecure, Secure};

    #[test]
    fn hand_computed_two_bins() {
        let r = brier_score(&[0.9, 0.1, 0.8, 0.2], &[Secure, Insecure, Secure, Insecure], 2).unwrap();
        assert!((r.brier - 0.0225).abs() < 1e-15);
        assert_eq!(r.bins[0].count, 2);
    }

    #[test]
    fn extremes() {
        let r = brier_score(&[1.0; 6], &[Insecure; 6], 3).unwrap();
        assert_eq!(r.brier, 1.0);
        let values = [0.0, 0.0, 0.5, 0.5, 1.0, 1.0];
        let labels = [Insecure, Insecure, Secure, Insecure, Secure, Secure];
        assert_eq!(brier_score(&values, &labels, 3).unwrap().brier, 0.0);
    }

    #[test]
    fn remainder_goes_to_first_bins() {
        let values: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let labels = vec![Secure; 11];
        let r = brier_score(&values, &labels, 3).unwrap();
        let counts: Vec<usize> = r.bins.iter().map(|b| b.count).collect();
        assert_eq!(counts, vec![4, 4, 3]);
        assert!(brier_score(&values, &labels, 12).is_err());
        assert!(brier_score(&values, &labels, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let r = brier_score(&[0.1, 0.9], &[Insecure, Secure], 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rel.csv");
        write_reliability_csv(&r, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "bin,mean_value,secure_fraction,count\n1,0.1,0,1\n2,0.9,1,1\n");
        assert_eq!(read_reliability_csv(&p).unwrap(), r);
    }

    #[test]
    fn reliability_reader_rejects_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rel.csv");
        std::fs::write(&p, "bin,mean_value,secure_fraction,count\n2,0.1,0,1\n").unwrap();
        assert!(read_reliability_csv(&p).is_err());
        std::fs::write(&p, "bin,mean_value,secure_fraction,count\n").unwrap();
        assert!(read_reliability_csv(&p).is_err());
    }
}
