use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::Result;

/// Serializable snapshot of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub n: usize,
    pub history: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
    pub residuals: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn to_record(&self) -> TrajectoryRecord {
        TrajectoryRecord {
            n: self.n,
            history: self.history.clone(),
            states: self.states().map(<[f64]>::to_vec).collect(),
            residuals: self.residuals.chunks(self.n).map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn from_record(r: TrajectoryRecord) -> Result<Self> {
        Trajectory::from_parts(r.states, r.residuals, r.history)
    }

    /// Header `k, x_0.., delta_0.., M, m, d`; one row per state. The last row has no residual.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["k".to_string()];
        header.extend((0..self.n).map(|i| format!("x_{i}")));
        header.extend((0..self.n).map(|i| format!("delta_{i}")));
        header.extend(["M", "m", "d"].map(String::from));
        wtr.write_record(&header)?;
        for k in 0..=self.steps() {
            let mut row = vec![k.to_string()];
            row.extend(self.state(k).iter().map(f64::to_string));
            if k < self.steps() {
                row.extend(self.residual(k).iter().map(f64::to_string));
            } else {
                row.extend(std::iter::repeat_n(String::new(), self.n));
            }
            row.push(self.max(k).to_string());
            row.push(self.min(k).to_string());
            row.push(self.diameter(k).to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}
