//! Observation data and its CSV + JSON-sidecar serialisation.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation matrix `F` (`d_x × d_y`), so that `y = Fᵀ x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObsMatrix {
    d_x: usize,
    d_y: usize,
    entries: Vec<i64>, // row-major, d_x rows
}

impl ObsMatrix {
    pub fn identity(d: usize) -> Self {
        let mut entries = vec![0; d * d];
        for i in 0..d {
            entries[i * d + i] = 1;
        }
        Self { d_x: d, d_y: d, entries }
    }

    /// Observes the listed species only.
    pub fn select(d_x: usize, species: &[usize]) -> Self {
        let d_y = species.len();
        let mut entries = vec![0; d_x * d_y];
        for (col, &sp) in species.iter().enumerate() {
            entries[sp * d_y + col] = 1;
        }
        Self { d_x, d_y, entries }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let d_x = rows.len();
        let d_y = rows.first().map_or(0, Vec::len);
        if d_x == 0 || d_y == 0 || rows.iter().any(|r| r.len() != d_y) {
            return Err(Error::InvalidConfig("observation matrix must be a non-empty rectangle".into()));
        }
        Ok(Self {
            d_x,
            d_y,
            entries: rows.concat(),
        })
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.d_y).map(<[i64]>::to_vec).collect()
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn d_y(&self) -> usize {
        self.d_y
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.entries[row * self.d_y + col]
    }

    pub fn is_identity(&self) -> bool {
        self.d_x == self.d_y && *self == Self::identity(self.d_x)
    }

    /// `Fᵀ x`, written into `out`.
    #[inline]
    pub fn project_into(&self, x: &[i64], out: &mut [i64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = (0..self.d_x).map(|r| self.get(r, c) * x[r]).sum();
        }
    }

    pub fn project(&self, x: &[i64]) -> Vec<i64> {
        let mut out = vec![0; self.d_y];
        self.project_into(x, &mut out);
        out
    }

    /// `Fᵀ x == y` without allocating.
    #[inline]
    pub fn matches(&self, x: &[i64], y: &[i64]) -> bool {
        (0..self.d_y).all(|c| (0..self.d_x).map(|r| self.get(r, c) * x[r]).sum::<i64>() == y[c])
    }
}

/// Exact observations `y_t = Fᵀ x_t` at strictly increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    initial_time: f64,
    times: Vec<f64>,
    observations: Vec<Vec<i64>>,
    obs_matrix: ObsMatrix,
    complete: bool,
}

impl Dataset {
    pub fn new(times: Vec<f64>, observations: Vec<Vec<i64>>, obs_matrix: ObsMatrix) -> Result<Self> {
        Self::with_initial_time(0.0, times, observations, obs_matrix)
    }

    pub fn with_initial_time(
        initial_time: f64,
        times: Vec<f64>,
        observations: Vec<Vec<i64>>,
        obs_matrix: ObsMatrix,
    ) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidConfig("dataset needs at least one observation".into()));
        }
        if times.len() != observations.len() {
            return Err(Error::InvalidConfig("times and observations differ in length".into()));
        }
        let mut prev = initial_time;
        for &t in &times {
            if !(t > prev) {
                return Err(Error::InvalidConfig(format!("observation times must increase strictly ({t} after {prev})")));
            }
            prev = t;
        }
        if let Some(bad) = observations.iter().find(|y| y.len() != obs_matrix.d_y()) {
            return Err(Error::InvalidConfig(format!(
                "observation has dimension {}, expected {}",
                bad.len(),
                obs_matrix.d_y()
            )));
        }
        let complete = obs_matrix.is_identity();
        Ok(Self {
            initial_time,
            times,
            observations,
            obs_matrix,
            complete,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn initial_time(&self) -> f64 {
        self.initial_time
    }

    /// Start time of the zero-based interval `t`.
    pub fn interval_start(&self, t: usize) -> f64 {
        if t == 0 {
            self.initial_time
        } else {
            self.times[t - 1]
        }
    }

    pub fn interval_length(&self, t: usize) -> f64 {
        self.times[t] - self.interval_start(t)
    }

    pub fn observations(&self) -> &[Vec<i64>] {
        &self.observations
    }

    pub fn observation(&self, t: usize) -> &[i64] {
        &self.observations[t]
    }

    pub fn obs_matrix(&self) -> &ObsMatrix {
        &self.obs_matrix
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Copy with the observation at `t` replaced.
    pub fn with_observation(&self, t: usize, y: Vec<i64>) -> Result<Self> {
        let mut obs = self.observations.clone();
        obs[t] = y;
        Self::with_initial_time(self.initial_time, self.times.clone(), obs, self.obs_matrix.clone())
    }
}

/// JSON sidecar written next to a dataset CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub model: String,
    pub theta_true: Vec<f64>,
    pub x0: Vec<i64>,
    #[serde(rename = "F")]
    pub obs_matrix: Vec<Vec<i64>>,
    pub seed: u64,
}

/// Path of the sidecar belonging to `csv_path`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes `time,y1,...,yd` rows to `csv_path` and the sidecar next to it.
pub fn write_dataset(csv_path: &Path, data: &Dataset, meta: &DatasetMeta) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path)?;
    let mut header = vec!["time".to_string()];
    header.extend((1..=data.obs_matrix.d_y()).map(|i| format!("y{i}")));
    w.write_record(&header)?;
    for (t, y) in data.times.iter().zip(&data.observations) {
        let mut row = vec![format_time(*t)];
        row.extend(y.iter().map(i64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    let side = BufWriter::new(File::create(sidecar_path(csv_path))?);
    serde_json::to_writer_pretty(side, meta)?;
    Ok(())
}

fn format_time(t: f64) -> String {
    // Shortest round-trip representation keeps files byte-stable.
    format!("{t}")
}

/// Reads a dataset CSV and its sidecar.
pub fn read_dataset(csv_path: &Path) -> Result<(Dataset, DatasetMeta)> {
    let meta: DatasetMeta = serde_json::from_reader(BufReader::new(File::open(sidecar_path(csv_path))?))?;
    let obs_matrix = ObsMatrix::from_rows(&meta.obs_matrix)?;
    let mut r = csv::Reader::from_path(csv_path)?;
    let header = r.headers()?.clone();
    if header.get(0) != Some("time") || header.len() != obs_matrix.d_y() + 1 {
        return Err(Error::InvalidConfig(format!(
            "expected header time,y1..y{}, found {:?}",
            obs_matrix.d_y(),
            header
        )));
    }
    let mut times = Vec::new();
    let mut observations = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse_err = |f: &str| Error::InvalidConfig(format!("unparseable field `{f}`"));
        times.push(rec[0].parse::<f64>().map_err(|_| parse_err(&rec[0]))?);
        let y = rec
            .iter()
            .skip(1)
            .map(|f| f.parse::<i64>().map_err(|_| parse_err(f)))
            .collect::<Result<Vec<_>>>()?;
        observations.push(y);
    }
    Ok((Dataset::new(times, observations, obs_matrix)?, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completeness_follows_obs_matrix() {
        let d = Dataset::new(vec![1.0], vec![vec![3, 4]], ObsMatrix::identity(2)).unwrap();
        assert!(d.is_complete());
        let d = Dataset::new(vec![1.0], vec![vec![3]], ObsMatrix::select(2, &[0])).unwrap();
        assert!(!d.is_complete());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Dataset::new(vec![], vec![], ObsMatrix::identity(1)).is_err());
        assert!(Dataset::new(vec![1.0, 1.0], vec![vec![1], vec![1]], ObsMatrix::identity(1)).is_err());
        assert!(Dataset::new(vec![1.0], vec![vec![1, 2]], ObsMatrix::identity(1)).is_err());
    }

    #[test]
    fn projection_and_match() {
        let f = ObsMatrix::select(3, &[2, 0]);
        assert_eq!(f.project(&[5, 6, 7]), vec![7, 5]);
        assert!(f.matches(&[5, 6, 7], &[7, 5]));
        assert!(!f.matches(&[5, 6, 7], &[5, 7]));
    }

    #[test]
    fn csv_and_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let data = Dataset::new(vec![0.5, 1.0], vec![vec![3, 1], vec![2, 2]], ObsMatrix::identity(2)).unwrap();
        let meta = DatasetMeta {
            model: "lv".into(),
            theta_true: vec![0.5, 0.0025, 0.3],
            x0: vec![50, 50],
            obs_matrix: ObsMatrix::identity(2).rows(),
            seed: 11,
        };
        write_dataset(&path, &data, &meta).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time,y1,y2\n0.5,3,1\n"));
        let (back, meta_back) = read_dataset(&path).unwrap();
        assert_eq!(back, data);
        assert_eq!(meta_back, meta);
    }
}
