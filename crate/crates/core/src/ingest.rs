//! Observation ingest: region sampling from images, the observation table and
//! per-heart ΔE time series.

use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{apply_calibration, delta_e, srgb_to_lab, LabColor, LabOffset};
use crate::ppm::PixelGrid;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("region {region:?} is empty")]
    EmptyRegion { region: Region },
    #[error("region {region:?} exceeds the {width}x{height} image")]
    RegionOutOfBounds {
        region: Region,
        width: usize,
        height: usize,
    },
    #[error("observation table is missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("row {row}: unparseable date {value:?} (expected YYYY-MM-DD)")]
    BadDate { row: usize, value: String },
    #[error("row {row}: column {column} is not a finite number: {value:?}")]
    BadNumber {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("row {row}: {reason}")]
    Csv { row: usize, reason: String },
}

/// Rectangular pixel region; `x`, `y` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Region {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    fn check(&self, grid: &PixelGrid) -> Result<(), IngestError> {
        if self.w == 0 || self.h == 0 {
            return Err(IngestError::EmptyRegion { region: *self });
        }
        let fits = |start: usize, len: usize, limit: usize| start.checked_add(len).is_some_and(|end| end <= limit);
        if !fits(self.x, self.w, grid.width()) || !fits(self.y, self.h, grid.height()) {
            return Err(IngestError::RegionOutOfBounds {
                region: *self,
                width: grid.width(),
                height: grid.height(),
            });
        }
        Ok(())
    }
}

/// Mean CIELAB colour of a region, each pixel corrected by `offset`.
pub fn mean_lab_of_region<F: Scalar>(
    grid: &PixelGrid,
    region: Region,
    offset: LabOffset<F>,
) -> Result<LabColor<F>, IngestError> {
    region.check(grid)?;
    let mut sum = LabColor::new(F::zero(), F::zero(), F::zero());
    for y in region.y..region.y + region.h {
        for x in region.x..region.x + region.w {
            let px = grid.get(x, y).expect("region checked");
            let lab = apply_calibration(srgb_to_lab::<F>(px), offset);
            sum.l += lab.l;
            sum.a += lab.a;
            sum.b += lab.b;
        }
    }
    let n = F::from_count(region.w * region.h);
    Ok(LabColor::new(sum.l / n, sum.a / n, sum.b / n))
}

/// One dated, calibrated colour reading of a heart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub heart_id: String,
    pub date: NaiveDate,
    pub lab: LabColor<f64>,
    pub source: String,
}

const COLUMNS: [&str; 6] = ["heart_id", "date", "L", "a", "b", "source"];

/// Parses the observation table (`heart_id,date,L,a,b,source`).
///
/// Row numbers in errors are 1-based file lines, so the header is line 1.
pub fn load_observations(csv_bytes: &[u8]) -> Result<Vec<Observation>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(csv_bytes);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Csv {
            row: 1,
            reason: e.to_string(),
        })?
        .clone();
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or(IngestError::MissingColumn(name))?;
    }

    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| IngestError::Csv {
            row,
            reason: e.to_string(),
        })?;
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let date_text = field(1);
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d").map_err(|_| IngestError::BadDate {
            row,
            value: date_text.to_string(),
        })?;
        let number = |k: usize| -> Result<f64, IngestError> {
            field(k)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IngestError::BadNumber {
                    row,
                    column: COLUMNS[k],
                    value: field(k).to_string(),
                })
        };
        out.push(Observation {
            heart_id: field(0).to_string(),
            date,
            lab: LabColor::new(number(2)?, number(3)?, number(4)?),
            source: field(5).to_string(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub day_index: i64,
    pub delta_e: f64,
}

/// ΔE-versus-day trajectory of one heart, measured against fresh paint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeartSeries {
    pub heart_id: String,
    pub baseline: LabColor<f64>,
    pub start_date: NaiveDate,
    pub points: Vec<SeriesPoint>,
}

/// Groups observations by heart, in order of first appearance.
///
/// Same-day readings of one heart are averaged in LAB before the ΔE against
/// `baseline` is taken.
pub fn build_series(obs: &[Observation], baseline: LabColor<f64>) -> Vec<HeartSeries> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&Observation>> = HashMap::new();
    for o in obs {
        groups
            .entry(o.heart_id.as_str())
            .or_insert_with(|| {
                order.push(o.heart_id.as_str());
                Vec::new()
            })
            .push(o);
    }

    order
        .into_iter()
        .map(|id| {
            let mut rows = groups.remove(id).expect("grouped");
            rows.sort_by_key(|o| o.date);
            let start = rows[0].date;
            let points = rows
                .chunk_by(|a, b| a.date == b.date)
                .map(|same_day| {
                    let n = same_day.len() as f64;
                    let mean = LabColor::new(
                        same_day.iter().map(|o| o.lab.l).sum::<f64>() / n,
                        same_day.iter().map(|o| o.lab.a).sum::<f64>() / n,
                        same_day.iter().map(|o| o.lab.b).sum::<f64>() / n,
                    );
                    SeriesPoint {
                        day_index: (same_day[0].date - start).num_days(),
                        delta_e: delta_e(mean, baseline),
                    }
                })
                .collect();
            HeartSeries {
                heart_id: id.to_string(),
                baseline,
                start_date: start,
                points,
            }
        })
        .collect()
}
