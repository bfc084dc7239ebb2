//! Latency tables as text and CSV.

use std::fmt::Write as _;

use thiserror::Error;

use super::latency::LatencyStats;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report needs at least one channel")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("csv is not utf-8")]
    Utf8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Report {
    pub text: String,
    pub csv: String,
}

/// Text rows are `modality mean std min max`: mean, min and max as integers,
/// std with one decimal, all in ms. The CSV keeps full precision and `n`.
pub fn table1_report(stats: &[LatencyStats]) -> Result<Table1Report, ReportError> {
    if stats.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut text = String::from("modality mean std min max\n");
    for s in stats {
        writeln!(
            text,
            "{} {:.0} {:.1} {:.0} {:.0}",
            s.channel, s.mean, s.std, s.min, s.max
        )
        .expect("string write");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in stats {
        w.serialize(s)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?;
    let csv = String::from_utf8(bytes).map_err(|_| ReportError::Utf8)?;
    Ok(Table1Report { text, csv })
}

pub fn parse_stats_csv(text: &str) -> Result<Vec<LatencyStats>, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}
