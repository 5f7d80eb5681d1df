use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use balis_core::{Error, Result};

use crate::records::TrialRecord;
use crate::sweep::SweepRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    SizeVsN,
    TfHistogram,
    OverlapHeatmap,
    QGrid,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::SizeVsN => "size-vs-n",
            PlotKind::TfHistogram => "Tf-histogram",
            PlotKind::OverlapHeatmap => "overlap-heatmap",
            PlotKind::QGrid => "q-grid",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [PlotKind::SizeVsN, PlotKind::TfHistogram, PlotKind::OverlapHeatmap, PlotKind::QGrid]
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown plot kind `{s}` (size-vs-n, Tf-histogram, overlap-heatmap, q-grid)"))
    }
}

/// Records a plot table can be built from.
#[derive(Debug, Clone, Copy)]
pub enum PlotData<'a> {
    Sweep(&'a [SweepRow]),
    Trials(&'a [TrialRecord]),
    Overlaps(&'a BTreeMap<(u64, u64), u64>),
    QGrid(&'a [(u64, u64, f64)]),
}

impl PlotData<'_> {
    fn label(&self) -> &'static str {
        match self {
            PlotData::Sweep(_) => "sweep",
            PlotData::Trials(_) => "trial",
            PlotData::Overlaps(_) => "overlap",
            PlotData::QGrid(_) => "q-grid",
        }
    }
}

#[derive(Serialize)]
struct SizeRow {
    n: usize,
    mean_size: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct TfRow {
    t_f: usize,
    count: u64,
}

#[derive(Serialize)]
struct OverlapRow {
    i1: u64,
    i2: u64,
    count: u64,
}

#[derive(Serialize)]
struct QRow {
    i1: u64,
    i2: u64,
    q: f64,
}

pub(crate) fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.into()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Flat CSV table with a header row for `kind`.
pub fn emit_plot_data(data: PlotData<'_>, kind: PlotKind) -> Result<String> {
    match (kind, data) {
        (PlotKind::SizeVsN, PlotData::Sweep(rows)) => {
            to_csv(rows.iter().map(|r| SizeRow { n: r.n, mean_size: r.mean_size, stderr: r.stderr }))
        }
        (PlotKind::TfHistogram, PlotData::Trials(records)) => {
            let mut hist = BTreeMap::new();
            records.iter().for_each(|r| *hist.entry(r.t_f).or_insert(0u64) += 1);
            to_csv(hist.into_iter().map(|(t_f, count)| TfRow { t_f, count }))
        }
        (PlotKind::OverlapHeatmap, PlotData::Overlaps(hist)) => {
            to_csv(hist.iter().map(|(&(i1, i2), &count)| OverlapRow { i1, i2, count }))
        }
        (PlotKind::QGrid, PlotData::QGrid(grid)) => to_csv(grid.iter().map(|&(i1, i2, q)| QRow { i1, i2, q })),
        (kind, data) => Err(Error::Config(format!("plot kind {kind} does not apply to {} records", data.label()))),
    }
}
