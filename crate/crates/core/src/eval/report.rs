use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::band::Band;
use crate::error::{Error, Result};

use super::experiment::ExperimentConfig;
use super::metrics::{Confusion, Metrics};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub confusion: Confusion,
    pub metrics: Metrics,
}

/// Outcome of training on one fold's train subjects and scoring its test
/// subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repeat: usize,
    pub fold: usize,
    pub train_subjects: Vec<String>,
    pub test_subjects: Vec<String>,
    pub segment: LevelResult,
    pub subject: LevelResult,
    /// Mean training loss per epoch.
    pub train_loss: Vec<f64>,
}

impl FoldResult {
    pub fn level(&self, level: Level) -> &LevelResult {
        match level {
            Level::Segment => &self.segment,
            Level::Subject => &self.subject,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Segment,
    Subject,
}

impl Level {
    pub const BOTH: [Level; 2] = [Level::Segment, Level::Subject];

    pub fn name(self) -> &'static str {
        match self {
            Level::Segment => "segment",
            Level::Subject => "subject",
        }
    }
}

/// Mean and population standard deviation, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub accuracy: MeanStd,
}

impl LevelSummary {
    pub fn values(&self) -> [MeanStd; 4] {
        [self.precision, self.recall, self.f1, self.accuracy]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub segment: LevelSummary,
    pub subject: LevelSummary,
}

impl Summary {
    pub fn level(&self, level: Level) -> &LevelSummary {
        match level {
            Level::Segment => &self.segment,
            Level::Subject => &self.subject,
        }
    }
}

pub fn summarize(folds: &[FoldResult]) -> Result<Summary> {
    if folds.is_empty() {
        return Err(Error::EmptyReport("no folds".into()));
    }
    let level = |l: Level| {
        let col = |i: usize| -> MeanStd {
            let v: Vec<f64> = folds.iter().map(|f| 100.0 * f.level(l).metrics.values()[i]).collect();
            MeanStd::of(&v)
        };
        LevelSummary { precision: col(0), recall: col(1), f1: col(2), accuracy: col(3) }
    };
    Ok(Summary { segment: level(Level::Segment), subject: level(Level::Subject) })
}

/// Cross-validation results: every fold of every repeat plus the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub band: Band,
    pub config: ExperimentConfig,
    pub n_subjects: usize,
    pub n_segments: usize,
    /// Subjects dropped during preprocessing.
    pub skipped: Vec<String>,
    pub folds: Vec<FoldResult>,
    pub summary: Summary,
    /// Wall-clock seconds; only recorded on request so that reports from
    /// equal seeds stay byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

impl Report {
    pub fn validate(&self) -> Result<()> {
        if self.folds.is_empty() {
            return Err(Error::EmptyReport("no folds".into()));
        }
        for f in &self.folds {
            super::folds::check_disjoint(&f.train_subjects, &f.test_subjects)?;
            if f.subject.confusion.total() != f.test_subjects.len() as u64 {
                return Err(Error::EmptyReport(format!(
                    "repeat {} fold {}: subject confusion counts {} of {} subjects",
                    f.repeat,
                    f.fold,
                    f.subject.confusion.total(),
                    f.test_subjects.len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Report> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Report> {
        Report::from_json(&fs::read_to_string(path)?)
    }

    /// Header `repeat,fold,level,metric,value`; one row per fold, level and
    /// metric, values as fractions.
    pub fn to_csv(&self) -> Result<String> {
        self.validate()?;
        let mut out = String::from("repeat,fold,level,metric,value\n");
        for f in &self.folds {
            for level in Level::BOTH {
                for (name, v) in Metrics::NAMES.iter().zip(f.level(level).metrics.values()) {
                    writeln!(out, "{},{},{},{},{}", f.repeat, f.fold, level.name(), name, v).unwrap();
                }
            }
        }
        Ok(out)
    }

    /// Mean ± std table in percent.
    pub fn table(&self) -> String {
        let mut out = format!(
            "band {}  ({} subjects, {} segments, {} repeats × {} folds)\n",
            self.band, self.n_subjects, self.n_segments, self.config.n_repeats, self.config.k
        );
        writeln!(out, "{:<8} {:>15} {:>15} {:>15} {:>15}", "level", "precision", "recall", "f1", "accuracy").unwrap();
        for level in Level::BOTH {
            write!(out, "{:<8}", level.name()).unwrap();
            for m in self.summary.level(level).values() {
                write!(out, " {:>15}", format!("{:.2} ± {:.2}", m.mean, m.std)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    /// `.csv` → CSV, anything else → JSON.
    pub fn from_path(path: &Path) -> ReportFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

pub fn emit_report(report: &Report, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    report.validate()?;
    let text = match format {
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Csv => report.to_csv()?,
    };
    fs::write(path, text)?;
    Ok(())
}
