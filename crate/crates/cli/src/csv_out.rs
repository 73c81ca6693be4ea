//! CSV emission with a pinned schema and 17-significant-digit floats.

pub const RESULT_HEADER: &str =
    "mode,algorithm,kappa,delta,trial,iteration,err_unnorm,err_normdir,wall_ms,flags";

#[derive(Debug, Clone)]
pub struct ResultRecord {
    pub mode: String,
    pub algorithm: String,
    pub kappa: f64,
    pub delta: f64,
    pub trial: usize,
    pub iteration: usize,
    pub err_unnorm: f64,
    pub err_normdir: f64,
    pub wall_ms: f64,
    pub flags: String,
}

/// 17 significant digits, scientific notation.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl ResultRecord {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.mode,
            self.algorithm,
            fmt_float(self.kappa),
            fmt_float(self.delta),
            self.trial,
            self.iteration,
            fmt_float(self.err_unnorm),
            fmt_float(self.err_normdir),
            fmt_float(self.wall_ms),
            self.flags
        )
    }
}

pub fn records_to_csv(records: &[ResultRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(RESULT_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// The wall-time column varies run to run; zero it for byte-comparison uses.
pub fn records_to_csv_stable(records: &[ResultRecord]) -> String {
    let cleaned: Vec<ResultRecord> = records
        .iter()
        .map(|r| ResultRecord { wall_ms: 0.0, ..r.clone() })
        .collect();
    records_to_csv(&cleaned)
}
