//! Challenge bookkeeping around the kernel: categories, verification,
//! the dense reference evaluator, rates and reports.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::engine::Mode;
use crate::error::{Error, Result};
use crate::model::{CategorySet, FeatureBatch, NetworkModel};

/// Rows (1-based) of the final activations holding any stored entry.
pub fn categorize(y: &FeatureBatch) -> CategorySet {
    let m = y.matrix();
    let rows = (0..m.n_rows())
        .filter(|&r| m.row_nnz(r) > 0)
        .map(|r| r + 1)
        .collect();
    CategorySet::from_sorted(rows).expect("row indices ascend")
}

/// Row-major dense matrix used by the reference evaluator.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_batch(y: &FeatureBatch) -> Self {
        let m = y.matrix();
        DenseMatrix {
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
            data: m.to_dense(),
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    /// 1-based indices of rows with any positive entry.
    pub fn categories(&self) -> CategorySet {
        let rows = (0..self.n_rows)
            .filter(|&r| self.row(r).iter().any(|&v| v > 0.0))
            .map(|r| r + 1)
            .collect();
        CategorySet::from_sorted(rows).expect("row indices ascend")
    }
}

/// Largest network width the reference evaluator accepts.
pub const ORACLE_MAX_NEURONS: usize = 4096;
/// Largest activation buffer (entries) the reference evaluator accepts.
pub const ORACLE_MAX_ENTRIES: usize = 1 << 28;

/// Plain dense evaluation of the network, written to mirror the reference
/// loop literally: `Z = Y W` summed in ascending inner index, bias added
/// where `Z` is non-zero, negatives zeroed, values above `ymax` clamped.
pub fn oracle_infer(model: &NetworkModel, y0: &DenseMatrix, ymax: f64) -> Result<DenseMatrix> {
    let n = model.neurons();
    if n > ORACLE_MAX_NEURONS || y0.n_rows.saturating_mul(n) > ORACLE_MAX_ENTRIES {
        return Err(Error::Capacity(format!(
            "reference evaluator is limited to {ORACLE_MAX_NEURONS} neurons and {ORACLE_MAX_ENTRIES} activations"
        )));
    }
    if y0.n_cols != n {
        return Err(Error::Shape(format!(
            "input has {} columns, model has {} neurons",
            y0.n_cols, n
        )));
    }
    let mut y = y0.clone();
    let mut w = vec![0.0f64; n * n];
    for layer in model.layers() {
        w.iter_mut().for_each(|v| *v = 0.0);
        for (r, c, v) in layer.weights.iter() {
            w[r * n + c] = v;
        }
        let mut z = DenseMatrix::zeros(y.n_rows, n);
        for i in 0..y.n_rows {
            let z_row = &mut z.data[i * n..(i + 1) * n];
            for k in 0..n {
                let y_ik = y.data[i * n + k];
                let w_row = &w[k * n..(k + 1) * n];
                for j in 0..n {
                    z_row[j] += y_ik * w_row[j];
                }
            }
        }
        for v in z.data.iter_mut() {
            let mask = if *v != 0.0 { 1.0 } else { 0.0 };
            *v += mask * layer.bias;
            if *v < 0.0 {
                *v = 0.0;
            }
            if *v > ymax {
                *v = ymax;
            }
        }
        y = z;
    }
    Ok(y)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub matches: bool,
    /// Computed but not in the truth set.
    pub false_positives: CategorySet,
    /// In the truth set but not computed.
    pub false_negatives: CategorySet,
}

impl VerifyReport {
    pub fn summary(&self) -> String {
        if self.matches {
            return "categories match".into();
        }
        let plural = |n: usize| if n == 1 { "" } else { "s" };
        let fp = self.false_positives.len();
        let fn_ = self.false_negatives.len();
        format!(
            "{fp} false positive{}, {fn_} false negative{}",
            plural(fp),
            plural(fn_)
        )
    }
}

pub fn verify(computed: &CategorySet, truth: &CategorySet) -> VerifyReport {
    let false_positives = computed.difference(truth);
    let false_negatives = truth.difference(computed);
    VerifyReport {
        matches: false_positives.is_empty() && false_negatives.is_empty(),
        false_positives,
        false_negatives,
    }
}

/// Inputs times connections per second.
pub fn rate(inputs: u64, connections: u64, seconds: f64) -> Result<f64> {
    if !(seconds > 0.0 && seconds.is_finite()) {
        return Err(Error::Parameter(format!(
            "elapsed time {seconds} must be positive"
        )));
    }
    Ok(inputs as f64 * connections as f64 / seconds)
}

/// One measured configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub neurons: usize,
    pub layers: usize,
    pub connections: u64,
    pub inputs: u64,
    pub seconds: f64,
    pub rate: f64,
    pub mode: Mode,
    pub workers: usize,
    /// Free-text processor description.
    #[serde(default)]
    pub machine: String,
    /// "ok", or why the cell failed.
    #[serde(default = "ok_status")]
    pub status: String,
}

fn ok_status() -> String {
    "ok".into()
}

impl BenchReport {
    pub fn new(
        neurons: usize,
        layers: usize,
        connections: u64,
        inputs: u64,
        seconds: f64,
        mode: Mode,
        workers: usize,
    ) -> Result<Self> {
        Ok(BenchReport {
            neurons,
            layers,
            connections,
            inputs,
            seconds,
            rate: rate(inputs, connections, seconds)?,
            mode,
            workers,
            machine: String::new(),
            status: ok_status(),
        })
    }

    pub fn failed(neurons: usize, layers: usize, mode: Mode, workers: usize, reason: &str) -> Self {
        BenchReport {
            neurons,
            layers,
            connections: 0,
            inputs: 0,
            seconds: 0.0,
            rate: 0.0,
            mode,
            workers,
            machine: String::new(),
            status: reason.replace(['\t', '\n'], " "),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    #[default]
    Tsv,
    Json,
}

pub const REPORT_COLUMNS: [&str; 10] = [
    "neurons",
    "layers",
    "connections",
    "inputs",
    "seconds",
    "rate",
    "mode",
    "workers",
    "machine",
    "status",
];

pub fn emit_report(
    reports: &[BenchReport],
    format: ReportFormat,
    sink: &mut impl Write,
) -> Result<()> {
    match format {
        ReportFormat::Tsv => {
            writeln!(sink, "{}", REPORT_COLUMNS.join("\t"))?;
            for r in reports {
                writeln!(
                    sink,
                    "{}\t{}\t{}\t{}\t{:.6}\t{:.6e}\t{}\t{}\t{}\t{}",
                    r.neurons,
                    r.layers,
                    r.connections,
                    r.inputs,
                    r.seconds,
                    r.rate,
                    r.mode,
                    r.workers,
                    r.machine.replace(['\t', '\n'], " "),
                    r.status
                )?;
            }
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *sink, reports).map_err(std::io::Error::from)?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SparseMatrix, Triple};

    fn cats(v: &[usize]) -> CategorySet {
        CategorySet::from_sorted(v.to_vec()).unwrap()
    }

    #[test]
    fn categorize_rows() {
        assert!(categorize(&FeatureBatch::new(SparseMatrix::empty(4, 4))).is_empty());
        let t = [
            Triple::new(2, 1, 1.0),
            Triple::new(7, 3, 0.5),
            Triple::new(7, 4, 2.0),
        ];
        let y = FeatureBatch::new(SparseMatrix::from_triples(&t, 8, 4).unwrap());
        assert_eq!(categorize(&y), cats(&[2, 7]));
    }

    #[test]
    fn verify_cases() {
        assert!(verify(&cats(&[1, 2]), &cats(&[1, 2])).matches);
        let r = verify(&cats(&[1, 2]), &cats(&[2, 3]));
        assert!(!r.matches);
        assert_eq!(r.false_positives, cats(&[1]));
        assert_eq!(r.false_negatives, cats(&[3]));
        assert_eq!(r.summary(), "1 false positive, 1 false negative");
        assert!(verify(&cats(&[]), &cats(&[])).matches);
    }

    #[test]
    fn rate_arithmetic() {
        assert_eq!(rate(1, 1, 1.0).unwrap(), 1.0);
        assert!(rate(1, 1, 0.0).is_err());
        assert!(rate(1, 1, -2.0).is_err());
        let r = rate(60_000, 3_932_160, 626.0).unwrap();
        assert!((r / 376e6 - 1.0).abs() < 0.005, "{r}");
        let r = rate(60_000, 15_728_640, 2440.0).unwrap();
        assert!((r / 386e6 - 1.0).abs() < 0.005, "{r}");
    }

    #[test]
    fn oracle_basics() {
        let w = SparseMatrix::from_triples(&[Triple::new(1, 1, 1.0), Triple::new(2, 2, 1.0)], 2, 2)
            .unwrap();
        let model = NetworkModel::new(
            2,
            vec![crate::model::LayerWeights {
                weights: w,
                bias: 0.0,
            }],
        )
        .unwrap();
        let zero = DenseMatrix::zeros(3, 2);
        assert_eq!(oracle_infer(&model, &zero, 32.0).unwrap(), zero);
        let mut one = DenseMatrix::zeros(1, 2);
        one.data[1] = 1.0;
        assert_eq!(oracle_infer(&model, &one, 32.0).unwrap(), one);
        assert!(matches!(
            oracle_infer(&model, &DenseMatrix::zeros(1, 3), 32.0),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn report_shapes() {
        let mut out = Vec::new();
        emit_report(&[], ReportFormat::Tsv, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);

        let reports: Vec<_> = [1, 2, 4]
            .iter()
            .map(|&w| {
                BenchReport::new(1024, 120, 3_932_160, 1000, 2.0, Mode::DataParallel, w).unwrap()
            })
            .collect();
        let mut out = Vec::new();
        emit_report(&reports, ReportFormat::Tsv, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0]
            .starts_with("neurons\tlayers\tconnections\tinputs\tseconds\trate\tmode\tworkers"));
        assert!(lines[3].starts_with("1024\t120\t3932160\t1000\t2.000000\t"));

        let mut out = Vec::new();
        emit_report(&reports[..1], ReportFormat::Json, &mut out).unwrap();
        let back: Vec<BenchReport> = serde_json::from_slice(&out).unwrap();
        assert_eq!(back, reports[..1]);
    }
}
