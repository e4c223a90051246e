use std::io::Write;

use crate::error::Result;

/// One CSV row: identifying keys followed by estimate, error, reference and margin.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub keys: Vec<(&'static str, String)>,
    pub estimate: f64,
    pub std_error: f64,
    pub reference: f64,
    pub margin: f64,
}

/// Reports that flatten into [`ReportRow`]s.
pub trait Report {
    fn rows(&self) -> Vec<ReportRow>;
}

/// Write `# ` comment lines, a header and the rows.
pub fn write_report_csv(rows: &[ReportRow], comments: &[String], mut out: impl Write) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = rows.first().map(|r| r.keys.iter().map(|k| k.0).collect()).unwrap_or_default();
    header.extend(["estimate", "std_error", "reference", "margin"]);
    w.write_record(&header).map_err(std::io::Error::from)?;
    for r in rows {
        let mut rec: Vec<String> = r.keys.iter().map(|k| k.1.clone()).collect();
        rec.extend([r.estimate, r.std_error, r.reference, r.margin].iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

/// Sample mean and standard error of the mean (0 for a single value).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rows = vec![ReportRow {
            keys: vec![("n", "10".into()), ("m", "2".into())],
            estimate: -0.5,
            std_error: 0.01,
            reference: -0.4,
            margin: -0.1,
        }];
        let mut buf = Vec::new();
        write_report_csv(&rows, &["seed = 1".into()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# seed = 1\nn,m,estimate,std_error,reference,margin\n10,2,-0.5,0.01,-0.4,-0.1\n");
    }

    #[test]
    fn mean_and_se_values() {
        assert_eq!(mean_and_se(&[2.0]), (2.0, 0.0));
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
