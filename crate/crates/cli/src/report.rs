use std::io::{self, Write};

use thbfit::adaptive::IterationReport;

/// Scientific notation with 4 significant digits and a signed two-digit
/// exponent, e.g. `2.979e+01`.
pub fn sci4(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.3e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

fn elements(r: &IterationReport<2>) -> String {
    format!("{}x{}", r.elements[0], r.elements[1])
}

/// `M,elements,NDOF,e_max,e_RMS`, one row per iteration.
pub fn write_reports_csv<W: Write>(w: &mut W, reports: &[IterationReport<2>]) -> io::Result<()> {
    writeln!(w, "M,elements,NDOF,e_max,e_RMS")?;
    for r in reports {
        writeln!(w, "{},{},{},{},{}", r.levels, elements(r), r.ndof, sci4(r.e_max), sci4(r.e_rms))?;
    }
    Ok(())
}

/// Percentage of active functions fitted with each local degree.
pub fn degree_percentages(r: &IterationReport<2>) -> Vec<f64> {
    let total: usize = r.degree_counts.iter().sum();
    r.degree_counts.iter().map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 }).collect()
}

/// `M,NDOF,deg0,deg1,...` with percentages, one row per iteration.
pub fn write_degrees_csv<W: Write>(w: &mut W, reports: &[IterationReport<2>]) -> io::Result<()> {
    let width = reports.iter().map(|r| r.degree_counts.len()).max().unwrap_or(0);
    write!(w, "M,NDOF")?;
    for t in 0..width {
        write!(w, ",deg{t}")?;
    }
    writeln!(w)?;
    for r in reports {
        write!(w, "{},{}", r.levels, r.ndof)?;
        let pct = degree_percentages(r);
        for t in 0..width {
            write!(w, ",{:.6}", pct.get(t).copied().unwrap_or(0.0))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_formatting() {
        assert_eq!(sci4(29.79), "2.979e+01");
        assert_eq!(sci4(0.0005054), "5.054e-04");
        assert_eq!(sci4(0.0), "0.000e+00");
        assert_eq!(sci4(1.5e123), "1.500e+123");
    }

    #[test]
    fn one_row_per_report() {
        let r = IterationReport { levels: 1, elements: [15, 15], ndof: 289, e_max: 0.42, e_rms: 0.02, degree_counts: vec![1, 2, 286] };
        let mut buf = Vec::new();
        write_reports_csv(&mut buf, std::slice::from_ref(&r)).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "M,elements,NDOF,e_max,e_RMS\n1,15x15,289,4.200e-01,2.000e-02\n");
        assert!((degree_percentages(&r).iter().sum::<f64>() - 100.0).abs() <= 1e-3);
    }
}
