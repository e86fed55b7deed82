//! Text renderings of reports. Floats use the shortest representation that
//! round-trips, so equal results give byte-identical output.

use cvxlab_core::domains::LeviScanReport;
use cvxlab_core::ModulusCurve;
use serde::Serialize;

/// `err_flag` bits in curve CSV rows.
pub const FLAG_QUAD_WARNING: u8 = 1;
pub const FLAG_EMPTY: u8 = 2;

pub fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, String> {
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

/// `eps,value,budget,err_flag`, one row per grid point. `value` is the
/// monotone envelope reported by the curve.
pub fn curve_csv(c: &ModulusCurve) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["eps", "value", "budget", "err_flag"]).map_err(|e| e.to_string())?;
    for (pt, v) in c.points.iter().zip(&c.values) {
        let flag = if pt.quad_warning { FLAG_QUAD_WARNING } else { 0 } | if pt.empty { FLAG_EMPTY } else { 0 };
        w.write_record([pt.eps.to_string(), v.to_string(), c.budget.to_string(), flag.to_string()])
            .map_err(|e| e.to_string())?;
    }
    finish(w)
}

/// `index,re1,im1,…,min_eigenvalue,skipped`, one row per boundary sample.
pub fn scan_csv(r: &LeviScanReport) -> Result<String, String> {
    let n = r.argmin.dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["index".to_string()];
    for k in 1..=n {
        head.push(format!("re{k}"));
        head.push(format!("im{k}"));
    }
    head.push("min_eigenvalue".into());
    head.push("skipped".into());
    w.write_record(&head).map_err(|e| e.to_string())?;
    for (i, s) in r.samples.iter().enumerate() {
        let mut row = vec![i.to_string()];
        for z in s.point.as_slice() {
            row.push(z.re.to_string());
            row.push(z.im.to_string());
        }
        row.push(s.min_eigenvalue.map(|v| v.to_string()).unwrap_or_default());
        row.push(s.skipped.clone().unwrap_or_default());
        w.write_record(&row).map_err(|e| e.to_string())?;
    }
    finish(w)
}
