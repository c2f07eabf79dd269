// Which magnitude/phase errors still allow a given compensated rejection,
// with and without IF hybrid.

use sideband::analysis::{allowed_interval, systematic_contour};
use sideband::Result;

pub fn run_example() -> Result<Vec<(f64, Option<f64>, f64, f64)>> {
    let mut rows = Vec::new();
    for target in [30.0, 40.0] {
        println!("target {target} dB, dphi = 0:");
        for m_a in [None, Some(3.0), Some(7.0), Some(10.0), Some(15.0), Some(20.0), Some(30.0)] {
            let (lo, hi) = allowed_interval(target, m_a)?;
            let label = m_a.map_or("no hybrid".to_string(), |m| format!("M_A {m} dB"));
            println!("  {label:>10}: x in [{lo:.5}, {hi:.5}]");
            rows.push((target, m_a, lo, hi));
        }
    }
    let c = systematic_contour(40.0, Some(20.0), 37)?;
    println!("40 dB contour with M_A = 20 dB, every 5 degrees:");
    for r in &c.rows {
        println!("  {:6.1}  {:.5}  {:.5}", r.dphi_deg, r.x_lo, r.x_hi);
    }
    Ok(rows)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
