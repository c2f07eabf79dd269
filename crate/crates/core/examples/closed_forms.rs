// The compensated USB rejection from the general ratio expression and from
// the closed forms with and without IF hybrid.

use sideband::compensation::m_uc_closed_form;
use sideband::{m_uc_general, ComplexValue, Result, WorkingPoint};

pub fn run_example() -> Result<f64> {
    let mut worst: f64 = 0.0;
    println!("     x    dphi    M_A     closed dB   general dB");
    for (x, dphi, m_a) in [
        (1.01, 0.0, None),
        (0.98, 1.5, None),
        (1.2, 0.0, Some(100.0)),
        (0.9, -3.0, Some(31.6)),
        (1.05, 10.0, Some(1.0)),
    ] {
        let wp = WorkingPoint { x, dphi_deg: dphi, m_a };
        let closed = m_uc_closed_form(&wp)?;
        // the same point through the ratios: X1cal = X2cal = X
        let x_cal = match m_a {
            None => ComplexValue::new(0.0, 1.0),
            Some(m) => ComplexValue::new(m.sqrt(), 0.0),
        };
        let x_m = x_cal * ComplexValue::from_polar(x, dphi.to_radians());
        let general = m_uc_general(x_cal, x_cal, x_m)?;
        worst = worst.max((closed.linear() / general.linear() - 1.0).abs());
        println!(
            "{x:6.3} {dphi:7.2} {:>6} {:11.4} {:12.4}",
            m_a.map_or("-".to_string(), |m| format!("{m}")),
            closed.db(),
            general.db()
        );
    }
    println!("largest relative difference {worst:.2e}");
    Ok(worst)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
