use std::f64::consts::PI;

use super::{CsiLink, Matrix, PreprocessError, Window};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut d = x % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Phase difference between adjacent antenna pairs,
/// `wrap(angle(H[a+1]) - angle(H[a]))`, as a `[(A-1)*S][T_w]` matrix.
pub fn phase_difference(link: &CsiLink<'_>, window: Window) -> Result<Matrix, PreprocessError> {
    if link.antenna_pairs < 2 {
        return Err(PreprocessError::TooFewAntennas(link.antenna_pairs));
    }
    link.check_window(window)?;
    let mut out = Matrix::zeros((link.antenna_pairs - 1) * link.subcarriers, window.len);
    for a in 0..link.antenna_pairs - 1 {
        for s in 0..link.subcarriers {
            let lo = link.series(a, s, window);
            let hi = link.series(a + 1, s, window);
            let row = out.row_mut(a * link.subcarriers + s);
            for ((o, l), h) in row.iter_mut().zip(lo).zip(hi) {
                let pl = (l.im as f64).atan2(l.re as f64);
                let ph = (h.im as f64).atan2(h.re as f64);
                *o = wrap_phase(ph - pl);
            }
        }
    }
    Ok(out)
}

/// CSI magnitude as a `[A*S][T_w]` matrix.
pub fn amplitude_matrix(link: &CsiLink<'_>, window: Window) -> Result<Matrix, PreprocessError> {
    link.check_window(window)?;
    let mut out = Matrix::zeros(link.antenna_pairs * link.subcarriers, window.len);
    for a in 0..link.antenna_pairs {
        for s in 0..link.subcarriers {
            let src = link.series(a, s, window);
            for (o, c) in out.row_mut(a * link.subcarriers + s).iter_mut().zip(src) {
                *o = (c.re as f64).hypot(c.im as f64);
            }
        }
    }
    Ok(out)
}
