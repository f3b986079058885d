use super::{rapp_pout_dbm, CurvePoint, OracleError, RappParams};

const S_MIN: f64 = 0.1;
const S_MAX: f64 = 20.0;
const GRID_STEP: f64 = 0.05;
const S_TOLERANCE: f64 = 1e-4;
const MIN_COMPRESSION_DB: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section_min<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> GoldenResult
where
    F: FnMut(f64) -> f64,
{
    // 1/φ
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    if hi < lo {
        core::mem::swap(&mut lo, &mut hi);
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while hi - lo > tol && iterations < 500 {
        iterations += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    GoldenResult { x, fx, iterations }
}

fn sum_squared_error(points: &[CurvePoint], g_db: f64, psat_dbm: f64, s: f64) -> f64 {
    let params = RappParams::new(g_db, psat_dbm, s);
    points
        .iter()
        .map(|p| {
            let r = rapp_pout_dbm(p.pin_dbm, &params) - p.pout_dbm;
            r * r
        })
        .sum()
}

/// Least-squares estimate of the Rapp smoothness factor from sampled curve
/// points, with gain and saturation power held fixed.
///
/// Scans `s ∈ [0.1, 20]` on a 0.05 grid, then refines around the best grid
/// cell by golden-section search until the bracket is below `1e-4`.
///
/// At least one point must show 0.5 dB of compression; otherwise every `s`
/// fits the data equally well and the problem is rejected as ill-conditioned.
pub fn fit_smoothness(points: &[CurvePoint], g_db: f64, psat_dbm: f64) -> Result<f64, OracleError> {
    if points.is_empty() {
        return Err(OracleError::Empty);
    }
    if points.len() < 2 {
        return Err(OracleError::InvalidParams("need at least two curve points"));
    }
    if let Some(i) = points
        .iter()
        .position(|p| !(p.pin_dbm.is_finite() && p.pout_dbm.is_finite()))
    {
        return Err(OracleError::NonFinite(i));
    }
    if !(g_db.is_finite() && psat_dbm.is_finite()) {
        return Err(OracleError::InvalidParams("gain and saturation power must be finite"));
    }
    let max_compression_db = points
        .iter()
        .map(|p| p.pin_dbm + g_db - p.pout_dbm)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_compression_db < MIN_COMPRESSION_DB {
        return Err(OracleError::IllConditioned { max_compression_db });
    }

    let cells = libm::round((S_MAX - S_MIN) / GRID_STEP) as usize;
    let grid_s = |i: usize| S_MIN + GRID_STEP * i as f64;
    let objective = |s: f64| sum_squared_error(points, g_db, psat_dbm, s);

    let (best_i, best_err) = (0..=cells)
        .map(|i| (i, objective(grid_s(i))))
        .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });

    let lo = grid_s(best_i.saturating_sub(1));
    let hi = grid_s((best_i + 1).min(cells));
    let refined = golden_section_min(objective, lo, hi, S_TOLERANCE);
    Ok(if refined.fx <= best_err {
        refined.x
    } else {
        grid_s(best_i)
    })
}
