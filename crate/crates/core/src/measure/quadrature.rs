use serde::Serialize;

use super::MeasureError;

/// Settings for every numerical integral computed by the measure layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    /// Unbounded density supports are cut to this window.
    pub truncation: (f64, f64),
    /// Equal-width panels each integration range starts from.
    pub initial_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> QuadratureConfig {
        QuadratureConfig {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_depth: 60,
            truncation: (-1e6, 1e6),
            initial_panels: 16,
        }
    }
}

impl QuadratureConfig {
    /// Bit pattern identifying the config, for memo keys.
    pub(crate) fn fingerprint(&self) -> [u64; 6] {
        [
            self.abs_tol.to_bits(),
            self.rel_tol.to_bits(),
            self.max_depth as u64,
            self.truncation.0.to_bits(),
            self.truncation.1.to_bits(),
            self.initial_panels as u64,
        ]
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err("quadrature tolerances must be positive".into());
        }
        if !(self.truncation.0 < self.truncation.1) {
            return Err("truncation window is empty".into());
        }
        if self.initial_panels == 0 {
            return Err("need at least one initial panel".into());
        }
        Ok(())
    }
}

/// Extra cut points for very wide ranges, so that mass concentrated near
/// the origin is not stepped over by the first panels.
fn log_breaks(a: f64, b: f64) -> Vec<f64> {
    let mut pts = vec![a];
    if b - a > 100.0 {
        let mut mags: Vec<f64> = (-1..=15).map(|k| 10f64.powi(k)).collect();
        mags.retain(|m| *m < b.abs().max(a.abs()));
        let mut cuts: Vec<f64> = mags.iter().flat_map(|m| [-m, *m]).collect();
        cuts.push(0.0);
        cuts.retain(|c| *c > a && *c < b);
        cuts.sort_by(f64::total_cmp);
        pts.extend(cuts);
    }
    pts.push(b);
    pts
}

/// `∫_a^b f` by adaptive Simpson. The range is cut into panels (plus
/// logarithmic cuts for very wide ranges) and each panel bisected until
/// the Richardson error estimate falls under its share of the tolerance.
pub fn integrate<F>(f: &mut F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64, MeasureError>
where
    F: FnMut(f64) -> Result<f64, MeasureError>,
{
    if !(a < b) {
        return Ok(0.0);
    }
    let width = b - a;
    let mut total = 0.0;
    for seg in log_breaks(a, b).windows(2) {
        let (s0, s1) = (seg[0], seg[1]);
        let n = cfg.initial_panels.max(1);
        let h = (s1 - s0) / n as f64;
        for i in 0..n {
            let lo = s0 + h * i as f64;
            let hi = if i + 1 == n { s1 } else { s0 + h * (i + 1) as f64 };
            if !(lo < hi) {
                continue;
            }
            let share = (hi - lo) / width;
            let fa = f(lo)?;
            let fb = f(hi)?;
            let m = 0.5 * (lo + hi);
            let fm = f(m)?;
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            let tol = (cfg.abs_tol * share).max(f64::MIN_POSITIVE);
            total += refine(f, lo, hi, fa, fm, fb, whole, tol, 0, cfg)?;
        }
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    cfg: &QuadratureConfig,
) -> Result<f64, MeasureError>
where
    F: FnMut(f64) -> Result<f64, MeasureError>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    // Float resolution exhausted: the panel cannot be split further.
    if !(a < lm && lm < m && m < rm && rm < b) {
        return Ok(whole);
    }
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let allowed = tol.max(cfg.rel_tol * (left + right).abs());
    if delta.abs() <= 15.0 * allowed {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= cfg.max_depth {
        // Jumps never meet a width-proportional tolerance; at full depth the
        // remaining discrepancy is accepted if it is absolutely negligible.
        if delta.abs() <= cfg.abs_tol {
            return Ok(left + right);
        }
        return Err(MeasureError::QuadratureFailure {
            lo: a,
            hi: b,
            estimate_change: delta.abs(),
        });
    }
    Ok(refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1, cfg)?
        + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1, cfg)?)
}
