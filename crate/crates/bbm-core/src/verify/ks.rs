//! Sample-versus-reference statistics used by the check suites.

use crate::{Error, Result};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// One-sample Kolmogorov–Smirnov statistic of `samples` against the CDF `F`.
///
/// `F` must be a distribution function (nondecreasing, range `[0,1]`). It
/// may carry atoms and the samples may be tied: both step functions are
/// compared through their one-sided limits at each distinct sample value
/// (`F(x⁻)` is read one ulp below `x`), which is where the supremum of
/// `|F_n − F|` is attained.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("KS statistic of an empty sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("KS samples must not contain NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let checked = |x: f64| -> Result<f64> {
        let f = cdf(x);
        if !(0.0..=1.0 + 1e-12).contains(&f) {
            return Err(Error::InvalidInput(format!(
                "reference CDF returned {f} at x={x}"
            )));
        }
        Ok(f)
    };
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        // Empirical CDF is i/n just left of x and j/n from x onward.
        d = d.max((checked(x)? - j as f64 / n).abs());
        d = d.max((checked(x.next_down())? - i as f64 / n).abs());
        i = j;
    }
    Ok(d)
}

/// Pearson chi-square statistic and upper-tail p-value for observed counts
/// against expected counts. Cells with expected count below 5 are pooled
/// into their right neighbor (tail pooling); degrees of freedom are
/// `pooled cells − 1`.
pub fn chi_square_p(observed: &[u64], expected: &[f64]) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::InvalidInput(
            "chi-square needs equal-length nonempty count vectors".into(),
        ));
    }
    if expected.iter().any(|&e| !e.is_finite() || e < 0.0) {
        return Err(Error::InvalidInput(
            "expected counts must be finite and nonnegative".into(),
        ));
    }
    // Pool from the right so sparse tail cells merge until they reach 5.
    let mut obs_pooled: Vec<f64> = Vec::new();
    let mut exp_pooled: Vec<f64> = Vec::new();
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for (&o, &e) in observed.iter().zip(expected).rev() {
        acc_o += o as f64;
        acc_e += e;
        if acc_e >= 5.0 {
            obs_pooled.push(acc_o);
            exp_pooled.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        // Leftover head mass joins the last pooled cell (the leftmost).
        if let (Some(o), Some(e)) = (obs_pooled.last_mut(), exp_pooled.last_mut()) {
            *o += acc_o;
            *e += acc_e;
        } else {
            return Err(Error::InvalidInput(
                "expected counts too small to form a single chi-square cell".into(),
            ));
        }
    }
    if obs_pooled.len() < 2 {
        return Err(Error::InvalidInput(
            "chi-square needs at least two cells after pooling".into(),
        ));
    }
    let stat: f64 = obs_pooled
        .iter()
        .zip(&exp_pooled)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = (obs_pooled.len() - 1) as f64;
    let dist = ChiSquared::new(dof)
        .map_err(|e| Error::InvalidInput(format!("chi-square dof {dof}: {e}")))?;
    Ok((stat, 1.0 - dist.cdf(stat)))
}

/// Pearson correlation coefficient of two equal-length samples.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput(
            "correlation needs two samples of equal length >= 2".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Domain(
            "correlation undefined for a constant sample".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput(
            "slope needs two samples of equal length >= 2".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return Err(Error::Domain("slope undefined for constant abscissa".into()));
    }
    Ok(sxy / sxx)
}
