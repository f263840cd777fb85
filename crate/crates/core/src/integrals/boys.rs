//! Boys function F_m(t) = ∫₀¹ u^{2m} exp(−t u²) du.

/// Largest order supported.
pub const MAX_ORDER: usize = 16;

const SWITCH: f64 = 25.0;

/// F_m(t) for a single order.
pub fn boys_function(m: usize, t: f64) -> f64 {
    let mut out = [0.0; MAX_ORDER + 1];
    boys_array(m, t, &mut out[..=m]);
    out[m]
}

/// Fill `out[k] = F_k(t)` for `k = 0..out.len()`.
///
/// Below the switch point the top order comes from the convergent series
/// `e^{-t} Σ (2t)^k / (2m+1)(2m+3)…(2m+2k+1)` and lower orders follow by
/// downward recursion. Above it `F_0` takes its asymptotic value
/// (the neglected erfc(√t) term is < 2e-12 there) and the upward recursion
/// is stable because 2t exceeds every 2m+1 in range.
pub fn boys_array(m_max: usize, t: f64, out: &mut [f64]) {
    assert!(m_max <= MAX_ORDER, "Boys order {m_max} exceeds {MAX_ORDER}");
    assert!(t >= 0.0, "Boys argument must be non-negative");
    debug_assert!(out.len() > m_max);
    let et = (-t).exp();
    if t < SWITCH {
        let m = m_max as f64;
        let mut term = 1.0 / (2.0 * m + 1.0);
        let mut sum = term;
        let mut k = 1.0;
        while term > sum * 1e-17 {
            term *= 2.0 * t / (2.0 * m + 2.0 * k + 1.0);
            sum += term;
            k += 1.0;
        }
        out[m_max] = et * sum;
        for j in (0..m_max).rev() {
            out[j] = (2.0 * t * out[j + 1] + et) / (2.0 * j as f64 + 1.0);
        }
    } else {
        out[0] = 0.5 * (std::f64::consts::PI / t).sqrt();
        for j in 0..m_max {
            out[j + 1] = ((2.0 * j as f64 + 1.0) * out[j] - et) / (2.0 * t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on a fine grid, independent of the series/recursion.
    fn quadrature(m: usize, t: f64) -> f64 {
        let n = 20_000;
        let h = 1.0 / n as f64;
        let f = |u: f64| u.powi(2 * m as i32) * (-t * u * u).exp();
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn zero_argument() {
        assert_eq!(boys_function(0, 0.0), 1.0);
        for m in 0..=MAX_ORDER {
            let expected = 1.0 / (2.0 * m as f64 + 1.0);
            assert!((boys_function(m, 0.0) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn f0_at_one_matches_quadrature() {
        let q = quadrature(0, 1.0);
        assert!((q - 0.746_824_132_812_427).abs() < 1e-13);
        assert!((boys_function(0, 1.0) - q).abs() < 1e-12);
    }

    #[test]
    fn matches_quadrature_across_switch() {
        for &t in &[1e-6, 0.3, 2.0, 7.5, 15.0, 24.9, 25.0, 25.1, 40.0, 80.0] {
            for m in [0, 1, 2, 4, 8] {
                let q = quadrature(m, t);
                let b = boys_function(m, t);
                assert!((q - b).abs() < 1e-12, "m={m} t={t}: {b} vs {q}");
            }
        }
    }
}
