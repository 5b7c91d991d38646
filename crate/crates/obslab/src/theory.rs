//! Closed-form rates, thresholds, and constants for the fading and
//! solidifying obstacle regimes, plus an independent radial shooting oracle
//! for the annulus eigenvalue bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hölder/Sobolev exponents used by the Dirichlet-fading estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentTable {
    /// Hölder exponent (infinite for m = 2, 3)
    pub p: f64,
    /// conjugate exponent
    pub q: f64,
    /// Sobolev scaling exponent
    pub a: f64,
}

pub fn exponents(m: usize) -> ExponentTable {
    assert!(m >= 2, "dimension must be >= 2");
    match m {
        2 => ExponentTable { p: f64::INFINITY, q: 1.0, a: 1.0 },
        3 => ExponentTable { p: f64::INFINITY, q: 1.0, a: 1.5 },
        4 => ExponentTable { p: 8.0 / 3.0, q: 8.0 / 5.0, a: 1.25 },
        _ => ExponentTable { p: m as f64 / (m as f64 - 4.0), q: m as f64 / 4.0, a: 2.0 },
    }
}

/// Non-concentration constant of a ball pair at radius ratio `omega = eps/eta`
/// (flat geometry, K = 1). Rejects `omega > 1/2`.
pub fn tau(m: usize, omega: f64) -> Result<f64> {
    assert!(m >= 2);
    if !(omega > 0.0 && omega <= 0.5) {
        return Err(Error::Config(format!("tau needs 0 < omega <= 1/2, got {omega}")));
    }
    let base = 8.0f64.sqrt() * omega;
    Ok(if m == 2 { base * omega.ln().abs().sqrt() } else { base })
}

/// Predicted decay of the Neumann-fading defect (constant 1).
pub fn rate_neu_fading(m: usize, eps: f64, eta: f64) -> f64 {
    assert!(eps > 0.0 && eps < eta, "need 0 < eps < eta");
    let ratio = eps / eta;
    if m == 2 {
        ratio * (eta / eps).ln().sqrt()
    } else {
        ratio
    }
}

/// Obstacle regime by the capacity threshold `alpha = (m-2)/m` for the
/// schedule `eta = eps^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Fading,
    Critical,
    Solidifying,
}

pub fn capacity_regime(m: usize, alpha: f64) -> Regime {
    assert!(m >= 3, "the m = 2 threshold is logarithmic; evaluate schedules directly");
    let lhs = alpha * m as f64;
    let rhs = m as f64 - 2.0;
    if (lhs - rhs).abs() < 1e-12 {
        Regime::Critical
    } else if lhs < rhs {
        Regime::Fading
    } else {
        Regime::Solidifying
    }
}

/// True iff `alpha` is below the proven (for m >= 4 suboptimal) fading
/// threshold: 1/2 for m >= 5, 1/5 for m = 4, 1/3 for m = 3.
pub fn proven_fading_region(m: usize, alpha: f64) -> bool {
    assert!(m >= 3);
    let threshold = match m {
        3 => 1.0 / 3.0,
        4 => 0.2,
        _ => 0.5,
    };
    alpha < threshold
}

/// Predicted decay of the Dirichlet-fading defect (constant 1), with the
/// capacity regime for the implied schedule exponent.
pub fn rate_dir_fading(m: usize, eps: f64, eta: f64, gamma: f64) -> (f64, Regime) {
    assert!(eps > 0.0 && eps < eta && gamma > 0.0 && gamma < 1.0);
    let omega = eps / eta;
    let value = match m {
        2 => {
            let log = omega.ln().abs();
            (omega.powf(1.0 - gamma) * log.sqrt()).max(omega.powf(gamma) / (eps * log.sqrt()))
        }
        3 => omega.powf(1.0 - gamma).max(omega.powf(1.5 * gamma) / eps),
        4 => omega.powf(1.0 - gamma).max(omega.powf(1.25 * gamma) / eps),
        _ => omega.powf(1.0 - gamma).max(omega.powf(2.0 * gamma) / eps),
    };
    let alpha = eta.ln() / eps.ln();
    let regime = if m >= 3 { capacity_regime(m, alpha) } else { Regime::Fading };
    (value, regime)
}

/// Predicted decay of the solidifying defect (constant 1).
pub fn rate_dir_solid(m: usize, eps: f64, eta: f64, gamma: f64) -> f64 {
    assert!(eps > 0.0 && eps < eta && gamma > 0.0 && gamma < 1.0);
    let base = if m == 2 {
        eta * eta * eps.ln().abs()
    } else {
        eta.powi(m as i32) / eps.powi(m as i32 - 2)
    };
    base.powf((1.0 - gamma) / 2.0)
}

/// Lower bound scale for the first Dirichlet eigenvalue of a cell with one
/// removed ball (constant dropped).
pub fn rauch_taylor_bound(m: usize, eps: f64, eta: f64) -> f64 {
    assert!(eps > 0.0 && eps < eta);
    if m == 2 {
        1.0 / (eta * eta * eps.ln().abs())
    } else {
        eps.powi(m as i32 - 2) / eta.powi(m as i32)
    }
}

/// Predicted non-concentration bound for a tubular band at width ratio
/// `eps / eps_plus` (constant 1).
pub fn hypersurface_band_rate(eps: f64, eps_plus: f64) -> f64 {
    assert!(eps > 0.0 && eps <= eps_plus);
    (eps / eps_plus).sqrt()
}

/// Surface area of the unit sphere `S^{m-1}` in `R^m`.
pub fn sphere_area(m: usize) -> f64 {
    let pi = std::f64::consts::PI;
    2.0 * pi.powf(m as f64 / 2.0) / gamma_half(m)
}

/// Gamma(k/2) for positive integer k.
fn gamma_half(k: usize) -> f64 {
    assert!(k >= 1);
    match k {
        1 => std::f64::consts::PI.sqrt(),
        2 => 1.0,
        _ => (k as f64 / 2.0 - 1.0) * gamma_half(k - 2),
    }
}

/// L^{2q_m} norm of the gradient of the radial harmonic cutoff between
/// `eps` and `eps_plus` (closed form).
pub fn cutoff_lq_norm(m: usize, eps: f64, eps_plus: f64) -> f64 {
    assert!(m >= 2 && eps > 0.0 && eps < eps_plus);
    if m == 2 {
        return (2.0 * std::f64::consts::PI / (eps_plus / eps).ln()).sqrt();
    }
    let q = exponents(m).q;
    let mf = m as f64;
    // denominator of the profile: h(eps_plus) - h(eps), h'(s) = 1/s^{m-1}
    let h = |s: f64| -1.0 / ((mf - 2.0) * s.powf(mf - 2.0));
    let dh = h(eps_plus) - h(eps);
    let e = mf - 2.0 * q * (mf - 1.0);
    let integral = (eps_plus.powf(e) - eps.powf(e)) / e;
    (sphere_area(m) * integral / dh.powf(2.0 * q)).powf(1.0 / (2.0 * q))
}

/// Predicted moderate-decay rate of the Dirichlet-fading cutoff defect
/// (constant 1).
pub fn mod_decay_rate(m: usize, eps: f64, eps_plus: f64) -> f64 {
    assert!(m >= 2 && eps > 0.0 && eps < eps_plus);
    match m {
        2 => 1.0 / (eps_plus * (eps_plus / eps).ln().sqrt()),
        3 => eps.sqrt() / eps_plus.powf(1.5),
        4 => eps.powf(0.25) / eps_plus.powf(1.25),
        _ => eps / (eps_plus * eps_plus),
    }
}

/// First eigenvalue of the radial problem
/// `-(r^{m-1} u')' = lambda r^{m-1} u`, `u(eps) = 0`, `u'(eta) = 0`,
/// by shooting with RK4 and bisection. `m = 1` is admitted as the interval
/// self-test case with the closed form `(pi/2)^2 / (eta - eps)^2`.
pub fn annulus_first_eigenvalue(m: usize, eps: f64, eta: f64, tol: f64) -> Result<f64> {
    assert!(m >= 1);
    if !(eps > 0.0 && eps < eta) {
        return Err(Error::Config(format!("annulus needs 0 < eps < eta, got {eps}, {eta}")));
    }
    assert!(tol > 0.0 && tol < 1e-2);
    // rescale to x = r/eta so the integration range is [eps/eta, 1]
    let x0 = eps / eta;
    // u'(1) as a function of the rescaled eigenvalue mu = lambda * eta^2
    let shoot = |mu: f64| -> f64 {
        let steps = 4000;
        let dx = (1.0 - x0) / steps as f64;
        let mf = m as f64;
        let f = |x: f64, u: f64, v: f64| -> (f64, f64) { (v, -mu * u - (mf - 1.0) * v / x) };
        let mut u = 0.0;
        let mut v = 1.0;
        let mut x = x0;
        for _ in 0..steps {
            let (k1u, k1v) = f(x, u, v);
            let (k2u, k2v) = f(x + 0.5 * dx, u + 0.5 * dx * k1u, v + 0.5 * dx * k1v);
            let (k3u, k3v) = f(x + 0.5 * dx, u + 0.5 * dx * k2u, v + 0.5 * dx * k2v);
            let (k4u, k4v) = f(x + dx, u + dx * k3u, v + dx * k3v);
            u += dx / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += dx / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            x += dx;
            // renormalize to avoid overflow for large mu
            let scale = u.abs().max(v.abs());
            if scale > 1e100 {
                u /= scale;
                v /= scale;
            }
        }
        v
    };
    // scan geometrically for the first sign change of u'(1)
    let mut lo = 1e-6 * rauch_taylor_bound(m.max(2), eps, eta) * eta * eta;
    if m == 1 {
        lo = 1e-3;
    }
    let v_lo = shoot(lo);
    if v_lo <= 0.0 {
        return Err(Error::Solver("shooting bracket: lower end already negative".into()));
    }
    let mut hi = lo;
    let mut v_hi = v_lo;
    let cap = 2000;
    let mut found = false;
    for _ in 0..cap {
        hi *= 1.2;
        v_hi = shoot(hi);
        if v_hi <= 0.0 {
            found = true;
            break;
        }
        lo = hi;
    }
    if !found {
        return Err(Error::Solver(format!("shooting bracket not found up to mu = {hi:.3e}")));
    }
    let _ = v_hi;
    // bisection
    while (hi - lo) / hi > tol {
        let mid = 0.5 * (lo + hi);
        if shoot(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / (eta * eta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_table_values() {
        let e2 = exponents(2);
        assert_eq!(e2.q, 1.0);
        assert_eq!(e2.a, 1.0);
        assert!(e2.p.is_infinite());
        let e3 = exponents(3);
        assert_eq!(e3.q, 1.0);
        assert_eq!(e3.a, 1.5);
        let e4 = exponents(4);
        assert!((1.0 / e4.p + 1.0 / e4.q - 1.0).abs() < 1e-15);
        assert_eq!(e4.a, 1.25);
        let e6 = exponents(6);
        assert!((e6.p - 3.0).abs() < 1e-15);
        assert!((e6.q - 1.5).abs() < 1e-15);
        assert!((1.0 / e6.p + 1.0 / e6.q - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tau_values() {
        let t2 = tau(2, 0.5).unwrap();
        assert!((t2 - 8.0f64.sqrt() * 0.5 * 2.0f64.ln().sqrt()).abs() < 1e-12);
        assert!((t2 - 1.17741).abs() < 1e-5);
        let t3 = tau(3, 0.5).unwrap();
        assert!((t3 - 2.0f64.sqrt()).abs() < 1e-12);
        assert!(tau(3, 0.6).is_err());
        // monotone to zero
        let mut prev = f64::INFINITY;
        for k in 1..20 {
            let w = 0.5f64.powi(k);
            let t = tau(2, w).unwrap();
            assert!(t < prev);
            prev = t;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn neu_fading_rate() {
        let eps: f64 = 1e-3;
        let eta = eps.sqrt();
        assert!((rate_neu_fading(3, eps, eta) - eps.sqrt()).abs() < 1e-12);
        // m=2 at eta = 2 eps: only the log constant, no decay in the ratio
        let r = rate_neu_fading(2, eps, 2.0 * eps);
        assert!((r - 0.5 * 2.0f64.ln().sqrt()).abs() < 1e-12);
        // halving eps at fixed alpha decreases the rate
        let a = rate_neu_fading(2, 1e-2, 1e-1);
        let b = rate_neu_fading(2, 0.5e-2, (0.5e-2f64).powf(0.5));
        assert!(b < a);
    }

    #[test]
    fn dir_fading_rate_m3() {
        let eps: f64 = 1e-4;
        let eta = eps.powf(0.25);
        let gamma = 0.8;
        let omega = eps / eta;
        let (v, regime) = rate_dir_fading(3, eps, eta, gamma);
        let expect = omega.powf(0.2).max(omega.powf(1.2) / eps);
        assert!((v - expect).abs() < 1e-12 * expect);
        assert_eq!(regime, Regime::Fading);
    }

    #[test]
    fn dir_fading_gamma_to_one_stalls() {
        let eps = 1e-3;
        let eta = 0.1;
        let (v1, _) = rate_dir_fading(5, eps, eta, 0.99);
        assert!((eps / eta).powf(0.01) < 1.0);
        assert!(v1 >= (eps / eta).powf(0.01) - 1e-12);
    }

    #[test]
    fn dir_fading_rate_m2_logs() {
        let eps: f64 = 1e-3;
        let eta: f64 = 0.1;
        let gamma = 0.5;
        let omega: f64 = eps / eta;
        let log = omega.ln().abs();
        let (v, _) = rate_dir_fading(2, eps, eta, gamma);
        let expect = (omega.powf(0.5) * log.sqrt()).max(omega.powf(0.5) / (eps * log.sqrt()));
        assert!((v - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn solid_rate() {
        let eps: f64 = 0.01;
        let v = rate_dir_solid(2, eps, 2.0 * eps, 0.5);
        let expect = (4.0 * eps * eps * eps.ln().abs()).powf(0.25);
        assert!((v - expect).abs() < 1e-12);
        // m=3, eta = eps^alpha with alpha > 2/3: value tends to zero
        let v_coarse = rate_dir_solid(3, 1e-2, 1e-2f64.powf(0.8), 0.5);
        let v_fine = rate_dir_solid(3, 1e-4, 1e-4f64.powf(0.8), 0.5);
        assert!(v_fine < v_coarse);
        // gamma -> 1 removes the decay
        let v_flat = rate_dir_solid(3, 1e-4, 2e-4, 0.999);
        assert!((v_flat - 1.0).abs() < 0.1);
    }

    #[test]
    fn regime_thresholds() {
        assert_eq!(capacity_regime(3, 0.2), Regime::Fading);
        assert_eq!(capacity_regime(3, 1.0 / 3.0), Regime::Critical);
        assert_eq!(capacity_regime(3, 0.5), Regime::Solidifying);
        assert_eq!(capacity_regime(5, 0.59), Regime::Fading);
        assert_eq!(capacity_regime(5, 0.6), Regime::Critical);
        assert_eq!(capacity_regime(5, 0.61), Regime::Solidifying);
        assert!(proven_fading_region(3, 0.3));
        assert!(!proven_fading_region(4, 0.3));
        assert!(proven_fading_region(5, 0.4));
        // the m=4 gap between capacity prediction and proof
        for alpha in [0.25, 0.3, 0.4, 0.45] {
            assert_eq!(capacity_regime(4, alpha), Regime::Fading);
            assert!(!proven_fading_region(4, alpha));
        }
    }

    #[test]
    fn rauch_taylor_values() {
        assert!((rauch_taylor_bound(3, 0.01, 0.1) - 10.0).abs() < 1e-10);
        let v = rauch_taylor_bound(2, 0.01, 0.1);
        assert!((v - 1.0 / (0.01 * 0.01f64.ln().abs())).abs() < 1e-10);
        assert!((v - 21.71).abs() < 0.01);
        // scaling in m >= 3: (s eps, s eta) multiplies by s^{-2}
        let a = rauch_taylor_bound(3, 0.01, 0.1);
        let b = rauch_taylor_bound(3, 0.002, 0.02);
        assert!((b / a - 25.0).abs() < 1e-9);
    }

    #[test]
    fn sphere_areas() {
        let pi = std::f64::consts::PI;
        assert!((sphere_area(2) - 2.0 * pi).abs() < 1e-12);
        assert!((sphere_area(3) - 4.0 * pi).abs() < 1e-12);
        assert!((sphere_area(4) - 2.0 * pi * pi).abs() < 1e-12);
    }

    #[test]
    fn cutoff_norm_m2_closed_form() {
        let eps = 0.01;
        let eps_plus = 0.2;
        let v = cutoff_lq_norm(2, eps, eps_plus);
        let expect = (2.0 * std::f64::consts::PI / (eps_plus / eps).ln()).sqrt();
        assert!((v - expect).abs() < 1e-14);
        // decreasing in eps_plus at fixed eps
        assert!(cutoff_lq_norm(2, eps, 0.4) < v);
    }

    #[test]
    fn cutoff_norm_m3_closed_form() {
        let eps = 0.01;
        let eps_plus = 0.1;
        // direct integral: 4 pi (1/eps - 1/eps_plus) / (1/eps - 1/eps_plus)^2
        let d = 1.0 / eps - 1.0 / eps_plus;
        let expect = (4.0 * std::f64::consts::PI / d).sqrt();
        let v = cutoff_lq_norm(3, eps, eps_plus);
        assert!((v - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn cutoff_norm_quadrature_agreement() {
        // Simpson in log r against the closed form
        for (i, m) in [2usize, 3, 4, 5, 6].iter().enumerate() {
            let eps = 0.005 * (1.0 + i as f64 * 0.37);
            let eps_plus = eps * (3.0 + i as f64);
            let closed = cutoff_lq_norm(*m, eps, eps_plus);
            let quad = quadrature_lq_norm(*m, eps, eps_plus);
            assert!(
                (closed - quad).abs() <= 1e-8 * closed,
                "m={m}: closed {closed} vs quadrature {quad}"
            );
        }
    }

    fn quadrature_lq_norm(m: usize, eps: f64, eps_plus: f64) -> f64 {
        let q = exponents(m).q;
        let mf = m as f64;
        let dh = if m == 2 {
            (eps_plus / eps).ln()
        } else {
            -1.0 / ((mf - 2.0) * eps_plus.powf(mf - 2.0)) + 1.0 / ((mf - 2.0) * eps.powf(mf - 2.0))
        };
        // |chi'(r)| = r^{1-m} / dh; integrate |chi'|^{2q} r^{m-1} dr in s = ln r
        let integrand = |s: f64| -> f64 {
            let r = s.exp();
            (r.powf(1.0 - mf) / dh).powf(2.0 * q) * r.powf(mf - 1.0) * r
        };
        let a = eps.ln();
        let b = eps_plus.ln();
        let n = 20000;
        let hstep = (b - a) / n as f64;
        let mut sum = integrand(a) + integrand(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * integrand(a + k as f64 * hstep);
        }
        (sphere_area(m) * sum * hstep / 3.0).powf(1.0 / (2.0 * q))
    }

    #[test]
    fn mod_decay_examples() {
        let eps: f64 = 1e-4;
        let eps_plus = eps.sqrt();
        let v3 = mod_decay_rate(3, eps, eps_plus);
        assert!((v3 - eps.sqrt() / eps_plus.powf(1.5)).abs() < 1e-12 * v3);
        let v2 = mod_decay_rate(2, eps, eps_plus);
        let expect = 1.0 / (eps.sqrt() * (0.5 * eps.ln().abs()).sqrt());
        assert!((v2 - expect).abs() < 1e-12 * v2);
    }

    #[test]
    fn mod_decay_identity_fixed_ratio() {
        // at a fixed radius ratio the rate is an exact constant multiple of
        // (eps_plus)^{-a_m} * cutoff_lq_norm
        for m in [2usize, 3, 4, 5] {
            let a = exponents(m).a;
            let ratio = 20.0;
            let c0 = {
                let eps = 1e-3;
                mod_decay_rate(m, eps, ratio * eps)
                    / (cutoff_lq_norm(m, eps, ratio * eps) * (ratio * eps).powf(-a))
            };
            for eps in [1e-4, 3e-4, 1e-5] {
                let c = mod_decay_rate(m, eps, ratio * eps)
                    / (cutoff_lq_norm(m, eps, ratio * eps) * (ratio * eps).powf(-a));
                assert!((c - c0).abs() <= 1e-8 * c0, "m={m} eps={eps}: {c} vs {c0}");
            }
        }
    }

    #[test]
    fn mod_decay_asymptotic_constant_m2() {
        // for m=2 the identity is exact with constant sqrt(2 pi) at any radii
        let c = (2.0 * std::f64::consts::PI).sqrt();
        for (eps, eps_plus) in [(1e-3, 0.05), (1e-5, 1e-2), (1e-4, 0.3)] {
            let lhs = mod_decay_rate(2, eps, eps_plus);
            let rhs = cutoff_lq_norm(2, eps, eps_plus) / eps_plus / c;
            assert!((lhs - rhs).abs() < 1e-12 * lhs);
        }
    }

    #[test]
    fn band_rate() {
        assert!((hypersurface_band_rate(0.01, 0.04) - 0.5).abs() < 1e-15);
        assert_eq!(hypersurface_band_rate(0.3, 0.3), 1.0);
    }

    #[test]
    fn shooting_interval_closed_form() {
        let eps = 0.2;
        let eta = 1.0;
        let lam = annulus_first_eigenvalue(1, eps, eta, 1e-8).unwrap();
        let exact = (std::f64::consts::FRAC_PI_2 / (eta - eps)).powi(2);
        assert!((lam - exact).abs() < 1e-5 * exact, "{lam} vs {exact}");
    }

    #[test]
    fn shooting_blowup_as_annulus_thins() {
        let mut prev = 0.0;
        for eps in [0.5, 0.8, 0.95] {
            let lam = annulus_first_eigenvalue(3, eps, 1.0, 1e-6).unwrap();
            assert!(lam > prev);
            prev = lam;
        }
        assert!(prev > 100.0);
    }

    #[test]
    fn shooting_m2_bracket() {
        let mut vals = Vec::new();
        for eps in [1e-2, 1e-3, 1e-4] {
            let eta = 0.1;
            let lam = annulus_first_eigenvalue(2, eps, eta, 1e-6).unwrap();
            vals.push(lam * eta * eta * eps.ln().abs());
        }
        for v in &vals {
            assert!(*v > 0.5 && *v < 50.0, "normalized value {v} escaped the bracket");
        }
    }

    #[test]
    fn shooting_m3_scale_invariance() {
        let a = annulus_first_eigenvalue(3, 0.01, 0.1, 1e-7).unwrap();
        let b = annulus_first_eigenvalue(3, 0.001, 0.01, 1e-7).unwrap();
        assert!((b / a - 100.0).abs() < 1e-3 * 100.0);
    }
}
