#![allow(dead_code)]

use pdmpval::SmoothedLoanModel;

/// Adaptive Simpson with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Term `i` (1-based) of the power-weighted integrand, rebuilt from `x0`:
///
/// `λ^i Π_{j<i} v_j^{δ+λ-1} f_Y(y_j) r_j · v_i^{λ-1} L(-ln v_i, χ_{i-1})`
/// with `r_j = χ_{j⁻} + c/ρ`, `y_j = r_j z_j`.
pub fn naive_power_term(u: &[f64], i: usize, x0: f64, model: &SmoothedLoanModel) -> f64 {
    let p = model.params();
    let (lam, delta, k) = (p.claim_intensity, p.discount, p.premium / p.loan_rate);
    let flow = model.flow();
    let mut chi = x0;
    let mut factor = lam.powi(i as i32);
    for j in 0..i - 1 {
        let (v, z) = (u[2 * j], u[2 * j + 1]);
        let t = -v.ln();
        let before = flow.flow_at(chi, t);
        let r = before + k;
        let y = r * z;
        factor *= v.powf(delta + lam - 1.0) * p.claim_rate * (-p.claim_rate * y).exp() * r;
        chi = before - y;
    }
    let v = u[2 * (i - 1)];
    factor * v.powf(lam - 1.0) * flow.reward_integral(chi, -v.ln())
}

/// Unsubstituted integrand of term `i` in `(t_1, y_1, …, t_{i-1}, y_{i-1}, t_i)`:
/// `Π_{j<i} λ e^{-(λ+δ)t_j} f_Y(y_j) 1{y_j < r_j} · λ e^{-λ t_i} L(t_i, χ_{i-1})`.
pub fn time_space_term(ts: &[f64], ys: &[f64], x0: f64, model: &SmoothedLoanModel) -> f64 {
    let p = model.params();
    let (lam, delta, k) = (p.claim_intensity, p.discount, p.premium / p.loan_rate);
    let flow = model.flow();
    let mut chi = x0;
    let mut factor = 1.0;
    for (&t, &y) in ts.iter().zip(ys) {
        let before = flow.flow_at(chi, t);
        if y >= before + k {
            return 0.0;
        }
        factor *= lam * (-(lam + delta) * t).exp() * p.claim_rate * (-p.claim_rate * y).exp();
        chi = before - y;
    }
    let t = ts[ys.len()];
    factor * lam * (-lam * t).exp() * flow.reward_integral(chi, t)
}
