//! Gauss–Legendre building blocks: fixed composite rules, adaptive bisection,
//! semi-infinite substitution, and a bracketing root finder.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

/// Nodes per Gauss–Legendre panel.
pub const PANEL_ORDER: usize = 16;

fn reference_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut r: Vec<(f64, f64)> = GaussLegendre::new(PANEL_ORDER)
            .expect("degree >= 2")
            .as_node_weight_pairs()
            .to_vec();
        r.sort_by(|a, b| a.0.total_cmp(&b.0));
        r
    })
}

/// Composite rule with `panels` equal panels of [`PANEL_ORDER`] nodes on `[a, b]`,
/// as `(node, weight)` pairs in increasing node order.
pub fn composite_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * PANEL_ORDER);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for &(x, w) in reference_rule() {
            out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

/// Single-panel Gauss–Legendre estimate.
fn panel(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    reference_rule().iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveResult {
    pub value: f64,
    /// Sum over panels of |whole − halves|.
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Globally adaptive bisection with 16-point Gauss–Legendre panels: the panel
/// with the largest `|whole − halves|` is split until the summed estimate drops
/// below `max(abs_tol, rel_tol·|I|)` or the panel budget is spent.
pub fn adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> AdaptiveResult {
    const MAX_PANELS: usize = 4000;
    let mut evaluations = 0;
    let mut eval = |x: f64| {
        evaluations += 1;
        f(x)
    };
    // each entry: (error, lo, hi, refined value)
    let split = |lo: f64, hi: f64, eval: &mut dyn FnMut(f64) -> f64| {
        let mut e = |x| eval(x);
        let whole = panel(&mut e, lo, hi);
        let mid = 0.5 * (lo + hi);
        let halves = panel(&mut e, lo, mid) + panel(&mut e, mid, hi);
        ((halves - whole).abs(), lo, hi, halves)
    };
    let mut panels = vec![split(a, b, &mut eval)];
    loop {
        let value: f64 = panels.iter().map(|p| p.3).sum();
        let error: f64 = panels.iter().map(|p| p.0).sum();
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
            .map(|(i, _)| i)
            .expect("nonempty");
        let (_, lo, hi, _) = panels[worst];
        let mid = 0.5 * (lo + hi);
        if error <= abs_tol.max(rel_tol * value.abs()) || panels.len() >= MAX_PANELS || mid <= lo || mid >= hi {
            return AdaptiveResult { value, error_estimate: error, evaluations };
        }
        panels.swap_remove(worst);
        panels.push(split(lo, mid, &mut eval));
        panels.push(split(mid, hi, &mut eval));
    }
}

/// `∫_a^∞ f` through `x = a + s/(1 − s)`, `s ∈ [0, 1)`.
pub fn adaptive_semi_infinite(mut f: impl FnMut(f64) -> f64, a: f64, abs_tol: f64, rel_tol: f64) -> AdaptiveResult {
    adaptive(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let one_minus = 1.0 - s;
            let x = a + s / one_minus;
            let jac = 1.0 / (one_minus * one_minus);
            let v = f(x) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// Root of `f` in `[lo, hi]` by bisection; requires a sign change.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, x_tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= x_tol || mid == lo || mid == hi {
            return Some(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
