//! Steps of the copy-consensus coordination.
//!
//! Every free cell `(t, p)` has the owner's value `z`, an outbound copy held
//! by the master block of the sending location and an inbound copy held by
//! the master block of the receiving location (indexed by departure slot).
//! The owner prices its decisions against both copies, and each master block
//! solves its capacity copy together with the copies touching it.

use crate::Scalar;

/// Euclidean projection of `m` onto `{0 <= x <= u, sum x <= s}`, in place.
pub(crate) fn project_capped_simplex<S: Scalar>(m: &mut [S], u: S, s: S) {
    let clamp = |v: S| v.max(S::zero()).min(u);
    let total: S = m.iter().map(|&v| clamp(v)).sum();
    if total <= s {
        for v in m.iter_mut() {
            *v = clamp(*v);
        }
        return;
    }
    if s <= S::zero() {
        m.iter_mut().for_each(|v| *v = S::zero());
        return;
    }
    // sum clamp(m - theta) is piecewise linear and non-increasing in theta
    let mut bps: Vec<S> = m
        .iter()
        .flat_map(|&v| [v - u, v])
        .filter(|&b| b > S::zero())
        .collect();
    bps.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    let at = |theta: S| -> S { m.iter().map(|&v| clamp(v - theta)).sum() };
    let mut left = S::zero();
    let mut f_left = total;
    let mut theta = left;
    for &b in &bps {
        let f_b = at(b);
        if f_b <= s {
            theta = if f_left > f_b { left + (b - left) * (f_left - s) / (f_left - f_b) } else { b };
            break;
        }
        left = b;
        f_left = f_b;
        theta = b;
    }
    for v in m.iter_mut() {
        *v = clamp(*v - theta);
    }
}

/// Root of the increasing piecewise linear derivative
/// `rho (x - a) - kappa sum_t (s_t - x / beta)_+` on `[lo, hi]`.
pub(crate) fn solve_block<S: Scalar>(rho: S, a: S, kappa: S, beta: S, s: &[S], lo: S, hi: S) -> S {
    let mut b: Vec<S> = s.iter().map(|&v| beta * v).filter(|&v| v > lo).collect();
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite slots"));
    let mut k = S::of_usize(b.len()) * kappa;
    let mut ks: S = b.iter().map(|&v| v / beta).sum::<S>() * kappa;
    let mut left = lo;
    let mut x = None;
    for &bp in &b {
        // on [left, bp] every remaining slot is active
        let root = (rho * a + ks) / (rho + k / beta);
        if root <= left {
            x = Some(left);
            break;
        }
        if root < bp {
            x = Some(root);
            break;
        }
        k = k - kappa;
        ks = ks - kappa * bp / beta;
        left = bp;
    }
    let x = x.unwrap_or_else(|| a.max(left));
    x.min(hi).max(lo.min(hi))
}
