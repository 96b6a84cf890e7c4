//! Four-point (cubic) Lagrange interpolation on uniform grids. Used for
//! off-grid shifts in the overlap/ambiguity integrals; exact when the
//! requested point lands on a grid node, O(h⁴) otherwise. Points outside the
//! grid evaluate to zero, consistent with the boundary-decay contract of the
//! state types.

use crate::grid::Grid1D;
use num_complex::Complex64;

pub(crate) fn eval_complex(grid: &Grid1D, values: &[Complex64], x: f64) -> Complex64 {
    debug_assert_eq!(values.len(), grid.count());
    if x < grid.min() || x > grid.max() {
        return Complex64::new(0.0, 0.0);
    }
    let h = grid.spacing();
    let s = (x - grid.min()) / h;
    let near = s.round();
    if (s - near).abs() < 1e-9 {
        return values[near as usize];
    }
    let n = grid.count();
    if n < 4 {
        // linear fallback for tiny grids
        let j = (s.floor() as usize).min(n - 2);
        let t = s - j as f64;
        return values[j] * (1.0 - t) + values[j + 1] * t;
    }
    let j = s.floor() as isize;
    let i0 = (j - 1).clamp(0, n as isize - 4) as usize;
    let xi = s - i0 as f64; // position in stencil coordinates, nodes at 0,1,2,3
    let (a, b, c) = (xi - 1.0, xi - 2.0, xi - 3.0);
    let w0 = -a * b * c / 6.0;
    let w1 = xi * b * c / 2.0;
    let w2 = -xi * a * c / 2.0;
    let w3 = xi * a * b / 6.0;
    values[i0] * w0 + values[i0 + 1] * w1 + values[i0 + 2] * w2 + values[i0 + 3] * w3
}
