// SPDX-License-Identifier: MIT OR Apache-2.0

//! Assertion helpers shared by unit tests.

/// Absolute-or-relative closeness: `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1.0_f64.max(a.abs()).max(b.abs())
}

pub fn assert_close(actual: f64, expected: f64, tol: f64) {
    assert!(
        close(actual, expected, tol),
        "expected {expected}, got {actual} (tol {tol})"
    );
}

/// Strictly relative closeness, for quantities bounded away from zero.
pub fn assert_rel_close(actual: f64, expected: f64, tol: f64) {
    if expected == 0.0 {
        assert_eq!(actual, 0.0, "expected exactly 0, got {actual}");
    } else {
        let rel = ((actual - expected) / expected).abs();
        assert!(
            rel <= tol,
            "expected {expected}, got {actual} (relative error {rel:.3e} > {tol:.1e})"
        );
    }
}
