//! Zeroth-order Bessel function and its first positive root.

/// `J₀(x)` from its power series; accurate to ~1e-15 for |x| ≤ 8.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        term *= q / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// First positive root `j₀,₁` of `J₀`, by bisection on `[2, 3]`.
pub fn bessel_j0_first_root() -> f64 {
    let (mut a, mut b) = (2.0_f64, 3.0_f64);
    while b - a > 1e-14 {
        let mid = 0.5 * (a + b);
        if bessel_j0(a) * bessel_j0(mid) <= 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}

/// Euclidean Faber–Krahn constant `c_d = λ₁(B)·vol(B)^{2/d}` of a ball.
pub fn faber_krahn_constant(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => PI * PI,
        2 => {
            let j = bessel_j0_first_root();
            PI * j * j
        }
        3 => PI * PI * (4.0 * PI / 3.0).powf(2.0 / 3.0),
        _ => panic!("Faber-Krahn constant implemented for d <= 3"),
    }
}
