//! Bessel functions of integer order, their zeros, and thin wrappers over
//! statrs for Γ, incomplete Γ and erfc.

use statrs::function::{erf, gamma as sg};

pub fn gamma(x: f64) -> f64 {
    sg::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    sg::ln_gamma(x)
}

pub fn erfc(x: f64) -> f64 {
    erf::erfc(x)
}

/// Upper incomplete gamma Γ(a, x) for x > 0 and any real a ≠ 0, -1, ...
/// Negative a goes through Γ(a,x) = (Γ(a+1,x) − x^a e^{−x}) / a.
pub fn upper_gamma(a: f64, x: f64) -> f64 {
    if a.abs() < 1e-14 {
        e1(x)
    } else if a > 0.0 {
        sg::gamma_ur(a, x) * sg::gamma(a)
    } else {
        (upper_gamma(a + 1.0, x) - x.powf(a) * (-x).exp()) / a
    }
}

/// Exponential integral E₁(x) = Γ(0, x) for x > 0.
pub fn e1(x: f64) -> f64 {
    if x < 1.0 {
        let mut s = 0.0;
        let mut t = 1.0;
        for k in 1..60 {
            t *= -x / k as f64;
            s -= t / k as f64;
            if t.abs() < 1e-18 {
                break;
            }
        }
        -0.5772156649015329 - x.ln() + s
    } else {
        // modified Lentz on the continued fraction e^{−x}/(x+1−1/(x+3−4/(x+5−…)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// J_0(x), …, J_nmax(x) by Miller's backward recurrence normalised with
/// J_0 + 2ΣJ_{2k} = 1.
pub fn bessel_j_all(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    let ax = x.abs();
    if ax < 1e-300 {
        out[0] = 1.0;
        return out;
    }
    if ax < 1e-5 {
        // leading power-series terms; recurrence would overflow
        let h = 0.5 * ax;
        let mut term = 1.0;
        for (n, o) in out.iter_mut().enumerate() {
            if n > 0 {
                term *= h / n as f64;
            }
            *o = term * (1.0 - h * h / (n as f64 + 1.0));
            if term < 1e-300 {
                break;
            }
        }
    } else {
        let top = (nmax as f64).max(ax);
        let mut m = (top + 30.0 + (50.0 * top).sqrt()) as usize;
        if m % 2 == 1 {
            m += 1;
        }
        let mut jp1 = 0.0f64;
        let mut j = 1e-280f64;
        let mut norm = 0.0f64;
        for k in (1..=m).rev() {
            let jm1 = 2.0 * k as f64 / ax * j - jp1;
            jp1 = j;
            j = jm1;
            // j now holds J_{k-1}
            let idx = k - 1;
            if idx <= nmax {
                out[idx] = j;
            }
            if idx % 2 == 0 && idx > 0 {
                norm += 2.0 * j;
            }
            if j.abs() > 1e250 {
                let sc = 1e-250;
                j *= sc;
                jp1 *= sc;
                norm *= sc;
                for o in out.iter_mut() {
                    *o *= sc;
                }
            }
        }
        norm += j;
        for o in out.iter_mut() {
            *o /= norm;
        }
    }
    if x < 0.0 {
        for (n, o) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *o = -*o;
            }
        }
    }
    out
}

/// J_n(x) for a single order.
pub fn bessel_j(n: usize, x: f64) -> f64 {
    bessel_j_all(n + 1, x)[n]
}

/// (J_{n-1}, J_n, J_{n+1}) at x, with J_{-1} = −J_1.
pub fn bessel_j_triplet(n: usize, x: f64) -> (f64, f64, f64) {
    let all = bessel_j_all(n + 1, x);
    let jm = if n == 0 { -all[1] } else { all[n - 1] };
    (jm, all[n], all[n + 1])
}

/// First `count` positive zeros of J_n by sign scanning and safeguarded Newton.
pub fn bessel_zeros(n: usize, count: usize) -> Vec<f64> {
    let mut zeros = Vec::with_capacity(count);
    // zeros of J_n exceed n and are more than π/2 apart
    let step = 0.5;
    let mut a = (n as f64).max(0.5);
    let mut fa = bessel_j(n, a);
    while zeros.len() < count {
        let b = a + step;
        let fb = bessel_j(n, b);
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            zeros.push(refine_zero(n, a, b, fa));
        }
        a = b;
        fa = fb;
    }
    zeros
}

fn refine_zero(n: usize, mut lo: f64, mut hi: f64, flo: f64) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let (jm, j, jp) = bessel_j_triplet(n, x);
        if j == 0.0 {
            return x;
        }
        if (j < 0.0) == (flo < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        let d = 0.5 * (jm - jp);
        let mut xn = x - j / d;
        if !(xn > lo && xn < hi) {
            xn = 0.5 * (lo + hi);
        }
        if (xn - x).abs() < 1e-15 * x {
            return xn;
        }
        x = xn;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j0_series(x: f64) -> f64 {
        let q = -0.25 * x * x;
        let mut t = 1.0;
        let mut s = 1.0;
        for k in 1..80 {
            t *= q / (k * k) as f64;
            s += t;
        }
        s
    }

    #[test]
    fn miller_matches_power_series() {
        for &x in &[0.1, 1.0, 2.404825557695773, 5.5, 9.0] {
            assert!((bessel_j(0, x) - j0_series(x)).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn reference_values() {
        // J_1(1), J_5(10), J_20(30)
        assert!((bessel_j(1, 1.0) - 0.44005058574493355).abs() < 1e-14);
        assert!((bessel_j(5, 10.0) - (-0.23406152818679365)).abs() < 1e-13);
        assert!((bessel_j(20, 30.0) - 0.004831019993404039).abs() < 1e-13);
    }

    #[test]
    fn zeros_of_j0_and_j1() {
        let z = bessel_zeros(0, 3);
        assert!((z[0] - 2.404825557695773).abs() < 1e-12);
        assert!((z[2] - 8.653727912911013).abs() < 1e-12);
        let z = bessel_zeros(1, 2);
        assert!((z[0] - 3.8317059702075125).abs() < 1e-12);
        let z = bessel_zeros(10, 1);
        assert!((z[0] - 14.475500686554541).abs() < 1e-11);
    }

    #[test]
    fn exponential_integral() {
        // E1(0.5) = 0.5597735947761608, E1(3) = 0.013048381094197037
        assert!((e1(0.5) - 0.5597735947761608).abs() < 1e-14);
        assert!((e1(3.0) - 0.013048381094197037).abs() < 1e-16);
        assert!((upper_gamma(0.0, 0.5) - e1(0.5)).abs() < 1e-15);
    }

    #[test]
    fn incomplete_gamma_negative_order() {
        // Γ(-0.5, 1) = 0.1781477117815607
        assert!((upper_gamma(-0.5, 1.0) - 0.1781477117815607).abs() < 1e-12);
    }
}
