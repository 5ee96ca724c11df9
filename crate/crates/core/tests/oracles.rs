//! Independent reference computations for the special functions, the
//! eigenfunctions and the assembled fields.

use degpar::solution::{build_mode_solution, Field, Point, ProblemParams};
use degpar::special::{bessel_j, bessel_j_deriv, bessel_roots, BesselOrder};
use degpar::spectrum::{spatial_eigenfunction, spatial_eigenvalues};
use degpar::temporal::NonlocalCoefficient;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `Gamma(1 + a/b)`, computed once to 30 digits and frozen.
const GAMMA_TABLE: [((i64, i64), f64); 4] = [
    ((1, 3), 0.892_979_511_569_249_2),
    ((1, 4), 0.906_402_477_055_477),
    ((2, 3), 0.902_745_292_950_933_6),
    ((1, 5), 0.918_168_742_399_760_6),
];

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `sum_j (-z)^j / (j! (nu+1)_j)` with `z = (x/2)^2`, in exact arithmetic,
/// truncated once the terms fall below `1e-40` of the running sum.
fn reduced_series(nu: &BigRational, half_x: &BigRational) -> f64 {
    let z = half_x * half_x;
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    let cutoff = ratio(1, 10).pow(40);
    for j in 1.. {
        let jr = BigRational::from_integer(BigInt::from(j));
        term = -term * &z / (&jr * (nu + &jr));
        sum += &term;
        if j > 5 && term.abs() < &cutoff * sum.abs() {
            break;
        }
    }
    sum.to_f64().unwrap()
}

/// `J_{a/b}(x)` from the ascending series with exact rational arithmetic.
fn series_oracle((a, b): (i64, i64), gamma: f64, x: f64) -> f64 {
    let nu = ratio(a, b);
    let half_x = BigRational::from_float(x).unwrap() / BigInt::from(2);
    (0.5 * x).powf(a as f64 / b as f64) / gamma * reduced_series(&nu, &half_x)
}

#[test]
fn bessel_matches_exact_series() {
    // Includes points beyond the switch to the asymptotic expansion.
    let xs = [0.5, 2.0, 3.5, 7.25, 10.0, 18.0, 24.9, 25.1, 30.0, 41.5];
    for &((a, b), gamma) in &GAMMA_TABLE {
        let order = BesselOrder::new(a as f64 / b as f64).unwrap();
        for &x in &xs {
            let want = series_oracle((a, b), gamma, x);
            let got = bessel_j(order, x).unwrap();
            assert!(
                (got - want).abs() < 2e-14,
                "J_{a}/{b}({x}) = {got}, series gives {want}"
            );
        }
    }
}

#[test]
fn series_oracle_reproduces_reference_value() {
    // J_{1/3}(2) from a 30-digit reference.
    let v = series_oracle((1, 3), GAMMA_TABLE[0].1, 2.0);
    assert!((v - 0.442_939_818_148_576_2).abs() < 1e-15);
}

#[test]
fn derivative_matches_centred_difference() {
    let h = 1e-5;
    for nu in [0.2, 1.0 / 3.0, 0.5, 0.9] {
        let order = BesselOrder::new(nu).unwrap();
        for x in [0.3, 1.7, 6.0, 24.0, 26.0, 40.0] {
            let fd =
                (bessel_j(order, x + h).unwrap() - bessel_j(order, x - h).unwrap()) / (2.0 * h);
            let d = bessel_j_deriv(order, x).unwrap();
            assert!((d - fd).abs() < 1e-9, "nu={nu} x={x}: {d} vs {fd}");
        }
    }
}

/// Zeros located by a fine sign-change scan and plain bisection.
fn scanned_zeros(order: BesselOrder, count: usize) -> Vec<f64> {
    let f = |x: f64| bessel_j(order, x).unwrap();
    let step = 1e-3;
    let mut out = Vec::new();
    let mut a = step;
    let mut fa = f(a);
    while out.len() < count {
        let b = a + step;
        let fb = f(b);
        if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm * flo <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    out
}

#[test]
fn roots_match_fine_scan() {
    for &((a, b), gamma) in &GAMMA_TABLE {
        let order = BesselOrder::new(a as f64 / b as f64).unwrap();
        let table = bessel_roots(order, 12).unwrap();
        let scan = scanned_zeros(order, 12);
        for (i, (r, s)) in table.roots().iter().zip(&scan).enumerate() {
            assert!(
                (r - s).abs() < 1e-10,
                "zero {} of J_{a}/{b}: {r} vs {s}",
                i + 1
            );
            // The exact series must vanish there too.
            assert!(series_oracle((a, b), gamma, *r).abs() < 1e-12);
        }
    }
}

#[test]
fn eigenfunction_jet_matches_differences() {
    let h = 1e-4;
    for e in [0.5, 1.0, 2.0, 3.0] {
        for pair in spatial_eigenvalues(e, 4).unwrap() {
            let f = spatial_eigenfunction(pair);
            for x in [0.15, 0.5, 0.85] {
                let v = |x: f64| f.value(x).unwrap();
                let jet = f.jet(x).unwrap();
                let d1 = (v(x + h) - v(x - h)) / (2.0 * h);
                let d2 = (v(x + h) - 2.0 * v(x) + v(x - h)) / (h * h);
                let scale = pair.mu.max(1.0) * jet.value.abs().max(1e-3);
                assert!((jet.d1 - d1).abs() < 1e-6 * pair.mu.sqrt().max(1.0));
                assert!(
                    (jet.d2 - d2).abs() < 1e-5 * scale,
                    "e={e} l={} x={x}",
                    pair.index
                );
                // The eigen-ODE X'' + mu x^e X = 0.
                assert!((jet.d2 + pair.mu * x.powf(e) * jet.value).abs() < 1e-9 * scale);
            }
        }
    }
}

#[test]
fn field_partials_match_differences() {
    let alpha = NonlocalCoefficient::new(0.6, -0.3).unwrap();
    let params = ProblemParams::problem1(1.5, 0.7, 1.2, alpha).unwrap();
    let field = build_mode_solution(&params, 2, 1, 2).unwrap();
    let p = Point::new(0.5, 0.5, 0.5);
    let h = 1e-4;
    let u = |x: f64, y: f64, t: f64| field.value(Point::new(x, y, t)).unwrap();
    let d = field.partials(p).unwrap();
    let c = u(p.x, p.y, p.t);
    let checks = [
        (
            d.u_x,
            (u(p.x + h, p.y, p.t) - u(p.x - h, p.y, p.t)) / (2.0 * h),
        ),
        (
            d.u_y,
            (u(p.x, p.y + h, p.t) - u(p.x, p.y - h, p.t)) / (2.0 * h),
        ),
        (
            d.u_t,
            (u(p.x, p.y, p.t + h) - u(p.x, p.y, p.t - h)) / (2.0 * h),
        ),
        (
            d.u_xx,
            (u(p.x + h, p.y, p.t) - 2.0 * c + u(p.x - h, p.y, p.t)) / (h * h),
        ),
        (
            d.u_yy,
            (u(p.x, p.y + h, p.t) - 2.0 * c + u(p.x, p.y - h, p.t)) / (h * h),
        ),
    ];
    for (i, (exact, fd)) in checks.iter().enumerate() {
        assert!(
            (exact - fd).norm() < 1e-6 * exact.norm(),
            "partial {i}: {exact} vs {fd}"
        );
    }
    assert!((d.u - c).norm() == 0.0 && !c.is_zero());
}
