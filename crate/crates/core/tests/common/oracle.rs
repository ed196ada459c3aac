//! Independent reference implementations used only by tests.

#![allow(dead_code)]

/// Midranks by pairwise comparison: rank = #less + (#equal + 1) / 2.
pub fn naive_midranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|a| {
            let less = v.iter().filter(|b| *b < a).count() as f64;
            let equal = v.iter().filter(|b| *b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Exact two-sided Mann-Whitney p-value by enumerating every way of choosing
/// which pooled observations belong to the first sample.
pub fn mwu_exact_enumerated(x: &[f64], y: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = naive_midranks(&pooled);
    let (nx, n) = (x.len(), pooled.len());
    let shift = (nx * (nx + 1)) as f64 / 2.0;
    let u_obs: f64 = ranks[..nx].iter().sum::<f64>() - shift;
    let mu = (nx * (n - nx)) as f64 / 2.0;
    let dev = (u_obs - mu).abs();
    let (mut hit, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != nx {
            continue;
        }
        let r: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        total += 1;
        if ((r - shift) - mu).abs() >= dev - 1e-9 {
            hit += 1;
        }
    }
    (u_obs, hit as f64 / total as f64)
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7, n = 9.
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let aa = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        d = 1.0 + aa * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = 1.0 + aa / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        d = 1.0 + aa * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = 1.0 + aa / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Welch's t, Satterthwaite df and two-sided p from first principles.
pub fn welch_reference(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let mu = m(v);
        v.iter().map(|a| (a - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (vx, vy) = (var(x) / nx, var(y) / ny);
    let t = (m(x) - m(y)) / (vx + vy).sqrt();
    let df = (vx + vy).powi(2) / (vx * vx / (nx - 1.0) + vy * vy / (ny - 1.0));
    let p = reg_inc_beta(df / 2.0, 0.5, df / (df + t * t));
    (t, df, p)
}

/// Binomial CDF by direct summation of exactly computed terms.
pub fn binomial_cdf_direct(k: u64, n: u64, p: f64) -> f64 {
    let mut pmf = (1.0 - p).powi(n as i32);
    let mut acc = pmf;
    for i in 1..=k {
        pmf *= (n - i + 1) as f64 / i as f64 * p / (1.0 - p);
        acc += pmf;
    }
    acc
}

/// Coverage of the order-statistic interval (x_(l), x_(n+1-l)) for the
/// median of a continuous distribution.
pub fn order_stat_coverage(n: u64, l: u64) -> f64 {
    1.0 - 2.0 * binomial_cdf_direct(l - 1, n, 0.5)
}
