//! Independent test-side oracles shared by the test binaries.
#![allow(dead_code)]

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn lambda(c: f64, gamma: f64, k: usize) -> f64 {
    c * (-gamma * k as f64).exp()
}

pub fn z_oracle(gamma: f64, c: f64, k: usize) -> f64 {
    let x = c * (-gamma * (k as f64 + 1.0)).exp();
    let mut sum = 0.0;
    let mut n = 1.0;
    let mut power = x;
    loop {
        let term = power / (n * (n + 1.0));
        sum += term;
        if term < 1e-14 * sum {
            break;
        }
        power *= x;
        n += 1.0;
    }
    -sum / gamma
}

pub fn xi_oracle(t_f_m: usize, gamma: f64, c: f64, e_m: f64) -> f64 {
    (0..t_f_m)
        .map(|k| {
            (1.0 - lambda(c, gamma, k + 1)) * (1.0 - lambda(c, gamma, k)) * (-2.0 * (k as f64 + 1.0) * e_m * e_m).exp()
        })
        .sum()
}

pub fn zeta_oracle(gamma: f64, c: f64, e_m: f64) -> f64 {
    let a = (-2.0 * e_m * e_m).exp();
    let mut sum = 0.0;
    let mut xi = 0.0;
    let mut k = 0usize;
    loop {
        // the remaining tail is below xi(inf) a^k / (1 - a) <= a^k / (1 - a)^2
        if a.powi(k as i32) / (1.0 - a).powi(2) < 1e-12 * sum {
            return sum;
        }
        sum += xi * a.powi(k as i32);
        xi += (1.0 - lambda(c, gamma, k + 1)) * (1.0 - lambda(c, gamma, k)) * a.powi(k as i32 + 1);
        k += 1;
    }
}

/// The three-piece malicious bound summed term by term over `terms` rounds.
pub fn tighter_oracle(c: f64, gamma: f64, e_m: f64, dm: usize, d1: f64, eta: f64, terms: usize) -> f64 {
    let dmf = dm as f64;
    let rate = 2.0 * e_m * e_m;
    let floor_or_neg = |v: f64| if v < 0.0 { -1i64 } else { v.floor() as i64 };
    let k1 = floor_or_neg((dmf / (2.0 * d1)).ln() / rate);
    let k2 = floor_or_neg(dmf.ln() / rate);
    let q = |k: usize| (1.0 - lambda(c, gamma, k + 1)) * (1.0 - lambda(c, gamma, k));

    // s1[t] = S_1(t), s2[t] = S_2(t)
    let mut s1 = Vec::with_capacity(terms);
    let mut acc = 0.0;
    for k in 0..terms {
        acc += d1 * q(k);
        s1.push(acc);
    }
    let mut s2 = vec![0.0; terms];
    let mut acc = 0.0;
    for t in 0..terms {
        s2[t] = acc;
        if t as i64 >= k1 + 1 {
            acc += dmf / 2.0 * q(t) * (-rate * (t as f64 + 1.0)).exp();
        }
    }
    let s1_at = |k: i64| if k < 0 { 0.0 } else { s1[k as usize] };
    let mut total = 0.0;
    for k in 0..=k2 {
        total += eta / 2.0 * s1_at(k);
    }
    for k in k2 + 1..=k1 {
        total += dmf * eta / 2.0 * s1_at(k) * (-rate * k as f64).exp();
    }
    for k in (k2 + 1).max(0) as usize..terms {
        total += dmf * eta / 2.0 * (s1_at(k1) + s2[k]) * (-rate * k as f64).exp();
    }
    total
}
