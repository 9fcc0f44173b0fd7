//! Width/depth budget formulas in exact integer arithmetic.

use num_bigint::BigUint;

use crate::network::SizeBudget;

/// Largest `r` with `r^d ≤ n`.
pub fn int_root_floor(n: u64, d: u32) -> u64 {
    if d == 1 || n <= 1 {
        return n;
    }
    let mut r = (n as f64).powf(1.0 / d as f64).floor() as u64;
    let pow_le = |r: u64| -> bool { (r as u128).checked_pow(d).is_some_and(|p| p <= n as u128) };
    while r > 0 && !pow_le(r) {
        r -= 1;
    }
    while pow_le(r + 1) {
        r += 1;
    }
    r
}

pub fn floor_log2(n: u64) -> u32 {
    assert!(n > 0);
    63 - n.leading_zeros()
}

pub fn ceil_log2(n: u64) -> u32 {
    assert!(n > 0);
    if n == 1 {
        0
    } else {
        floor_log2(n - 1) + 1
    }
}

/// `⌊c · log₂ m⌋` for `m ≥ 1`, exact.
pub fn floor_c_log2(c: u64, m: u64) -> u64 {
    assert!(m >= 1);
    if m.is_power_of_two() {
        return c * floor_log2(m) as u64;
    }
    let f = c as f64 * (m as f64).log2();
    let w = f.floor();
    let frac = f - w;
    if frac > 1e-6 && frac < 1.0 - 1e-6 {
        return w as u64;
    }
    // near an integer: bit length of m^c decides
    BigUint::from(m).pow(c as u32).bits() - 1
}

/// Exact test of `(L − c − b·log₂N)·N ≥ rhs`.
pub fn log_slack_at_least(n: u64, l: u64, c: u64, b: u64, rhs: u64) -> bool {
    let e = (l as i128 - c as i128) * n as i128 - rhs as i128;
    if e < 0 {
        return false;
    }
    if n == 1 {
        return true;
    }
    // 2^e ≥ N^{bN}
    let lhs = BigUint::from(1u8) << (e as u64);
    lhs >= BigUint::from(n).pow((b * n) as u32)
}

/// `k` with `(k−1)2^{k−1} + 1 ≤ N ≤ k·2^k`, found by scanning.
pub fn sawtooth_k(n: u64) -> u32 {
    assert!(n >= 1);
    let mut k = 1u32;
    loop {
        let lo = (k as u64 - 1) * (1u64 << (k - 1)) + 1;
        let hi = k as u64 * (1u64 << k);
        if lo <= n && n <= hi {
            return k;
        }
        k += 1;
    }
}

/// `K = ⌊N^{1/d}⌋² · ⌊L^{2/d}⌋`.
pub fn cells_per_axis(n: u64, l: u64, d: u32) -> u64 {
    let a = int_root_floor(n, d);
    a * a * int_root_floor(l * l, d)
}

pub fn sawtooth(n: u64, l: u64) -> SizeBudget {
    SizeBudget::new(3 * n, 2 * l)
}

pub fn product2(n: u64, l: u64) -> SizeBudget {
    SizeBudget::new(9 * n, 2 * l)
}

pub fn product2_scaled(n: u64, l: u64) -> SizeBudget {
    SizeBudget::new(9 * n + 1, 2 * l)
}

pub fn multiproduct(n: u64, l: u64, k: u64) -> SizeBudget {
    SizeBudget::new(9 * (n + 1) + k - 1, 14 * k * (k - 1) * l)
}

pub fn monomial_relu(n: u64, l: u64, k: u64) -> SizeBudget {
    SizeBudget::new(9 * (n + 1) + k - 1, 14 * k * k * l)
}

pub fn step(n: u64, l: u64, d: u32) -> SizeBudget {
    SizeBudget::new(4 * int_root_floor(n, d) + 3, 4 * l + 5)
}

/// `16s(N+1)log₂(8N)` and `(5L+2)log₂(4L)`, floored.
pub fn point_matcher(n: u64, l: u64, s: u64) -> SizeBudget {
    SizeBudget::new(floor_c_log2(16 * s * (n + 1), 8 * n), floor_c_log2(5 * l + 2, 4 * l))
}

pub fn monomial_sigma2(n: u64, l: u64, d: u64) -> SizeBudget {
    SizeBudget::new(4 * n + 2 * d, l + ceil_log2(n) as u64)
}

pub fn polynomial_sigma2(n: u64, l: u64, a: u64, d: u64) -> SizeBudget {
    SizeBudget::new(4 * n * a + 2 * d + 2, l)
}

fn compile_width(n: u64, s: u64, d: u64) -> u64 {
    floor_c_log2(16 * s.pow(d as u32 + 1) * d * (n + 2), 8 * n)
}

/// `16s^{d+1}d(N+2)log₂(8N)` by `27s²(L+2)log₂(4L)`.
pub fn compile_relu(n: u64, l: u64, s: u64, d: u64) -> SizeBudget {
    SizeBudget::new(compile_width(n, s, d), floor_c_log2(27 * s * s * (l + 2), 4 * l))
}

/// `16s^{d+1}d(N+2)log₂(8N)` by `10(L+2)log₂(4L)`.
pub fn compile_relu2(n: u64, l: u64, s: u64, d: u64) -> SizeBudget {
    SizeBudget::new(compile_width(n, s, d), floor_c_log2(10 * (l + 2), 4 * l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots() {
        assert_eq!(int_root_floor(8, 3), 2);
        assert_eq!(int_root_floor(7, 3), 1);
        assert_eq!(int_root_floor(1_000_000, 2), 1000);
        assert_eq!(int_root_floor(999_999, 2), 999);
        assert_eq!(int_root_floor(0, 2), 0);
    }

    #[test]
    fn logs() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(floor_c_log2(3, 8), 9);
        // 2 log2 3 = 3.1699…
        assert_eq!(floor_c_log2(2, 3), 3);
        // 3^2 vs 2^3: bit length path
        assert_eq!(BigUint::from(9u8).bits() - 1, 3);
    }

    #[test]
    fn sawtooth_k_brackets() {
        assert_eq!(sawtooth_k(1), 1);
        assert_eq!(sawtooth_k(2), 1);
        assert_eq!(sawtooth_k(3), 2);
        assert_eq!(sawtooth_k(8), 2);
        assert_eq!(sawtooth_k(9), 3);
        assert_eq!(sawtooth_k(24), 3);
        assert_eq!(sawtooth_k(25), 4);
    }

    #[test]
    fn slack_condition() {
        // (L − 2 − log2 N) N ≥ s
        assert!(log_slack_at_least(1, 5, 2, 1, 3));
        assert!(!log_slack_at_least(1, 4, 2, 1, 3));
        assert!(log_slack_at_least(2, 5, 2, 1, 3)); // (5−2−1)·2 = 4
        assert!(!log_slack_at_least(2, 4, 2, 1, 3)); // 2
        assert!(!log_slack_at_least(4, 4, 2, 1, 3)); // 0
        assert!(log_slack_at_least(5, 5, 2, 1, 3)); // (3 − 2.32)·5 = 3.39
    }
}
