//! Mobius function, by trial division for single values and a sieve for
//! bulk use in divisor-sum inversion.

/// mu(k): 0 when a squared prime divides k, otherwise (-1)^(number of
/// prime factors).
pub fn mobius(k: u64) -> i32 {
    assert!(k >= 1);
    let mut n = k;
    let mut sign = 1;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// mu(0..=n) with the unused index 0 set to 0.
pub fn mobius_sieve(n: usize) -> Vec<i8> {
    let mut mu = vec![1i8; n + 1];
    if n >= 1 {
        mu[0] = 0;
    }
    let mut is_composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !is_composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let ip = i * p;
            if ip > n {
                break;
            }
            is_composite[ip] = true;
            if i % p == 0 {
                mu[ip] = 0;
                break;
            }
            mu[ip] = -mu[i];
        }
    }
    mu
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(mobius(1), 1);
        assert_eq!(mobius(3), -1);
        assert_eq!(mobius(6), 1);
        assert_eq!(mobius(12), 0);
        assert_eq!(mobius(30), -1);
    }

    #[test]
    fn sieve_agrees_with_direct() {
        let mu = mobius_sieve(2000);
        for k in 1..=2000usize {
            assert_eq!(mu[k] as i32, mobius(k as u64), "k = {k}");
        }
    }

    #[test]
    fn divisor_sums_collapse_to_the_identity() {
        // sum of mu over divisors picks out k = 1, checked for every k to 10^4
        let mu = mobius_sieve(10_000);
        for k in 1..=10_000usize {
            let mut s = 0i32;
            let mut d = 1usize;
            while d * d <= k {
                if k % d == 0 {
                    s += i32::from(mu[d]);
                    if d * d != k {
                        s += i32::from(mu[k / d]);
                    }
                }
                d += 1;
            }
            assert_eq!(s, i32::from(k == 1), "k = {k}");
        }
    }
}
