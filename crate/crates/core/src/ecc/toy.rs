//! A deliberately tiny curve for exhaustive oracles.
//!
//! y^2 = x^3 + 5x + 7 over F_83 has exactly 101 points, and 101 is prime,
//! so every non-identity point generates the whole group. Discrete logs,
//! full key scans and brute-force test oracles all run in microseconds.

/// Affine short-Weierstrass arithmetic over a word-sized prime field.
#[derive(Debug, Clone)]
pub(super) struct ToyCurve {
    pub p: u64,
    pub a: u64,
    pub b: u64,
    pub gx: u64,
    pub gy: u64,
    /// Number of points including the identity; prime.
    pub q: u64,
}

impl Default for ToyCurve {
    fn default() -> Self {
        ToyCurve { p: 83, a: 5, b: 7, gx: 0, gy: 16, q: 101 }
    }
}

type Pt = Option<(u64, u64)>;

impl ToyCurve {
    pub fn is_on_curve(&self, (x, y): (u64, u64)) -> bool {
        if x >= self.p || y >= self.p {
            return false;
        }
        (y * y) % self.p == (x * x % self.p * x + self.a * x + self.b) % self.p
    }

    pub fn add(&self, lhs: Pt, rhs: Pt) -> Pt {
        let p = self.p;
        let (x1, y1) = match lhs {
            None => return rhs,
            Some(v) => v,
        };
        let (x2, y2) = match rhs {
            None => return lhs,
            Some(v) => v,
        };
        if x1 == x2 && (y1 + y2) % p == 0 {
            return None;
        }
        let lam = if (x1, y1) == (x2, y2) {
            (3 * x1 % p * x1 + self.a) % p * Self::inv((2 * y1) % p, p) % p
        } else {
            (y2 + p - y1) % p * Self::inv((x2 + p - x1) % p, p) % p
        };
        let x3 = (lam * lam % p + 2 * p - x1 - x2) % p;
        let y3 = (lam * ((x1 + p - x3) % p) % p + p - y1) % p;
        Some((x3, y3))
    }

    pub fn mul(&self, mut k: u64, pt: (u64, u64)) -> Pt {
        k %= self.q;
        let mut acc: Pt = None;
        let mut addend: Pt = Some(pt);
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, addend);
            }
            addend = self.add(addend, addend);
            k >>= 1;
        }
        acc
    }

    /// y from x and parity, by scanning the tiny field.
    pub fn decompress(&self, x: u64, y_odd: bool) -> Pt {
        if x >= self.p {
            return None;
        }
        let rhs = (x * x % self.p * x + self.a * x + self.b) % self.p;
        (0..self.p)
            .find(|y| (y * y) % self.p == rhs && (y & 1 == 1) == y_odd)
            .map(|y| (x, y))
    }

    fn inv(v: u64, p: u64) -> u64 {
        // Fermat; p is tiny so the loop cost is irrelevant.
        let mut acc = 1u64;
        let mut base = v % p;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_enumeration_has_prime_order() {
        let c = ToyCurve::default();
        let mut count = 1u64; // identity
        for x in 0..c.p {
            for y in 0..c.p {
                if c.is_on_curve((x, y)) {
                    count += 1;
                }
            }
        }
        assert_eq!(count, c.q);
        // generator annihilated exactly at q
        assert_eq!(c.mul(c.q, (c.gx, c.gy)), None);
        for k in 1..c.q {
            assert!(c.mul(k, (c.gx, c.gy)).is_some(), "order must be prime, k={k}");
        }
    }

    #[test]
    fn decompress_both_parities() {
        let c = ToyCurve::default();
        for k in 1..c.q {
            let (x, y) = c.mul(k, (c.gx, c.gy)).unwrap();
            let back = c.decompress(x, y & 1 == 1).unwrap();
            assert_eq!(back, (x, y));
        }
    }
}
