use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Half-open subinterval `[low, high)` of `[0, 1)`, exact.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    low: BigRational,
    high: BigRational,
}

impl Interval {
    /// `None` unless `0 ≤ low < high ≤ 1`.
    pub fn new(low: BigRational, high: BigRational) -> Option<Self> {
        if !low.is_negative() && low < high && high <= BigRational::one() {
            Some(Interval { low, high })
        } else {
            None
        }
    }

    pub fn unit() -> Self {
        Interval {
            low: BigRational::zero(),
            high: BigRational::one(),
        }
    }

    pub fn low(&self) -> &BigRational {
        &self.low
    }

    pub fn high(&self) -> &BigRational {
        &self.high
    }

    pub fn length(&self) -> BigRational {
        &self.high - &self.low
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.low <= x && x < &self.high
    }

    /// Longest bit string whose dyadic cell `[s, s + 2^-|s|)` contains the
    /// whole interval: the common binary prefix of `low` and `high⁻`.
    pub fn common_prefix(&self) -> Vec<bool> {
        let denom = self.low.denom().lcm(self.high.denom());
        let scale = |x: &BigRational| to_biguint(&(x.numer() * (&denom / x.denom())));
        common_prefix(&scale(&self.low), &scale(&self.high), &to_biguint(&denom))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.low, self.high)
    }
}

fn to_biguint(x: &BigInt) -> BigUint {
    x.to_biguint().expect("non-negative")
}

/// Common binary prefix of `low/denom` and the left limit of `high/denom`.
pub(crate) fn common_prefix(low: &BigUint, high: &BigUint, denom: &BigUint) -> Vec<bool> {
    debug_assert!(low < high && high <= denom);
    let mut out = Vec::new();
    let (mut a, mut b) = (low.clone(), high.clone());
    loop {
        a <<= 1;
        b <<= 1;
        let bit_a = a >= *denom;
        // Strict comparison yields the expansion of high approached from below.
        let bit_b = b > *denom;
        if bit_a != bit_b {
            return out;
        }
        if bit_a {
            a -= denom;
            b -= denom;
        }
        out.push(bit_a);
    }
}

/// Interval kept as `[low/denom, (low + width)/denom)` with integer parts, so
/// narrowing by a child of weight `w` at offset `cum` out of `total` is two
/// multiplications and an add.
#[derive(Clone, Debug)]
pub(crate) struct Scaled {
    pub(crate) low: BigUint,
    pub(crate) width: BigUint,
    pub(crate) denom: BigUint,
}

impl Scaled {
    pub(crate) fn unit() -> Self {
        Scaled {
            low: BigUint::zero(),
            width: BigUint::one(),
            denom: BigUint::one(),
        }
    }

    pub(crate) fn narrow(&mut self, cum: u64, weight: u64, total: u64) {
        debug_assert!(weight > 0 && cum + weight <= total);
        self.low = &self.low * total + &self.width * cum;
        self.width *= weight;
        self.denom *= total;
    }

    pub(crate) fn common_prefix(&self) -> Vec<bool> {
        common_prefix(&self.low, &(&self.low + &self.width), &self.denom)
    }

    pub(crate) fn to_interval(&self) -> Interval {
        let d = BigInt::from(self.denom.clone());
        Interval {
            low: BigRational::new(BigInt::from(self.low.clone()), d.clone()),
            high: BigRational::new(BigInt::from(&self.low + &self.width), d),
        }
    }
}
