//! Partition and tree priors: the two-parameter Gibbs splitting rule, the
//! fragmentation-tree prior built from it, the Chinese restaurant process,
//! and exact samplers.

use std::cmp::Ordering;
use std::ops::{Div, Mul, Neg};

use rand::Rng;

use crate::error::{invalid, Result};
use crate::partition::FlatPartition;
use crate::scalar::Real;
use crate::tree::{FragTree, Nested};

/// Parameters `(alpha, beta)` of the splitting rule.
///
/// Supported box: `0 < alpha <= 1` and `beta + alpha > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GibbsParams<T = f64> {
    alpha: T,
    beta: T,
}

impl<T: Real> GibbsParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(beta + alpha > T::zero()) || !beta.is_finite() {
            return Err(invalid(format!("beta + alpha must be positive, got beta = {beta}")));
        }
        Ok(GibbsParams { alpha, beta })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }
}

impl<T: Real> Default for GibbsParams<T> {
    fn default() -> Self {
        GibbsParams {
            alpha: T::of(0.5),
            beta: T::of(0.5),
        }
    }
}

/// A real number stored as sign and log magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedLogValue<T = f64> {
    sign: i8,
    log_magnitude: T,
}

impl<T: Real> SignedLogValue<T> {
    pub fn zero() -> Self {
        SignedLogValue {
            sign: 0,
            log_magnitude: T::neg_infinity(),
        }
    }

    pub fn one() -> Self {
        SignedLogValue {
            sign: 1,
            log_magnitude: T::zero(),
        }
    }

    pub fn from_parts(sign: i8, log_magnitude: T) -> Self {
        if sign == 0 || log_magnitude == T::neg_infinity() {
            Self::zero()
        } else {
            SignedLogValue {
                sign: sign.signum(),
                log_magnitude,
            }
        }
    }

    pub fn from_value(x: T) -> Self {
        match x.partial_cmp(&T::zero()) {
            Some(Ordering::Greater) => Self::from_parts(1, x.ln()),
            Some(Ordering::Less) => Self::from_parts(-1, (-x).ln()),
            _ => Self::zero(),
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn log_magnitude(&self) -> T {
        self.log_magnitude
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn value(&self) -> T {
        match self.sign {
            0 => T::zero(),
            s => T::of(f64::from(s)) * self.log_magnitude.exp(),
        }
    }

    /// Signed sum, exact in sign.
    pub fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.log_magnitude >= other.log_magnitude {
            (self, other)
        } else {
            (other, self)
        };
        let ratio = (small.log_magnitude - big.log_magnitude).exp();
        if big.sign == small.sign {
            Self::from_parts(big.sign, big.log_magnitude + ratio.ln_1p())
        } else if ratio == T::one() {
            Self::zero()
        } else {
            Self::from_parts(big.sign, big.log_magnitude + (-ratio).ln_1p())
        }
    }
}

impl<T: Real> Mul for SignedLogValue<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::from_parts(self.sign * rhs.sign, self.log_magnitude + rhs.log_magnitude)
    }
}

impl<T: Real> Div for SignedLogValue<T> {
    type Output = Self;

    /// Division by zero yields zero; callers check denominators.
    fn div(self, rhs: Self) -> Self {
        if rhs.is_zero() {
            return Self::zero();
        }
        Self::from_parts(self.sign * rhs.sign, self.log_magnitude - rhs.log_magnitude)
    }
}

impl<T: Real> Neg for SignedLogValue<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Self::from_parts(-self.sign, self.log_magnitude)
    }
}

/// Rising factorial `x (x+1) ... (x+n-1)`; `x^(0) = 1`.
pub fn rising_factorial<T: Real>(x: T, n: usize) -> SignedLogValue<T> {
    if n == 0 {
        return SignedLogValue::one();
    }
    let nf = T::of_count(n);
    if x > T::zero() {
        return SignedLogValue::from_parts(1, (x + nf).log_gamma() - x.log_gamma());
    }
    // x <= 0: the first `m` factors are negative, a zero factor kills it.
    let neg = -x;
    if neg == neg.floor() && neg < nf {
        return SignedLogValue::zero();
    }
    let m = neg.ceil().min(nf);
    let m_count = m.to_usize().expect("small count");
    // prod_{i<m} (-x - i) = Gamma(1 - x) / Gamma(1 - x - m)
    let mut log_mag = (T::one() - x).log_gamma() - (T::one() - x - m).log_gamma();
    if m_count < n {
        log_mag = log_mag + (x + nf).log_gamma() - (x + m).log_gamma();
    }
    let sign = if m_count % 2 == 0 { 1 } else { -1 };
    SignedLogValue::from_parts(sign, log_mag)
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(invalid(format!("a split needs at least two blocks, got {}", sizes.len())));
    }
    if let Some(pos) = sizes.iter().position(|&s| s == 0) {
        return Err(invalid(format!("block {pos} has size 0")));
    }
    Ok(())
}

/// Probability of splitting an `n`-set into blocks of the given sizes, as a
/// signed log value.
///
/// The common factor `beta` of numerator and denominator is cancelled, which
/// keeps `beta = 0` inside the supported box:
///
/// ```text
///            (1/a) (b/a + 1)^(k-1) (-1)^k  prod_i (-a)^(n_i)
///   q  =  -----------------------------------------------------
///                 (b + 1)^(n-1) + (-a)^(n) / a
/// ```
fn split_value<T: Real>(sizes: &[usize], params: &GibbsParams<T>) -> SignedLogValue<T> {
    let (a, b) = (params.alpha, params.beta);
    let k = sizes.len();
    let n: usize = sizes.iter().sum();
    let inv_a = SignedLogValue::from_value(a.recip());
    let mut num = inv_a * rising_factorial(b / a + T::one(), k - 1);
    if k % 2 == 1 {
        num = -num;
    }
    for &s in sizes {
        num = num * rising_factorial(-a, s);
        if num.is_zero() {
            return num;
        }
    }
    let den = rising_factorial(b + T::one(), n - 1).add(inv_a * rising_factorial(-a, n));
    num / den
}

/// Log probability of a split into blocks of sizes `sizes` (at least two
/// blocks, all nonempty). `-inf` when the split has probability zero.
pub fn split_log_prob<T: Real>(sizes: &[usize], params: &GibbsParams<T>) -> Result<T> {
    check_sizes(sizes)?;
    let q = split_value(sizes, params);
    debug_assert!(q.sign() >= 0, "negative split probability for {sizes:?}");
    Ok(if q.sign() > 0 { q.log_magnitude() } else { T::neg_infinity() })
}

/// `q(n)` with the `q(0) = q(1) = 1` convention for single blocks.
fn split_prob<T: Real>(sizes: &[usize], params: &GibbsParams<T>) -> T {
    if sizes.len() < 2 {
        return T::one();
    }
    split_value(sizes, params).value()
}

/// Markovian consistency residual of the splitting rule at `sizes`: the
/// probability of the split minus the total probability of all ways of
/// adding one more element to it. Zero for a consistent rule.
pub fn consistency_residual<T: Real>(sizes: &[usize], params: &GibbsParams<T>) -> Result<T> {
    check_sizes(sizes)?;
    let q = split_prob(sizes, params);
    let mut extended = sizes.to_vec();
    extended.push(1);
    let mut total = split_prob(&extended, params);
    for i in 0..sizes.len() {
        let mut grown = sizes.to_vec();
        grown[i] += 1;
        total = total + split_prob(&grown, params);
    }
    let n: usize = sizes.iter().sum();
    total = total + split_prob(&[1, n], params) * q;
    Ok(q - total)
}

/// Log prior of a fragmentation tree: the sum of the split log
/// probabilities of its internal nodes.
pub fn tree_log_prior<T: Real>(tree: &FragTree, params: &GibbsParams<T>) -> T {
    let mut total = T::zero();
    let mut sizes = Vec::new();
    for r in tree.internal_nodes() {
        sizes.clear();
        for c in tree.children(r).expect("live node") {
            sizes.push(tree.leaf_count(c).expect("live node"));
        }
        total = total + split_log_prob(&sizes, params).expect("internal nodes have two or more children");
    }
    total
}

/// Log probability of a partition under the two-parameter CRP, including the
/// single-block partition.
pub fn crp_log_prob<T: Real>(partition: &FlatPartition, params: &GibbsParams<T>) -> T {
    let n = partition.len();
    if n == 0 {
        return T::zero();
    }
    let (a, b) = (params.alpha, params.beta);
    let sizes = partition.sizes();
    let mut acc = SignedLogValue::one();
    for j in 1..sizes.len() {
        acc = acc * SignedLogValue::from_value(b + T::of_count(j) * a);
    }
    for &s in &sizes {
        acc = acc * rising_factorial(T::one() - a, s - 1);
    }
    acc = acc / rising_factorial(b + T::one(), n - 1);
    if acc.sign() > 0 {
        acc.log_magnitude()
    } else {
        T::neg_infinity()
    }
}

/// One sequential CRP draw of `n` labels.
fn crp_draw<R: Rng + ?Sized>(n: usize, alpha: f64, beta: f64, rng: &mut R, labels: &mut Vec<usize>, sizes: &mut Vec<usize>) {
    labels.clear();
    sizes.clear();
    for m in 0..n {
        if m == 0 {
            labels.push(0);
            sizes.push(1);
            continue;
        }
        let total = m as f64 + beta;
        let mut u = rng.random::<f64>() * total;
        let mut chosen = sizes.len();
        for (b, &s) in sizes.iter().enumerate() {
            let w = s as f64 - alpha;
            if u < w {
                chosen = b;
                break;
            }
            u -= w;
        }
        if chosen == sizes.len() {
            sizes.push(1);
        } else {
            sizes[chosen] += 1;
        }
        labels.push(chosen);
    }
}

/// Draws a partition of `0..n` into at least two blocks from the splitting
/// rule: sequential CRP draws, rejecting the single-block outcome.
pub fn sample_partition<T: Real, R: Rng + ?Sized>(n: usize, params: &GibbsParams<T>, rng: &mut R) -> Result<FlatPartition> {
    if n < 2 {
        return Err(invalid(format!("cannot split fewer than two elements (n = {n})")));
    }
    let (alpha, beta) = (params.alpha.as_f64(), params.beta.as_f64());
    let mut labels = Vec::with_capacity(n);
    let mut sizes = Vec::new();
    loop {
        crp_draw(n, alpha, beta, rng, &mut labels, &mut sizes);
        if sizes.len() >= 2 {
            return Ok(FlatPartition::from_labels(&labels));
        }
    }
}

/// Draws a partition from the CRP itself (single block allowed).
pub fn sample_crp<T: Real, R: Rng + ?Sized>(n: usize, params: &GibbsParams<T>, rng: &mut R) -> FlatPartition {
    let mut labels = Vec::with_capacity(n);
    let mut sizes = Vec::new();
    crp_draw(n, params.alpha.as_f64(), params.beta.as_f64(), rng, &mut labels, &mut sizes);
    FlatPartition::from_labels(&labels)
}

/// Draws a fragmentation tree over leaves `0..n` by splitting recursively
/// until every block is a singleton.
pub fn sample_tree<T: Real, R: Rng + ?Sized>(n: usize, params: &GibbsParams<T>, rng: &mut R) -> Result<FragTree> {
    if n == 0 {
        return Err(invalid("a tree needs at least one leaf"));
    }
    let vertices: Vec<usize> = (0..n).collect();
    let nested = sample_nested(&vertices, params, rng)?;
    FragTree::from_nested(&nested)
}

fn sample_nested<T: Real, R: Rng + ?Sized>(vertices: &[usize], params: &GibbsParams<T>, rng: &mut R) -> Result<Nested> {
    if vertices.len() == 1 {
        return Ok(Nested::Leaf(vertices[0]));
    }
    let split = sample_partition(vertices.len(), params, rng)?;
    let mut kids = Vec::with_capacity(split.n_blocks());
    for block in split.blocks() {
        let members: Vec<usize> = block.iter().map(|&i| vertices[i]).collect();
        kids.push(sample_nested(&members, params, rng)?);
    }
    Ok(Nested::Node(kids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn half() -> GibbsParams {
        GibbsParams::new(0.5, 0.5).unwrap()
    }

    #[test]
    fn rising_factorial_values() {
        assert!((rising_factorial(0.5f64, 2).value() - 0.75).abs() < 1e-14);
        assert_eq!(rising_factorial(-3.7f64, 0), SignedLogValue::one());
        let direct = -0.5 * 0.5 * 1.5;
        assert!((rising_factorial(-0.5f64, 3).value() - direct).abs() < 1e-14);
        assert!(rising_factorial(-2.0f64, 3).is_zero());
        // all factors negative: (-2.5)(-1.5) = 3.75
        assert!((rising_factorial(-2.5f64, 2).value() - 3.75).abs() < 1e-13);
        assert!(rising_factorial(-3.0f64, 3).value() == -6.0f64 || (rising_factorial(-3.0f64, 3).value() + 6.0).abs() < 1e-12);
    }

    #[test]
    fn rising_factorial_matches_direct_product() {
        for &x in &[-4.3f64, -2.5, -1.0, -0.5, -0.1, 0.0, 0.3, 1.0, 2.75, 11.0] {
            for n in 0..9 {
                let direct: f64 = (0..n).map(|i| x + i as f64).product();
                let got = rising_factorial(x, n).value();
                assert!((got - direct).abs() <= 1e-10 * direct.abs().max(1.0), "x={x} n={n}: {got} vs {direct}");
            }
        }
    }

    #[test]
    fn signed_log_arithmetic() {
        let a = SignedLogValue::from_value(3.0f64);
        let b = SignedLogValue::from_value(-5.0f64);
        assert!(((a * b).value() + 15.0).abs() < 1e-12);
        assert!((a.add(b).value() + 2.0).abs() < 1e-12);
        assert!(a.add(-a).is_zero());
        assert!(((b / a).value() + 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn split_probabilities_at_half() {
        let p = half();
        assert!(split_log_prob(&[1, 1], &p).unwrap().abs() < 1e-14);
        assert!((split_log_prob(&[2, 1], &p).unwrap() - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        assert!((split_log_prob(&[1, 2], &p).unwrap() - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        assert!((split_log_prob(&[1, 1, 1], &p).unwrap() - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn split_at_alpha_one_is_degenerate() {
        for beta in [-0.5, 0.0, 2.0] {
            let p = GibbsParams::<f64>::new(1.0, beta).unwrap();
            assert!(split_log_prob(&[1, 1, 1, 1], &p).unwrap().abs() < 1e-12);
            assert_eq!(split_log_prob(&[2, 1, 1], &p).unwrap(), f64::NEG_INFINITY);
        }
    }

    #[test]
    fn split_rejects_bad_sizes() {
        assert!(split_log_prob(&[3], &half()).is_err());
        assert!(split_log_prob(&[2, 0], &half()).is_err());
        assert!(consistency_residual(&[1], &half()).is_err());
    }

    #[test]
    fn consistency_at_half() {
        assert!(consistency_residual(&[1, 1], &half()).unwrap().abs() < 1e-14);
        let p = GibbsParams::<f64>::new(0.37, 2.1).unwrap();
        assert!(consistency_residual(&[3, 2], &p).unwrap().abs() < 1e-10);
        let p1 = GibbsParams::<f64>::new(1.0, 0.4).unwrap();
        assert!(consistency_residual(&[1, 1, 1], &p1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn tree_prior_small_trees() {
        let p = half();
        assert!(tree_log_prior(&"[0,1]".parse().unwrap(), &p).abs() < 1e-14);
        assert!((tree_log_prior(&"[0,1,2]".parse().unwrap(), &p) - 0.5f64.ln()).abs() < 1e-12);
        for s in ["[[0,1],2]", "[[0,2],1]", "[0,[1,2]]"] {
            assert!((tree_log_prior(&s.parse().unwrap(), &p) - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn crp_two_elements() {
        let p = half();
        assert_eq!(crp_log_prob(&FlatPartition::single_block(1), &p), 0.0);
        let together = crp_log_prob(&FlatPartition::from_labels(&[0, 0]), &p);
        let apart = crp_log_prob(&FlatPartition::from_labels(&[0, 1]), &p);
        assert!((together.exp() - 1.0 / 3.0).abs() < 1e-14);
        assert!((apart.exp() - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn params_box() {
        assert!(GibbsParams::new(0.0, 1.0).is_err());
        assert!(GibbsParams::new(1.2, 1.0).is_err());
        assert!(GibbsParams::new(0.5, -0.5).is_err());
        assert!(GibbsParams::new(0.5, -0.4).is_ok());
        assert!(GibbsParams::<f32>::new(0.5, f32::NAN).is_err());
    }

    #[test]
    fn samplers_respect_postconditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = half();
        for _ in 0..200 {
            let part = sample_partition(2, &p, &mut rng).unwrap();
            assert_eq!(part.labels(), &[0, 1]);
            let part = sample_partition(6, &GibbsParams::new(0.1, 0.0).unwrap(), &mut rng).unwrap();
            assert!(part.n_blocks() >= 2);
        }
        assert!(sample_partition(1, &p, &mut rng).is_err());
        assert_eq!(sample_tree(1, &p, &mut rng).unwrap().canonical(), "0");
        assert_eq!(sample_tree(2, &p, &mut rng).unwrap().canonical(), "[0,1]");
        let flat = GibbsParams::new(1.0, 0.5).unwrap();
        for _ in 0..20 {
            assert_eq!(sample_tree(6, &flat, &mut rng).unwrap(), FragTree::star(6).unwrap());
        }
        let t = sample_tree(40, &p, &mut rng).unwrap();
        t.validate().unwrap();
        assert!(t.covers_vertices(40));
    }

    #[test]
    fn f32_split_rule() {
        let p = GibbsParams::<f32>::new(0.5, 0.5).unwrap();
        assert!((split_log_prob(&[2, 1], &p).unwrap() - (1.0f32 / 6.0).ln()).abs() < 1e-5);
    }
}
