//! Prime-order elliptic-curve group abstraction.
//!
//! Every other module builds on the small interface exposed here: named
//! standard curves (backed by OpenSSL) plus a deliberately tiny toy curve
//! whose discrete logs are brute-forceable, used by correctness oracles.
//!
//! Group elements are stored as affine coordinates and are plain immutable
//! data: safe to clone, share and send between threads. All scalar
//! arithmetic is modulo the group order `q`.

mod toy;

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_bigint::BigUint;
use openssl::bn::{BigNum, BigNumContext};
use openssl::ec::{EcGroup, EcPoint};
use openssl::nid::Nid;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Counts point-scalar multiplications across the whole process.
///
/// The precomputation tests assert that the pooled online path performs
/// zero of them; benchmarks report deltas.
static SCALAR_MUL_COUNT: AtomicU64 = AtomicU64::new(0);

/// Snapshot of the global point-multiplication counter.
pub fn scalar_mul_count() -> u64 {
    SCALAR_MUL_COUNT.load(Ordering::Relaxed)
}

fn bump_mul_count(n: u64) {
    SCALAR_MUL_COUNT.fetch_add(n, Ordering::Relaxed);
}

thread_local! {
    static BN_CTX: RefCell<BigNumContext> =
        RefCell::new(BigNumContext::new().expect("bignum context"));
}

#[derive(Debug, Error)]
pub enum EccError {
    #[error("unknown curve name: {0}")]
    UnknownCurve(String),
    #[error("point is not on the curve (or not a valid compressed encoding)")]
    InvalidPoint,
    #[error("the identity element has no wire encoding")]
    IdentityEncoding,
    #[error("scalar does not fit the requested width or exceeds the group order")]
    ScalarRange,
    #[error("discrete-log oracle only runs on the toy curve, got {0}")]
    OracleNeedsToyCurve(CurveId),
    #[error("discrete-log oracle: no solution, element is outside the subgroup")]
    NoDiscreteLog,
    #[error("curve backend failure: {0}")]
    Backend(#[from] openssl::error::ErrorStack),
}

/// Named curves the protocol can be instantiated on.
///
/// The four standard SECG curves cover the 64/80/96/128-bit security
/// levels. `Toy` is a 101-point curve over F_83 for exhaustive oracles and
/// must never back a deployment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveId {
    Secp128r1,
    Secp160r1,
    Secp192k1,
    Secp256k1,
    Toy,
}

impl CurveId {
    pub const ALL: [CurveId; 5] = [
        CurveId::Secp128r1,
        CurveId::Secp160r1,
        CurveId::Secp192k1,
        CurveId::Secp256k1,
        CurveId::Toy,
    ];

    pub const STANDARD: [CurveId; 4] = [
        CurveId::Secp128r1,
        CurveId::Secp160r1,
        CurveId::Secp192k1,
        CurveId::Secp256k1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CurveId::Secp128r1 => "secp128r1",
            CurveId::Secp160r1 => "secp160r1",
            CurveId::Secp192k1 => "secp192k1",
            CurveId::Secp256k1 => "secp256k1",
            CurveId::Toy => "toy",
        }
    }

    /// Byte width of one field coordinate.
    pub fn coord_bytes(self) -> usize {
        match self {
            CurveId::Secp128r1 => 16,
            CurveId::Secp160r1 => 20,
            CurveId::Secp192k1 => 24,
            CurveId::Secp256k1 => 32,
            CurveId::Toy => 1,
        }
    }

    /// Security level in bits; 0 for the toy curve.
    pub fn security_bits(self) -> u32 {
        match self {
            CurveId::Secp128r1 => 64,
            CurveId::Secp160r1 => 80,
            CurveId::Secp192k1 => 96,
            CurveId::Secp256k1 => 128,
            CurveId::Toy => 0,
        }
    }

    /// Standard curve for a given security level.
    pub fn from_security_bits(bits: u32) -> Option<CurveId> {
        CurveId::STANDARD.into_iter().find(|c| c.security_bits() == bits)
    }

    fn nid(self) -> Option<Nid> {
        match self {
            CurveId::Secp128r1 => Some(Nid::SECP128R1),
            CurveId::Secp160r1 => Some(Nid::SECP160R1),
            CurveId::Secp192k1 => Some(Nid::SECP192K1),
            CurveId::Secp256k1 => Some(Nid::SECP256K1),
            CurveId::Toy => None,
        }
    }
}

impl fmt::Display for CurveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CurveId {
    type Err = EccError;

    fn from_str(s: &str) -> Result<Self, EccError> {
        CurveId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| EccError::UnknownCurve(s.to_string()))
    }
}

enum Backend {
    Standard(EcGroup),
    Toy(toy::ToyCurve),
}

struct ParamsInner {
    curve_id: CurveId,
    q: BigUint,
    field_p: BigUint,
    generator: (BigUint, BigUint),
    backend: Backend,
}

/// Domain parameters of one curve instantiation: generator `G`, prime
/// order `q`, coordinate width. Cheap to clone and share.
#[derive(Clone)]
pub struct GroupParams {
    inner: Arc<ParamsInner>,
}

impl fmt::Debug for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupParams")
            .field("curve_id", &self.curve_id())
            .finish()
    }
}

impl GroupParams {
    pub fn new(curve_id: CurveId) -> Result<GroupParams, EccError> {
        let inner = match curve_id.nid() {
            Some(nid) => {
                let group = EcGroup::from_curve_name(nid)?;
                BN_CTX.with(|ctx| -> Result<ParamsInner, EccError> {
                    let ctx = &mut ctx.borrow_mut();
                    let mut q = BigNum::new()?;
                    group.order(&mut q, ctx)?;
                    let mut p = BigNum::new()?;
                    let mut a = BigNum::new()?;
                    let mut b = BigNum::new()?;
                    group.components_gfp(&mut p, &mut a, &mut b, ctx)?;
                    let mut gx = BigNum::new()?;
                    let mut gy = BigNum::new()?;
                    let gen = group.generator_opt().expect("named curve has a generator");
                    gen.affine_coordinates(&group, &mut gx, &mut gy, ctx)?;
                    Ok(ParamsInner {
                        curve_id,
                        q: bn_to_uint(&q),
                        field_p: bn_to_uint(&p),
                        generator: (bn_to_uint(&gx), bn_to_uint(&gy)),
                        backend: Backend::Standard(group),
                    })
                })?
            }
            None => {
                let curve = toy::ToyCurve::default();
                ParamsInner {
                    curve_id,
                    q: BigUint::from(curve.q),
                    field_p: BigUint::from(curve.p),
                    generator: (BigUint::from(curve.gx), BigUint::from(curve.gy)),
                    backend: Backend::Toy(curve),
                }
            }
        };
        Ok(GroupParams { inner: Arc::new(inner) })
    }

    pub fn curve_id(&self) -> CurveId {
        self.inner.curve_id
    }

    /// Prime order of the group.
    pub fn order(&self) -> &BigUint {
        &self.inner.q
    }

    pub fn coord_bytes(&self) -> usize {
        self.inner.curve_id.coord_bytes()
    }

    pub fn security_bits(&self) -> u32 {
        self.inner.curve_id.security_bits()
    }

    pub fn generator(&self) -> GroupElement {
        GroupElement {
            curve_id: self.curve_id(),
            point: Some(self.inner.generator.clone()),
        }
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement { curve_id: self.curve_id(), point: None }
    }

    /// `k * E`.
    pub fn scalar_mul(&self, k: &Scalar, e: &GroupElement) -> GroupElement {
        self.check_curve(e);
        bump_mul_count(1);
        if k.is_zero() {
            return self.identity();
        }
        let point = match &e.point {
            None => None,
            Some(xy) => match &self.inner.backend {
                Backend::Toy(c) => c.mul(uint_to_u64(&k.0), toy_pt(xy)).map(toy_to_uint),
                Backend::Standard(group) => self.with_ctx(|ctx| {
                    let ep = affine_to_point(group, xy, ctx);
                    let mut out = EcPoint::new(group).expect("point alloc");
                    out.mul2(group, &ep, &uint_to_bn(&k.0), ctx).expect("point mul");
                    point_to_affine(group, &out, ctx)
                }),
            },
        };
        GroupElement { curve_id: self.curve_id(), point }
    }

    /// `k * G`, the common special case of [`GroupParams::scalar_mul`].
    pub fn mul_generator(&self, k: &Scalar) -> GroupElement {
        bump_mul_count(1);
        if k.is_zero() {
            return self.identity();
        }
        let point = match &self.inner.backend {
            Backend::Toy(c) => c
                .mul(uint_to_u64(&k.0), (c.gx, c.gy))
                .map(toy_to_uint),
            Backend::Standard(group) => self.with_ctx(|ctx| {
                let mut out = EcPoint::new(group).expect("point alloc");
                out.mul_generator2(group, &uint_to_bn(&k.0), ctx).expect("point mul");
                point_to_affine(group, &out, ctx)
            }),
        };
        GroupElement { curve_id: self.curve_id(), point }
    }

    /// `n * G + m * E` in one pass; used by signature verification.
    pub fn mul_sum(&self, n: &Scalar, m: &Scalar, e: &GroupElement) -> GroupElement {
        self.check_curve(e);
        let lhs = self.mul_generator(n);
        let rhs = self.scalar_mul(m, e);
        self.add(&lhs, &rhs)
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.check_curve(a);
        self.check_curve(b);
        let point = match (&a.point, &b.point) {
            (None, _) => b.point.clone(),
            (_, None) => a.point.clone(),
            (Some(pa), Some(pb)) => match &self.inner.backend {
                Backend::Toy(c) => c.add(Some(toy_pt(pa)), Some(toy_pt(pb))).map(toy_to_uint),
                Backend::Standard(group) => self.with_ctx(|ctx| {
                    let ea = affine_to_point(group, pa, ctx);
                    let eb = affine_to_point(group, pb, ctx);
                    let mut out = EcPoint::new(group).expect("point alloc");
                    out.add(group, &ea, &eb, ctx).expect("point add");
                    point_to_affine(group, &out, ctx)
                }),
            },
        };
        GroupElement { curve_id: self.curve_id(), point }
    }

    pub fn negate(&self, e: &GroupElement) -> GroupElement {
        self.check_curve(e);
        let point = e.point.as_ref().map(|(x, y)| {
            if y == &BigUint::ZERO {
                (x.clone(), y.clone())
            } else {
                (x.clone(), &self.inner.field_p - y)
            }
        });
        GroupElement { curve_id: self.curve_id(), point }
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let nb = self.negate(b);
        self.add(a, &nb)
    }

    /// On-curve check. Every curve here has cofactor 1, so on-curve
    /// non-identity elements are automatically in the order-q subgroup.
    pub fn is_valid(&self, e: &GroupElement) -> bool {
        if e.curve_id != self.curve_id() {
            return false;
        }
        match &e.point {
            None => true,
            Some(xy) => match &self.inner.backend {
                Backend::Toy(c) => c.is_on_curve(toy_pt(xy)),
                Backend::Standard(group) => self.with_ctx(|ctx| {
                    if xy.0 >= self.inner.field_p || xy.1 >= self.inner.field_p {
                        return false;
                    }
                    let ep = affine_to_point_checked(group, xy, ctx);
                    match ep {
                        Some(ep) => ep.is_on_curve(group, ctx).unwrap_or(false),
                        None => false,
                    }
                }),
            },
        }
    }

    /// Compressed encoding: big-endian x-coordinate sized to
    /// [`CurveId::coord_bytes`], plus the parity of y carried separately.
    pub fn compress(&self, e: &GroupElement) -> Result<(Vec<u8>, bool), EccError> {
        self.check_curve(e);
        match &e.point {
            None => Err(EccError::IdentityEncoding),
            Some((x, y)) => {
                let xb = uint_to_fixed_bytes(x, self.coord_bytes()).ok_or(EccError::ScalarRange)?;
                Ok((xb, y.bit(0)))
            }
        }
    }

    /// Rebuilds a point from its x-coordinate and y parity, validating
    /// curve membership.
    pub fn decompress(&self, x_bytes: &[u8], y_odd: bool) -> Result<GroupElement, EccError> {
        if x_bytes.len() != self.coord_bytes() {
            return Err(EccError::InvalidPoint);
        }
        let point = match &self.inner.backend {
            Backend::Toy(c) => {
                let x = BigUint::from_bytes_be(x_bytes);
                if x >= self.inner.field_p {
                    return Err(EccError::InvalidPoint);
                }
                c.decompress(uint_to_u64(&x), y_odd)
                    .map(toy_to_uint)
                    .ok_or(EccError::InvalidPoint)?
            }
            Backend::Standard(group) => {
                let mut sec1 = Vec::with_capacity(1 + x_bytes.len());
                sec1.push(if y_odd { 0x03 } else { 0x02 });
                sec1.extend_from_slice(x_bytes);
                self.with_ctx(|ctx| -> Result<(BigUint, BigUint), EccError> {
                    let ep = EcPoint::from_bytes(group, &sec1, ctx)
                        .map_err(|_| EccError::InvalidPoint)?;
                    if !ep.is_on_curve(group, ctx)? {
                        return Err(EccError::InvalidPoint);
                    }
                    Ok(point_to_affine(group, &ep, ctx).expect("non-identity"))
                })?
            }
        };
        Ok(GroupElement { curve_id: self.curve_id(), point: Some(point) })
    }

    /// Uniform scalar in `[1, q)` by rejection sampling.
    pub fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        let q = &self.inner.q;
        let bits = q.bits();
        let nbytes = bits.div_ceil(8) as usize;
        let top_mask = if bits % 8 == 0 { 0xff } else { (1u16 << (bits % 8)) as u8 - 1 };
        let mut buf = vec![0u8; nbytes];
        loop {
            rng.fill_bytes(&mut buf);
            buf[0] &= top_mask;
            let v = BigUint::from_bytes_be(&buf);
            if v != BigUint::ZERO && &v < q {
                return Scalar(v);
            }
        }
    }

    /// Exhaustive discrete log, deliberately restricted to the toy curve:
    /// returns `k` with `k * base = e`.
    pub fn toy_discrete_log(
        &self,
        e: &GroupElement,
        base: &GroupElement,
    ) -> Result<Scalar, EccError> {
        const MAX_ORDER: u64 = 1 << 20;
        match &self.inner.backend {
            Backend::Standard(_) => Err(EccError::OracleNeedsToyCurve(self.curve_id())),
            Backend::Toy(c) => {
                assert!(c.q <= MAX_ORDER, "toy order must stay brute-forceable");
                self.check_curve(e);
                self.check_curve(base);
                let target = e.point.as_ref().map(|xy| toy_pt(xy));
                let base_pt = base.point.as_ref().map(|xy| toy_pt(xy));
                let mut acc: Option<(u64, u64)> = None;
                for k in 0..c.q {
                    if acc == target {
                        return Ok(Scalar(BigUint::from(k)));
                    }
                    acc = c.add(acc, base_pt);
                }
                Err(EccError::NoDiscreteLog)
            }
        }
    }

    fn with_ctx<T>(&self, f: impl FnOnce(&mut BigNumContext) -> T) -> T {
        BN_CTX.with(|ctx| f(&mut ctx.borrow_mut()))
    }

    fn check_curve(&self, e: &GroupElement) {
        assert_eq!(
            e.curve_id,
            self.curve_id(),
            "group element used with parameters of a different curve"
        );
    }
}

/// Scalar modulo the group order. Constructors reduce or reject; all
/// arithmetic stays in `[0, q)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scalar(BigUint);

impl Scalar {
    pub fn zero() -> Scalar {
        Scalar(BigUint::ZERO)
    }

    pub fn one() -> Scalar {
        Scalar(BigUint::from(1u8))
    }

    pub fn from_u64(v: u64, params: &GroupParams) -> Scalar {
        Scalar(BigUint::from(v) % params.order())
    }

    /// Interprets big-endian bytes, reducing modulo q.
    pub fn from_bytes_reduced(bytes: &[u8], params: &GroupParams) -> Scalar {
        Scalar(BigUint::from_bytes_be(bytes) % params.order())
    }

    /// Interprets big-endian bytes, rejecting values outside `[0, q)`.
    pub fn from_bytes_checked(bytes: &[u8], params: &GroupParams) -> Result<Scalar, EccError> {
        let v = BigUint::from_bytes_be(bytes);
        if &v >= params.order() {
            return Err(EccError::ScalarRange);
        }
        Ok(Scalar(v))
    }

    pub fn from_hex(hex_str: &str, params: &GroupParams) -> Result<Scalar, EccError> {
        let bytes = hex::decode(hex_str).map_err(|_| EccError::ScalarRange)?;
        Scalar::from_bytes_checked(&bytes, params)
    }

    pub fn is_zero(&self) -> bool {
        self.0 == BigUint::ZERO
    }

    pub fn add(&self, rhs: &Scalar, params: &GroupParams) -> Scalar {
        Scalar((&self.0 + &rhs.0) % params.order())
    }

    pub fn sub(&self, rhs: &Scalar, params: &GroupParams) -> Scalar {
        let q = params.order();
        Scalar(((&self.0 + q) - &rhs.0) % q)
    }

    pub fn mul(&self, rhs: &Scalar, params: &GroupParams) -> Scalar {
        Scalar((&self.0 * &rhs.0) % params.order())
    }

    pub fn negate(&self, params: &GroupParams) -> Scalar {
        if self.is_zero() {
            Scalar::zero()
        } else {
            Scalar(params.order() - &self.0)
        }
    }

    /// Multiplicative inverse mod q; `None` for zero.
    pub fn invert(&self, params: &GroupParams) -> Option<Scalar> {
        self.0.modinv(params.order()).map(Scalar)
    }

    /// Big-endian encoding padded to `width` bytes.
    pub fn to_fixed_bytes(&self, width: usize) -> Result<Vec<u8>, EccError> {
        uint_to_fixed_bytes(&self.0, width).ok_or(EccError::ScalarRange)
    }

    pub fn to_hex(&self) -> String {
        let bytes = self.0.to_bytes_be();
        hex::encode(bytes)
    }

    pub fn as_uint(&self) -> &BigUint {
        &self.0
    }

    pub fn from_uint(v: BigUint, params: &GroupParams) -> Scalar {
        Scalar(v % params.order())
    }
}

/// A point on the configured curve, or the identity. Plain data; all
/// arithmetic goes through [`GroupParams`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    curve_id: CurveId,
    point: Option<(BigUint, BigUint)>,
}

impl GroupElement {
    pub fn curve_id(&self) -> CurveId {
        self.curve_id
    }

    pub fn is_identity(&self) -> bool {
        self.point.is_none()
    }

    /// Affine coordinates; `None` for the identity.
    pub fn coordinates(&self) -> Option<(&BigUint, &BigUint)> {
        self.point.as_ref().map(|(x, y)| (x, y))
    }
}

fn bn_to_uint(bn: &BigNum) -> BigUint {
    BigUint::from_bytes_be(&bn.to_vec())
}

fn uint_to_bn(v: &BigUint) -> BigNum {
    BigNum::from_slice(&v.to_bytes_be()).expect("bignum alloc")
}

fn uint_to_u64(v: &BigUint) -> u64 {
    let digits = v.to_u64_digits();
    match digits.len() {
        0 => 0,
        1 => digits[0],
        _ => panic!("value does not fit in u64"),
    }
}

fn toy_pt(xy: &(BigUint, BigUint)) -> (u64, u64) {
    (uint_to_u64(&xy.0), uint_to_u64(&xy.1))
}

fn toy_to_uint(p: (u64, u64)) -> (BigUint, BigUint) {
    (BigUint::from(p.0), BigUint::from(p.1))
}

fn uint_to_fixed_bytes(v: &BigUint, width: usize) -> Option<Vec<u8>> {
    let raw = v.to_bytes_be();
    if raw.len() > width {
        return None;
    }
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    Some(out)
}

fn affine_to_point(group: &EcGroup, xy: &(BigUint, BigUint), ctx: &mut BigNumContext) -> EcPoint {
    let mut ep = EcPoint::new(group).expect("point alloc");
    ep.set_affine_coordinates_gfp(group, &uint_to_bn(&xy.0), &uint_to_bn(&xy.1), ctx)
        .expect("coordinates of a validated point");
    ep
}

fn affine_to_point_checked(
    group: &EcGroup,
    xy: &(BigUint, BigUint),
    ctx: &mut BigNumContext,
) -> Option<EcPoint> {
    let mut ep = EcPoint::new(group).ok()?;
    ep.set_affine_coordinates_gfp(group, &uint_to_bn(&xy.0), &uint_to_bn(&xy.1), ctx)
        .ok()?;
    Some(ep)
}

fn point_to_affine(
    group: &EcGroup,
    ep: &EcPoint,
    ctx: &mut BigNumContext,
) -> Option<(BigUint, BigUint)> {
    if ep.is_infinity(group) {
        return None;
    }
    let mut x = BigNum::new().expect("bignum alloc");
    let mut y = BigNum::new().expect("bignum alloc");
    ep.affine_coordinates(group, &mut x, &mut y, ctx)
        .expect("affine coordinates");
    Some((bn_to_uint(&x), bn_to_uint(&y)))
}

// Unused only when the crate is compiled without the sec1 helpers below.
/// SEC1-style compressed encoding (0x02/0x03 tag plus x), the canonical
/// single-point form used outside the packed advertising frame.
pub fn sec1_encode(params: &GroupParams, e: &GroupElement) -> Result<Vec<u8>, EccError> {
    let (x, odd) = params.compress(e)?;
    let mut out = Vec::with_capacity(1 + x.len());
    out.push(if odd { 0x03 } else { 0x02 });
    out.extend_from_slice(&x);
    Ok(out)
}

/// Decodes the SEC1-style compressed form produced by [`sec1_encode`].
pub fn sec1_decode(params: &GroupParams, bytes: &[u8]) -> Result<GroupElement, EccError> {
    if bytes.len() != 1 + params.coord_bytes() {
        return Err(EccError::InvalidPoint);
    }
    let odd = match bytes[0] {
        0x02 => false,
        0x03 => true,
        _ => return Err(EccError::InvalidPoint),
    };
    params.decompress(&bytes[1..], odd)
}

/// `sec1_encode` length for a curve.
pub fn sec1_len(curve: CurveId) -> usize {
    1 + curve.coord_bytes()
}
