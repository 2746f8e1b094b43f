//! ECDSA over the group abstraction, with deterministic nonces.
//!
//! Nonces are derived per RFC 6979 (HMAC-SHA-256 DRBG keyed on the private
//! key and message digest) so that seeded runs reproduce signatures
//! bit-for-bit and nonce reuse is structurally impossible. A precomputed
//! `(k, kG)` pair can be supplied instead, which removes the only
//! point-scalar multiplication from the signing path.

use hmac::{Hmac, Mac};
use num_bigint::BigUint;
use rand::RngCore;
use sha2::Sha256;
use thiserror::Error;

use crate::ecc::{GroupElement, GroupParams, Scalar};

type HmacSha256 = Hmac<Sha256>;

#[derive(Debug, Error)]
pub enum SignError {
    #[error("ephemeral private key is zero mod q")]
    ZeroKey,
    #[error("precomputed nonce collapsed the signature to zero")]
    UnusableNonce,
}

/// An ECDSA signature: two scalars in `[1, q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcdsaSignature {
    pub r: Scalar,
    pub s: Scalar,
}

/// Where the signing nonce comes from.
pub enum NonceSource<'a> {
    /// RFC 6979-style derivation from the key and digest.
    Deterministic,
    /// Fresh random nonce.
    Random(&'a mut dyn RngCore),
    /// Precomputed `(k, kG)`; signing then needs no point multiplication.
    Precomputed { k: &'a Scalar, k_point: &'a GroupElement },
}

/// Signs a 32-byte digest under private key `d`.
pub fn sign_prehashed(
    params: &GroupParams,
    d: &Scalar,
    digest: &[u8; 32],
    nonce: NonceSource<'_>,
) -> Result<EcdsaSignature, SignError> {
    if d.is_zero() {
        return Err(SignError::ZeroKey);
    }
    let z = digest_to_scalar(params, digest);
    match nonce {
        NonceSource::Precomputed { k, k_point } => {
            finish(params, d, &z, k, k_point).ok_or(SignError::UnusableNonce)
        }
        NonceSource::Random(rng) => loop {
            let k = params.random_nonzero_scalar(rng);
            let k_point = params.mul_generator(&k);
            if let Some(sig) = finish(params, d, &z, &k, &k_point) {
                return Ok(sig);
            }
        },
        NonceSource::Deterministic => {
            let mut gen = Rfc6979::new(params, d, digest);
            loop {
                let k = gen.next_candidate();
                if k.is_zero() {
                    continue;
                }
                let k_point = params.mul_generator(&k);
                if let Some(sig) = finish(params, d, &z, &k, &k_point) {
                    return Ok(sig);
                }
            }
        }
    }
}

/// Verifies a signature over a 32-byte digest under `public`.
///
/// Returns `false` (never panics) for out-of-range signature scalars or a
/// public key off the curve.
pub fn verify_prehashed(
    params: &GroupParams,
    public: &GroupElement,
    digest: &[u8; 32],
    sig: &EcdsaSignature,
) -> bool {
    if public.is_identity() || !params.is_valid(public) {
        return false;
    }
    if sig.r.is_zero() || sig.s.is_zero() {
        return false;
    }
    if sig.r.as_uint() >= params.order() || sig.s.as_uint() >= params.order() {
        return false;
    }
    let z = digest_to_scalar(params, digest);
    let w = match sig.s.invert(params) {
        Some(w) => w,
        None => return false,
    };
    let u1 = z.mul(&w, params);
    let u2 = sig.r.mul(&w, params);
    let point = params.mul_sum(&u1, &u2, public);
    match point.coordinates() {
        None => false,
        Some((x, _)) => &(x % params.order()) == sig.r.as_uint(),
    }
}

fn finish(
    params: &GroupParams,
    d: &Scalar,
    z: &Scalar,
    k: &Scalar,
    k_point: &GroupElement,
) -> Option<EcdsaSignature> {
    let (x, _) = k_point.coordinates()?;
    let r = Scalar::from_uint(x.clone(), params);
    if r.is_zero() {
        return None;
    }
    let k_inv = k.invert(params)?;
    let s = k_inv.mul(&z.add(&r.mul(d, params), params), params);
    if s.is_zero() {
        return None;
    }
    Some(EcdsaSignature { r, s })
}

/// Leftmost-qlen-bits interpretation of the digest, reduced mod q.
fn digest_to_scalar(params: &GroupParams, digest: &[u8; 32]) -> Scalar {
    Scalar::from_uint(bits2int(digest, params.order().bits()), params)
}

fn bits2int(bytes: &[u8], qlen: u64) -> BigUint {
    let v = BigUint::from_bytes_be(bytes);
    let blen = 8 * bytes.len() as u64;
    if blen > qlen {
        v >> (blen - qlen)
    } else {
        v
    }
}

/// RFC 6979 §3.2 HMAC-DRBG candidate stream.
struct Rfc6979<'a> {
    params: &'a GroupParams,
    k: [u8; 32],
    v: [u8; 32],
    rolen: usize,
    primed: bool,
}

impl<'a> Rfc6979<'a> {
    fn new(params: &'a GroupParams, d: &Scalar, digest: &[u8; 32]) -> Self {
        let qlen = params.order().bits();
        let rolen = qlen.div_ceil(8) as usize;
        let x_octets = d.to_fixed_bytes(rolen).expect("private key fits rolen");
        let h_octets = int2octets(&(bits2int(digest, qlen) % params.order()), rolen);

        let mut k = [0u8; 32];
        let mut v = [1u8; 32];
        for sep in [0u8, 1u8] {
            let mut mac = HmacSha256::new_from_slice(&k).expect("hmac key");
            mac.update(&v);
            mac.update(&[sep]);
            mac.update(&x_octets);
            mac.update(&h_octets);
            k = mac.finalize().into_bytes().into();
            v = hmac_one(&k, &v);
        }
        Rfc6979 { params, k, v, rolen, primed: true }
    }

    fn next_candidate(&mut self) -> Scalar {
        if !self.primed {
            // retry step: K = HMAC_K(V || 0x00), V = HMAC_K(V)
            let mut mac = HmacSha256::new_from_slice(&self.k).expect("hmac key");
            mac.update(&self.v);
            mac.update(&[0u8]);
            self.k = mac.finalize().into_bytes().into();
            self.v = hmac_one(&self.k, &self.v);
        }
        self.primed = false;
        let mut t = Vec::with_capacity(self.rolen);
        while t.len() < self.rolen {
            self.v = hmac_one(&self.k, &self.v);
            t.extend_from_slice(&self.v);
        }
        let qlen = self.params.order().bits();
        let candidate = bits2int(&t[..self.rolen], qlen);
        if &candidate < self.params.order() {
            Scalar::from_uint(candidate, self.params)
        } else {
            Scalar::zero()
        }
    }
}

fn hmac_one(key: &[u8; 32], data: &[u8]) -> [u8; 32] {
    let mut mac = HmacSha256::new_from_slice(key).expect("hmac key");
    mac.update(data);
    mac.finalize().into_bytes().into()
}

fn int2octets(v: &BigUint, rolen: usize) -> Vec<u8> {
    let raw = v.to_bytes_be();
    let mut out = vec![0u8; rolen.saturating_sub(raw.len())];
    out.extend_from_slice(&raw);
    out
}
