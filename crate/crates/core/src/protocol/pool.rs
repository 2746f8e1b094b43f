//! Offline precomputation pool.
//!
//! All three point-scalar multiplications in the broadcast path are
//! input-independent: the beacon pair `(rG, rP)` and the signature nonce
//! point `kG`. Filling a pool of such triples offline reduces the online
//! path to one hash, two modular multiplications and a modular inversion.
//!
//! Draws are atomic; a triple is handed out at most once.

use std::collections::VecDeque;
use std::sync::Mutex;

use rand::RngCore;
use thiserror::Error;

use super::{ecdsa, Beacon, KeyPair, Location, NonceSource, SignError, SignedBeacon};
use crate::ecc::{GroupElement, GroupParams, Scalar};

#[derive(Debug, Error)]
#[error("precompute pool exhausted")]
pub struct PoolExhausted;

/// Single-use bundle: beacon material `(r, rG, rP)` plus signature nonce
/// material `(k, kG)` for one broadcast.
#[derive(Debug, Clone)]
pub struct PrecomputedTriple {
    r: Scalar,
    u: GroupElement,
    v: GroupElement,
    k: Scalar,
    k_point: GroupElement,
}

/// Single-producer / multi-consumer queue of triples.
#[derive(Debug, Default)]
pub struct TriplePool {
    queue: Mutex<VecDeque<PrecomputedTriple>>,
}

impl TriplePool {
    pub fn new() -> TriplePool {
        TriplePool::default()
    }

    /// Produces `count` fresh triples (three point multiplications each);
    /// the offline half of the split.
    pub fn fill<R: RngCore + ?Sized>(
        &self,
        params: &GroupParams,
        keypair: &KeyPair,
        count: usize,
        rng: &mut R,
    ) {
        let mut produced = Vec::with_capacity(count);
        for _ in 0..count {
            let r = params.random_nonzero_scalar(rng);
            let k = params.random_nonzero_scalar(rng);
            produced.push(PrecomputedTriple {
                u: params.mul_generator(&r),
                v: params.scalar_mul(&r, keypair.public_key()),
                k_point: params.mul_generator(&k),
                r,
                k,
            });
        }
        self.queue.lock().unwrap().extend(produced);
    }

    /// Takes one triple; each is handed out at most once.
    pub fn draw(&self) -> Result<PrecomputedTriple, PoolExhausted> {
        self.queue.lock().unwrap().pop_front().ok_or(PoolExhausted)
    }

    pub fn len(&self) -> usize {
        self.queue.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The online path: turns a precomputed triple into a broadcast-ready
/// signed beacon without a single point multiplication. Returns the
/// blinding scalar so the caller can re-sign the same beacon later in the
/// window.
pub fn signed_beacon_from_triple(
    params: &GroupParams,
    keypair: &KeyPair,
    triple: PrecomputedTriple,
    location: Location,
    timestamp: u32,
) -> Result<(Beacon, Scalar, SignedBeacon), SignError> {
    let PrecomputedTriple { r, u, v, k, k_point } = triple;
    let beacon = Beacon { u, v };
    let d = r.mul(keypair.private_key(), params);
    let digest = super::beacon_digest(params, location, timestamp, &beacon);
    let signature = ecdsa::sign_prehashed(
        params,
        &d,
        &digest,
        NonceSource::Precomputed { k: &k, k_point: &k_point },
    )?;
    let signed = SignedBeacon { location, timestamp, beacon: beacon.clone(), signature };
    Ok((beacon, r, signed))
}
