//! Contact-tracing beacons built on re-randomizable elliptic-curve pairs.
//!
//! A broadcast identity is the pair `(rG, rP)` for a fresh random `r`:
//! only the holder of the private key `x` behind `P = xG` can recognize it
//! (`x * rG == rP`), and anyone can re-randomize it into an unlinkable
//! copy without learning anything. The crate layers, bottom up:
//!
//! - [`ecc`] — the prime-order group abstraction (standard curves plus a
//!   brute-forceable toy curve for oracles);
//! - [`protocol`] — key/beacon algorithms, the signed-beacon extension,
//!   the advertising wire codec and the offline precomputation pool;
//! - [`device`] — the per-user state machine: rotation, reception
//!   filtering, contact retention, report preparation, exposure checks;
//! - [`authority`] — the publication service storing and serving
//!   metadata-free reports;
//! - [`sim`] — a deterministic discrete-event harness with eavesdropper,
//!   replayer and relayer actors, plus the beacon-indistinguishability
//!   experiment.

pub mod ecc;
pub mod protocol;
