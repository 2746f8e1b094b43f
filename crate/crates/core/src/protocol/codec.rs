//! Bit-exact wire formats.
//!
//! Advertising frame (all integers big-endian):
//!
//! ```text
//! [flags 1B] [lat_e4 i32] [lon_e4 i32] [T u32] [U.x] [V.x] [sig.r] [sig.s]
//! ```
//!
//! with each of the last four fields `coord_bytes` wide, for a total of
//! `4 * coord_bytes + 13` octets — at most 141 (secp256k1), well inside
//! the 251-octet advertising payload limit. The flags byte carries the
//! version in its high nibble, the y-parities of `U` and `V` in bits 0-1
//! (point compression keeps the x-coordinates bare), and in bit 2 the
//! signature-normalization marker: `s` is written low (`min(s, q-s)`) so
//! it always fits `coord_bytes` even on secp160r1, whose order is one bit
//! wider than its field; bit 2 records the flip so decoding restores the
//! original scalar exactly. Bit 3 is reserved and must be zero.
//!
//! Everywhere else (signature messages, report entries, CLI output) a
//! point is encoded in the tagged compressed form `[02|03] || x` and a
//! beacon entry is the 2*(coord_bytes+1)-byte concatenation `U || V`.
//!
//! [`paper_payload_accounting`] reproduces the published per-level payload
//! table (68/84/100/132 bytes), which counts two bare coordinates, two
//! signature scalars and the timestamp but neither location nor flags;
//! the real frame above carries 9 more bytes and exists alongside it.

use thiserror::Error;

use super::{Beacon, EcdsaSignature, Location, SignedBeacon};
use crate::ecc::{sec1_decode, sec1_encode, CurveId, EccError, GroupParams, Scalar};

/// BLE v4.2 link-layer payload budget (octets).
pub const BLE_MAX_PAYLOAD_OCTETS: usize = 251;

const FLAGS_VERSION: u8 = 1;
const FLAG_U_ODD: u8 = 0b0001;
const FLAG_V_ODD: u8 = 0b0010;
const FLAG_S_FLIPPED: u8 = 0b0100;
const FLAG_RESERVED: u8 = 0b1000;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("frame length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("unsupported frame version {0}")]
    UnsupportedVersion(u8),
    #[error("reserved flag bit set")]
    ReservedFlagBit,
    #[error("invalid point encoding: {0}")]
    Point(#[from] EccError),
    #[error("signature scalar out of range")]
    SignatureScalar,
    #[error("no payload accounting for security level {0}")]
    UnknownSecurityLevel(u32),
}

/// Advertising frame length for a curve: `4 * coord_bytes + 13`.
pub fn signed_beacon_len(curve: CurveId) -> usize {
    4 * curve.coord_bytes() + 13
}

/// Beacon entry length (`U || V` in tagged compressed form).
pub fn beacon_entry_len(curve: CurveId) -> usize {
    2 * (curve.coord_bytes() + 1)
}

/// Published per-level advertising payload size in bytes: four
/// coordinate-width fields plus a 4-byte timestamp (no location, no
/// flags). Yields exactly 68 / 84 / 100 / 132 for the 64/80/96/128-bit
/// levels.
pub fn paper_payload_accounting(security_bits: u32) -> Result<usize, CodecError> {
    let curve = CurveId::from_security_bits(security_bits)
        .ok_or(CodecError::UnknownSecurityLevel(security_bits))?;
    Ok(4 * curve.coord_bytes() + 4)
}

/// Canonical signing message: `L || T || U || V` with points in tagged
/// compressed form, so parity flips invalidate the signature too.
pub fn canonical_message(
    params: &GroupParams,
    location: Location,
    timestamp: u32,
    beacon: &Beacon,
) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 2 * (params.coord_bytes() + 1));
    out.extend_from_slice(&location.lat_e4.to_be_bytes());
    out.extend_from_slice(&location.lon_e4.to_be_bytes());
    out.extend_from_slice(&timestamp.to_be_bytes());
    out.extend_from_slice(&sec1_encode(params, beacon.u()).expect("beacon point"));
    out.extend_from_slice(&sec1_encode(params, beacon.v()).expect("beacon point"));
    out
}

pub fn encode_signed_beacon(
    params: &GroupParams,
    sb: &SignedBeacon,
) -> Result<Vec<u8>, CodecError> {
    let cb = params.coord_bytes();
    let (ux, u_odd) = params.compress(sb.beacon.u())?;
    let (vx, v_odd) = params.compress(sb.beacon.v())?;

    let q = params.order();
    let s = sb.signature.s.as_uint();
    let flipped = s * 2u8 > *q;
    let s_wire = if flipped { Scalar::from_uint(q - s, params) } else { sb.signature.s.clone() };

    let mut flags = FLAGS_VERSION << 4;
    if u_odd {
        flags |= FLAG_U_ODD;
    }
    if v_odd {
        flags |= FLAG_V_ODD;
    }
    if flipped {
        flags |= FLAG_S_FLIPPED;
    }

    let mut out = Vec::with_capacity(signed_beacon_len(params.curve_id()));
    out.push(flags);
    out.extend_from_slice(&sb.location.lat_e4.to_be_bytes());
    out.extend_from_slice(&sb.location.lon_e4.to_be_bytes());
    out.extend_from_slice(&sb.timestamp.to_be_bytes());
    out.extend_from_slice(&ux);
    out.extend_from_slice(&vx);
    out.extend_from_slice(
        &sb.signature.r.to_fixed_bytes(cb).map_err(|_| CodecError::SignatureScalar)?,
    );
    out.extend_from_slice(&s_wire.to_fixed_bytes(cb).map_err(|_| CodecError::SignatureScalar)?);
    debug_assert_eq!(out.len(), signed_beacon_len(params.curve_id()));
    Ok(out)
}

pub fn decode_signed_beacon(
    params: &GroupParams,
    bytes: &[u8],
) -> Result<SignedBeacon, CodecError> {
    let expected = signed_beacon_len(params.curve_id());
    if bytes.len() != expected {
        return Err(CodecError::Length { expected, got: bytes.len() });
    }
    let flags = bytes[0];
    if flags >> 4 != FLAGS_VERSION {
        return Err(CodecError::UnsupportedVersion(flags >> 4));
    }
    if flags & FLAG_RESERVED != 0 {
        return Err(CodecError::ReservedFlagBit);
    }
    let lat_e4 = i32::from_be_bytes(bytes[1..5].try_into().unwrap());
    let lon_e4 = i32::from_be_bytes(bytes[5..9].try_into().unwrap());
    let timestamp = u32::from_be_bytes(bytes[9..13].try_into().unwrap());

    let cb = params.coord_bytes();
    let mut off = 13;
    let u = params.decompress(&bytes[off..off + cb], flags & FLAG_U_ODD != 0)?;
    off += cb;
    let v = params.decompress(&bytes[off..off + cb], flags & FLAG_V_ODD != 0)?;
    off += cb;
    let sig_r = Scalar::from_bytes_checked(&bytes[off..off + cb], params)
        .map_err(|_| CodecError::SignatureScalar)?;
    off += cb;
    let s_wire = Scalar::from_bytes_checked(&bytes[off..off + cb], params)
        .map_err(|_| CodecError::SignatureScalar)?;
    if sig_r.is_zero() || s_wire.is_zero() {
        return Err(CodecError::SignatureScalar);
    }
    let sig_s = if flags & FLAG_S_FLIPPED != 0 { s_wire.negate(params) } else { s_wire };

    let beacon = Beacon::from_parts(u, v).expect("decompressed points are non-identity");
    Ok(SignedBeacon {
        location: Location { lat_e4, lon_e4 },
        timestamp,
        beacon,
        signature: EcdsaSignature { r: sig_r, s: sig_s },
    })
}

/// `U || V` in tagged compressed form; the unit entry of published
/// reports and the CLI's beacon representation.
pub fn encode_beacon_entry(params: &GroupParams, beacon: &Beacon) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::with_capacity(beacon_entry_len(params.curve_id()));
    out.extend_from_slice(&sec1_encode(params, beacon.u())?);
    out.extend_from_slice(&sec1_encode(params, beacon.v())?);
    Ok(out)
}

pub fn decode_beacon_entry(params: &GroupParams, bytes: &[u8]) -> Result<Beacon, CodecError> {
    let expected = beacon_entry_len(params.curve_id());
    if bytes.len() != expected {
        return Err(CodecError::Length { expected, got: bytes.len() });
    }
    let half = expected / 2;
    let u = sec1_decode(params, &bytes[..half])?;
    let v = sec1_decode(params, &bytes[half..])?;
    Ok(Beacon::from_parts(u, v).expect("tagged encodings are never the identity"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{gen_beacon, gen_key, sign_beacon, NonceSource};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn sample_signed(params: &GroupParams, seed: u64) -> SignedBeacon {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let kp = gen_key(params, &mut rng);
        let (beacon, r) = gen_beacon(params, kp.public_key(), &mut rng);
        sign_beacon(
            params,
            &beacon,
            &r,
            kp.private_key(),
            Location::from_degrees(12.3456, -65.4321),
            1_700_000_000,
            NonceSource::Deterministic,
        )
        .unwrap()
    }

    #[test]
    fn frame_sizes_fit_ble_payload() {
        let expected = [(CurveId::Secp128r1, 77), (CurveId::Secp160r1, 93), (CurveId::Secp192k1, 109), (CurveId::Secp256k1, 141)];
        for (curve, len) in expected {
            assert_eq!(signed_beacon_len(curve), len);
            assert!(len <= BLE_MAX_PAYLOAD_OCTETS);
        }
    }

    #[test]
    fn paper_accounting_table() {
        assert_eq!(paper_payload_accounting(64).unwrap(), 68);
        assert_eq!(paper_payload_accounting(80).unwrap(), 84);
        assert_eq!(paper_payload_accounting(96).unwrap(), 100);
        assert_eq!(paper_payload_accounting(128).unwrap(), 132);
        assert!(paper_payload_accounting(42).is_err());
    }

    #[test]
    fn signed_beacon_round_trip_every_curve() {
        for curve in CurveId::ALL {
            let params = GroupParams::new(curve).unwrap();
            for seed in 0..8 {
                let sb = sample_signed(&params, seed);
                let bytes = encode_signed_beacon(&params, &sb).unwrap();
                assert_eq!(bytes.len(), signed_beacon_len(curve));
                let back = decode_signed_beacon(&params, &bytes).unwrap();
                assert_eq!(back, sb);
            }
        }
    }

    #[test]
    fn truncated_and_oversized_frames_rejected() {
        let params = GroupParams::new(CurveId::Toy).unwrap();
        let sb = sample_signed(&params, 1);
        let bytes = encode_signed_beacon(&params, &sb).unwrap();
        assert!(matches!(
            decode_signed_beacon(&params, &bytes[..bytes.len() - 1]),
            Err(CodecError::Length { .. })
        ));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(decode_signed_beacon(&params, &longer).is_err());
    }

    #[test]
    fn bad_flags_rejected() {
        let params = GroupParams::new(CurveId::Toy).unwrap();
        let sb = sample_signed(&params, 2);
        let mut bytes = encode_signed_beacon(&params, &sb).unwrap();
        let orig = bytes[0];
        bytes[0] = (2 << 4) | (orig & 0x0f); // wrong version
        assert!(matches!(decode_signed_beacon(&params, &bytes), Err(CodecError::UnsupportedVersion(2))));
        bytes[0] = orig | 0b1000; // reserved bit
        assert!(matches!(decode_signed_beacon(&params, &bytes), Err(CodecError::ReservedFlagBit)));
    }

    #[test]
    fn off_curve_point_rejected() {
        let params = GroupParams::new(CurveId::Toy).unwrap();
        let sb = sample_signed(&params, 3);
        let mut bytes = encode_signed_beacon(&params, &sb).unwrap();
        bytes[13] = 1; // x = 1 has no point on the toy curve
        assert!(matches!(decode_signed_beacon(&params, &bytes), Err(CodecError::Point(_))));
    }

    #[test]
    fn beacon_entry_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for curve in CurveId::ALL {
            let params = GroupParams::new(curve).unwrap();
            let kp = gen_key(&params, &mut rng);
            let (beacon, _) = gen_beacon(&params, kp.public_key(), &mut rng);
            let bytes = encode_beacon_entry(&params, &beacon).unwrap();
            assert_eq!(bytes.len(), beacon_entry_len(curve));
            assert_eq!(decode_beacon_entry(&params, &bytes).unwrap(), beacon);
            assert!(decode_beacon_entry(&params, &bytes[1..]).is_err());
        }
    }
}
