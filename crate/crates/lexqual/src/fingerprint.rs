//! Stable 64-bit FNV-1a fingerprints for config and corpus identity.
//!
//! These identify inputs across runs for comparison guards; they are not
//! cryptographic.

pub(crate) struct Fnv1a(u64);

impl Fnv1a {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;

    pub fn new() -> Self {
        Self(Self::OFFSET)
    }

    pub fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
    }

    /// Hashes a string with a separator byte so that field boundaries matter.
    pub fn update_str(&mut self, s: &str) {
        self.update(s.as_bytes());
        self.update(&[0xff]);
    }

    pub fn update_u64(&mut self, x: u64) {
        self.update(&x.to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }

    pub fn finish_hex(&self) -> String {
        format!("{:016x}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundaries_matter() {
        let mut a = Fnv1a::new();
        a.update_str("ab");
        a.update_str("c");
        let mut b = Fnv1a::new();
        b.update_str("a");
        b.update_str("bc");
        assert_ne!(a.finish_hex(), b.finish_hex());
    }

    #[test]
    fn stable_value() {
        let mut h = Fnv1a::new();
        h.update(b"lexqual");
        // frozen so fingerprints stay comparable across builds
        assert_eq!(h.finish_hex(), "65ec8c447d229edd");
    }
}
