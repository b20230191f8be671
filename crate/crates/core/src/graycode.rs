//! Binary reflected Gray codes and the quasi-spin labelling of codewords.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest supported code width.
pub const MAX_WIDTH: usize = 30;

/// An ordered list of `2^width` codewords; adjacent entries differ in one bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrayCode {
    width: usize,
    codes: Vec<u32>,
}

impl GrayCode {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Codeword `g_k`.
    pub fn get(&self, k: usize) -> Option<u32> {
        self.codes.get(k).copied()
    }

    /// Codeword `g_k` rendered most-significant bit first.
    pub fn word(&self, k: usize) -> Option<String> {
        self.get(k).map(|c| format_codeword(c, self.width))
    }

    /// True when every adjacent pair (not wrapping around) differs in exactly one bit.
    pub fn is_gray(&self) -> bool {
        self.codes.windows(2).all(|w| (w[0] ^ w[1]).count_ones() == 1)
    }

    /// True when the last and first codewords also differ in exactly one bit.
    pub fn is_cyclic(&self) -> bool {
        match (self.codes.first(), self.codes.last()) {
            (Some(a), Some(b)) => self.codes.len() > 1 && (a ^ b).count_ones() == 1,
            _ => false,
        }
    }
}

/// Renders `code` as `width` binary digits, most significant first.
pub fn format_codeword(code: u32, width: usize) -> String {
    (0..width)
        .rev()
        .map(|bit| if (code >> bit) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn check_width(width: usize) -> Result<()> {
    if width == 0 || width > MAX_WIDTH {
        return Err(domain!("Gray code width must be in 1..={MAX_WIDTH}, got {width}"));
    }
    Ok(())
}

/// Binary reflected Gray code: `G_ν = (0·G_{ν−1}, 1·reverse(G_{ν−1}))`, the new
/// bit being the most significant one.
///
/// For ν = 2 this is `00, 01, 11, 10`; for ν = 3 it is
/// `000, 001, 011, 010, 110, 111, 101, 100`.
pub fn binary_reflected_gray(width: usize) -> Result<GrayCode> {
    check_width(width)?;
    let mut codes: Vec<u32> = alloc::vec![0, 1];
    for level in 1..width {
        let top = 1u32 << level;
        let reflected: Vec<u32> = codes.iter().rev().map(|c| c | top).collect();
        codes.extend(reflected);
    }
    Ok(GrayCode { width, codes })
}

/// Closed form `k ^ (k >> 1)`; same sequence as [`binary_reflected_gray`].
pub fn gray_closed_form(width: usize) -> Result<GrayCode> {
    check_width(width)?;
    let codes = (0..1u32 << width).map(|k| k ^ (k >> 1)).collect();
    Ok(GrayCode { width, codes })
}

/// The alternative recursion where the second half keeps the order of
/// `G_{ν−1}` but reverses the bits inside each entry, and the appended bit
/// is the least significant one.
///
/// This reading does not produce a Gray code: already at ν = 2 it yields
/// `00, 10, 01, 11`. It exists so tests can document the discrepancy.
pub fn bit_reversed_recursion(width: usize) -> Result<GrayCode> {
    check_width(width)?;
    let mut codes: Vec<u32> = alloc::vec![0, 1];
    for level in 1..width {
        let reverse_bits = |c: u32| c.reverse_bits() >> (32 - level);
        let mut next: Vec<u32> = codes.iter().map(|c| c << 1).collect();
        next.extend(codes.iter().map(|&c| (reverse_bits(c) << 1) | 1));
        codes = next;
    }
    Ok(GrayCode { width, codes })
}

/// Qubits needed for `N` particles: `⌈log₂(⌊N/2⌋ + 1)⌉`.
pub fn qubit_count(particles: usize) -> Result<usize> {
    if particles < 2 {
        return Err(domain!("particle count must be at least 2, got {particles}"));
    }
    let states = particles / 2 + 1;
    Ok((usize::BITS - (states - 1).leading_zeros()) as usize)
}

/// A half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_twice(twice: i32) -> Self {
        Self(twice)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Quasi-spin state `|J, M⟩` bound to the Gray codeword `g_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiSpinLabel {
    pub j: HalfInt,
    pub m: HalfInt,
    pub gray_index: usize,
    pub codeword: u32,
}

/// Labels for the `⌊N/2⌋ + 1` states `M = −J + 2k` of the maximal-`J` sector.
pub fn jm_labels(particles: usize) -> Result<Vec<QuasiSpinLabel>> {
    let width = qubit_count(particles)?;
    let code = binary_reflected_gray(width)?;
    let twice_j = particles as i32;
    Ok((0..particles / 2 + 1)
        .map(|k| QuasiSpinLabel {
            j: HalfInt::from_twice(twice_j),
            m: HalfInt::from_twice(-twice_j + 4 * k as i32),
            gray_index: k,
            codeword: code.codes[k],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn words(code: &GrayCode) -> Vec<String> {
        (0..code.len()).map(|k| code.word(k).unwrap()).collect()
    }

    #[test]
    fn small_orderings() {
        assert_eq!(words(&binary_reflected_gray(1).unwrap()), vec!["0", "1"]);
        assert_eq!(words(&binary_reflected_gray(2).unwrap()), vec!["00", "01", "11", "10"]);
        assert_eq!(
            words(&binary_reflected_gray(3).unwrap()),
            vec!["000", "001", "011", "010", "110", "111", "101", "100"]
        );
    }

    #[test]
    fn zero_width_is_rejected() {
        assert!(binary_reflected_gray(0).is_err());
        assert!(bit_reversed_recursion(0).is_err());
    }

    #[test]
    fn adjacency_and_permutation_up_to_width_ten() {
        for width in 1..=10 {
            let code = binary_reflected_gray(width).unwrap();
            assert!(code.is_gray(), "width {width}");
            assert!(code.is_cyclic(), "width {width}");
            let mut sorted = code.codes().to_vec();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..1u32 << width).collect::<Vec<_>>());
            assert_eq!(code, gray_closed_form(width).unwrap());
        }
    }

    #[test]
    fn bit_reversed_recursion_is_not_a_gray_code() {
        // ν = 1 coincides trivially; from ν = 2 on the reading breaks adjacency
        assert_eq!(bit_reversed_recursion(1).unwrap(), binary_reflected_gray(1).unwrap());
        assert_eq!(words(&bit_reversed_recursion(2).unwrap()), vec!["00", "10", "01", "11"]);
        for width in 2..=10 {
            let literal = bit_reversed_recursion(width).unwrap();
            assert!(!literal.is_gray(), "width {width}");
            assert_ne!(literal, binary_reflected_gray(width).unwrap());
        }
    }

    #[test]
    fn qubit_counts() {
        assert_eq!(qubit_count(2).unwrap(), 1);
        assert_eq!(qubit_count(3).unwrap(), 1);
        assert_eq!(qubit_count(4).unwrap(), 2);
        assert_eq!(qubit_count(7).unwrap(), 2);
        assert_eq!(qubit_count(8).unwrap(), 3);
        assert_eq!(qubit_count(15).unwrap(), 3);
        assert_eq!(qubit_count(16).unwrap(), 4);
        assert!(qubit_count(1).is_err());
    }

    #[test]
    fn labels_for_five_particles() {
        let labels = jm_labels(5).unwrap();
        let got: Vec<(i32, i32, usize)> = labels.iter().map(|l| (l.j.twice(), l.m.twice(), l.gray_index)).collect();
        assert_eq!(got, vec![(5, -5, 0), (5, -1, 1), (5, 3, 2)]);
        assert_eq!(labels[1].m.to_string(), "-1/2");
    }

    #[test]
    fn labels_for_even_particle_numbers() {
        let m2: Vec<i32> = jm_labels(2).unwrap().iter().map(|l| l.m.twice() / 2).collect();
        assert_eq!(m2, vec![-1, 1]);
        let m4: Vec<i32> = jm_labels(4).unwrap().iter().map(|l| l.m.twice() / 2).collect();
        assert_eq!(m4, vec![-2, 0, 2]);
        assert_eq!(jm_labels(4).unwrap()[2].codeword, 0b11);
    }

    #[test]
    fn label_consistency() {
        for n in 2..=31usize {
            let labels = jm_labels(n).unwrap();
            assert_eq!(labels.len(), n / 2 + 1);
            for l in &labels {
                assert!(l.m.twice().abs() <= l.j.twice());
                // M ≡ −J (mod 2) ⇔ 2M + 2J divisible by 4
                assert_eq!((l.m.twice() + l.j.twice()).rem_euclid(4), 0);
            }
        }
    }
}
