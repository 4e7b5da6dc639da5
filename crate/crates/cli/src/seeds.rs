//! Per-item seeds for randomized censuses.
//!
//! Item `i` of a campaign with global seed `g` uses the splitmix64 output
//! for state `g + (i + 1)·φ`, `φ = 0x9E37_79B9_7F4A_7C15`, so items are
//! independent of execution order.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn item_seed(global: u64, index: usize) -> u64 {
    mix(global.wrapping_add(GOLDEN.wrapping_mul(index as u64 + 1)))
}
