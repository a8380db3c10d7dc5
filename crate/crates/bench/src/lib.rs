//! Shared fixtures for the benchmarks.

use afdm_core::channel::{complex_gaussian, effective_channel, sample_channel};
use afdm_core::fec::map_symbols;
use afdm_core::rng::stream_rng;
use afdm_core::{AfdmConfig, DaftFrame, EffectiveChannel, ModulationAlphabet};
use rand::Rng;

/// A received frame `y = H_eff x + w` with its effective channel.
pub struct Fixture {
    pub cfg: AfdmConfig,
    pub eff: EffectiveChannel,
    pub x: DaftFrame,
    pub y: DaftFrame,
}

pub fn fixture(n: usize, paths: usize, alph: &ModulationAlphabet, n0: f64, seed: u64) -> Fixture {
    let mut rng = stream_rng(seed, 0);
    let cfg = AfdmConfig::full_diversity(n, 3, 0).expect("valid frame");
    let chan = sample_channel(paths, 3, 3, &mut rng).expect("valid channel");
    let eff = effective_channel(&chan, &cfg).expect("integer channel");
    let bits: Vec<u8> = (0..n * alph.bits_per_symbol()).map(|_| rng.random_range(0..2)).collect();
    let x = map_symbols(&bits, alph).expect("whole symbols");
    let mut y = eff.apply(x.as_slice());
    for v in y.iter_mut() {
        *v += complex_gaussian(&mut rng, n0);
    }
    Fixture {
        cfg,
        eff,
        x,
        y: DaftFrame::new(y).expect("finite"),
    }
}
