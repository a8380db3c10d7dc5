use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Bit permutation: `interleave(x)[i] = x[perm[i]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
        }
        Ok(Self { perm })
    }

    pub fn identity(len: usize) -> Self {
        Self {
            perm: (0..len).collect(),
        }
    }

    /// Uniformly random permutation.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(rng);
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Copy>(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x.len())?;
        Ok(self.perm.iter().map(|&p| x[p]).collect())
    }

    pub fn deinterleave<T: Copy + Default>(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x.len())?;
        let mut out = vec![T::default(); x.len()];
        for (v, &p) in x.iter().zip(&self.perm) {
            out[p] = *v;
        }
        Ok(out)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.perm.len() {
            return Err(Error::LengthMismatch {
                expected: self.perm.len(),
                actual: len,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    #[test]
    fn identity_and_determinism() {
        let x = [3, 1, 4, 1, 5];
        assert_eq!(Interleaver::identity(5).interleave(&x).unwrap(), x.to_vec());
        let a = Interleaver::random(64, &mut stream_rng(1, 0));
        let b = Interleaver::random(64, &mut stream_rng(1, 0));
        assert_eq!(a, b);
        assert!(a.interleave(&[0u8; 63]).is_err());
        assert!(Interleaver::new(vec![0, 0, 1]).is_err());
        assert!(Interleaver::new(vec![0, 3, 1]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(seed in any::<u64>(), len in 1usize..300) {
            let il = Interleaver::random(len, &mut stream_rng(seed, 0));
            let x: Vec<u32> = (0..len as u32).collect();
            prop_assert_eq!(il.deinterleave(&il.interleave(&x).unwrap()).unwrap(), x);
        }
    }
}
