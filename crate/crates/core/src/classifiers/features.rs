//! Hashed n-gram features over a change body, each emitted twice: once on its
//! own and once conjoined with the change prefix.

use serde::{Deserialize, Serialize};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Clone, Copy)]
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(FNV_OFFSET)
    }

    fn write(mut self, bytes: &[u8]) -> Self {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
        self
    }
}

/// Which n-gram orders to extract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NGramOrders {
    /// Orders over whitespace tokens.
    pub word: Vec<usize>,
    /// Orders over characters.
    pub char: Vec<usize>,
}

impl Default for NGramOrders {
    fn default() -> Self {
        Self {
            word: vec![1, 2],
            char: vec![3],
        }
    }
}

/// Sparse feature vector sorted by index with no duplicate indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pub entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i as usize] * v).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Feature extractor for a hash space of `space` buckets (a power of two).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureHasher {
    space: usize,
    orders: NGramOrders,
}

impl FeatureHasher {
    pub fn new(space: usize, orders: NGramOrders) -> Self {
        assert!(space.is_power_of_two(), "feature space must be a power of two");
        Self { space, orders }
    }

    pub fn space(&self) -> usize {
        self.space
    }

    fn grams(&self, body: &str, mut emit: impl FnMut(u8, &[u8])) {
        let lower = body.to_lowercase();
        let tokens: Vec<&str> = lower.split_whitespace().collect();
        let mut buf = Vec::new();
        for &n in &self.orders.word {
            if n == 0 || tokens.len() < n {
                continue;
            }
            for window in tokens.windows(n) {
                buf.clear();
                for (k, t) in window.iter().enumerate() {
                    if k > 0 {
                        buf.push(b' ');
                    }
                    buf.extend_from_slice(t.as_bytes());
                }
                emit(b'w' + n as u8, &buf);
            }
        }
        if tokens.is_empty() {
            return;
        }
        let padded: Vec<char> = std::iter::once(' ')
            .chain(tokens.join(" ").chars())
            .chain(std::iter::once(' '))
            .collect();
        for &n in &self.orders.char {
            if n == 0 || padded.len() < n {
                continue;
            }
            for window in padded.windows(n) {
                buf.clear();
                let s: String = window.iter().collect();
                buf.extend_from_slice(s.as_bytes());
                emit(b'c' + n as u8, &buf);
            }
        }
    }

    /// L2-normalized counts of body n-grams, plain and prefix-conjoined. An
    /// empty body yields no features at all.
    pub fn featurize(&self, prefix: &str, body: &str) -> SparseVector {
        let mask = (self.space - 1) as u64;
        let conj = Fnv::new().write(prefix.as_bytes()).write(&[0x1f]);
        let mut raw: Vec<(u32, f64)> = Vec::new();
        self.grams(body, |ns, gram| {
            let plain = Fnv::new().write(&[ns]).write(gram).0 & mask;
            let joined = conj.write(&[ns]).write(gram).0 & mask;
            raw.push((plain as u32, 1.0));
            raw.push((joined as u32, 1.0));
        });
        raw.sort_unstable_by_key(|e| e.0);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(raw.len());
        for (i, v) in raw {
            match entries.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => entries.push((i, v)),
            }
        }
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        SparseVector { entries }
    }
}
