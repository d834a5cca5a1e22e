use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Halton sequence with a seeded random digit permutation per dimension.
pub struct ScrambledHalton {
    bases: Vec<u64>,
    perms: Vec<Vec<u64>>,
    index: u64,
}

impl ScrambledHalton {
    pub fn new(dims: usize, seed: u64) -> Self {
        let bases = first_primes(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perms = bases
            .iter()
            .map(|&b| {
                let mut p: Vec<u64> = (0..b).collect();
                p.shuffle(&mut rng);
                p
            })
            .collect();
        ScrambledHalton {
            bases,
            perms,
            index: 0,
        }
    }

    /// Next point in `[0, 1)^dims`.
    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        let i = self.index;
        self.bases
            .iter()
            .zip(&self.perms)
            .map(|(&b, perm)| {
                let mut v = 0.0;
                let mut scale = 1.0 / b as f64;
                let mut k = i;
                // permuted digits, padded so that trailing zeros get scrambled too
                for _ in 0..digits(i, b) + 2 {
                    v += perm[(k % b) as usize] as f64 * scale;
                    k /= b;
                    scale /= b as f64;
                }
                v.min(1.0 - f64::EPSILON)
            })
            .collect()
    }
}

fn digits(mut i: u64, b: u64) -> u32 {
    let mut n = 0;
    while i > 0 {
        i /= b;
        n += 1;
    }
    n
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut c = 2u64;
    while out.len() < n {
        if out.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}
