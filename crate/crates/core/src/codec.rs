//! Bit-true raptor encoder and BPSK/AWGN channel.
//!
//! Randomness comes from ChaCha8 generators. A seed and a [`Stream`] tag pick
//! an independent keystream, so graph construction, degree draws, neighbor
//! draws and noise never share state even when they share a seed.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::degree::OutputDegreeDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Graph = 1,
    Degrees = 2,
    Neighbors = 3,
    Noise = 4,
    Info = 5,
}

/// Generator for one `(seed, stream)` pair.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a sub-seed from a master seed and two indices.
pub fn mix_seed(master: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ a) ^ b.rotate_left(32))
}

/// Dense GF(2) row.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn zeros(n: usize) -> Self {
        Self(vec![0; n.div_ceil(64)])
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }

    fn dot(&self, other: &BitRow) -> u8 {
        let ones: u32 = self.0.iter().zip(&other.0).map(|(a, b)| (a & b).count_ones()).sum();
        (ones & 1) as u8
    }
}

/// Systematic encoder from the reduced row echelon form of `H`.
#[derive(Debug, Clone)]
struct Encoder {
    /// Pivot column of each independent row.
    pivots: Vec<usize>,
    /// RREF rows restricted to the free columns (pivot bits cleared).
    rows: Vec<BitRow>,
    free: Vec<usize>,
}

impl Encoder {
    fn from_checks(n: usize, checks: &[Vec<u32>]) -> Self {
        let mut rows: Vec<BitRow> = checks
            .iter()
            .map(|c| {
                let mut r = BitRow::zeros(n);
                for &v in c {
                    r.0[v as usize / 64] ^= 1 << (v % 64);
                }
                r
            })
            .collect();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..n {
            if rank == rows.len() {
                break;
            }
            let Some(p) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&pivot_row);
                }
            }
            pivots.push(col);
            rank += 1;
        }
        rows.truncate(rank);
        for (row, &p) in rows.iter_mut().zip(&pivots) {
            row.0[p / 64] &= !(1 << (p % 64));
        }
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let free = (0..n).filter(|&c| !is_pivot[c]).collect();
        Self { pivots, rows, free }
    }
}

#[derive(Debug, Clone)]
pub struct LdpcCode {
    pub n: usize,
    pub var_degree: u32,
    pub check_degree: u32,
    /// Variable indices of each parity check.
    pub checks: Vec<Vec<u32>>,
    /// Seed of the construction attempt that was kept.
    pub seed: u64,
    pub attempts: u32,
    encoder: Encoder,
}

impl LdpcCode {
    pub fn num_checks(&self) -> usize {
        self.checks.len()
    }

    pub fn rank(&self) -> usize {
        self.encoder.pivots.len()
    }

    pub fn info_len(&self) -> usize {
        self.n - self.rank()
    }

    pub fn design_rate(&self) -> f64 {
        1.0 - self.var_degree as f64 / self.check_degree as f64
    }

    pub fn rate(&self) -> f64 {
        self.info_len() as f64 / self.n as f64
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.num_checks()
    }

    /// Codeword positions that carry the information bits, in order.
    pub fn info_positions(&self) -> &[usize] {
        &self.encoder.free
    }

    pub fn syndrome(&self, word: &[u8]) -> Vec<u8> {
        self.checks.iter().map(|c| c.iter().fold(0, |acc, &v| acc ^ word[v as usize])).collect()
    }

    /// Adjacency-list dump: one line per check with its variable indices.
    pub fn to_adjacency_text(&self) -> String {
        let mut s = format!("# ldpc n={} checks={} seed={}\n", self.n, self.num_checks(), self.seed);
        for c in &self.checks {
            let line: Vec<String> = c.iter().map(u32::to_string).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

const MAX_RANK_ATTEMPTS: u32 = 10;

/// Random `(d_v, d_c)`-regular code by edge-socket permutation. Checks that
/// draw the same variable twice are repaired by swapping sockets with other
/// checks. Rank-deficient draws are retried with a fresh seed up to 10 times.
pub fn build_regular_ldpc(n: usize, d_v: u32, d_c: u32, seed: u64) -> Result<LdpcCode> {
    if n == 0 || d_v == 0 || d_c < 2 {
        return Err(Error::config(format!("invalid LDPC parameters n={n}, d_v={d_v}, d_c={d_c}")));
    }
    if (n * d_v as usize) % d_c as usize != 0 {
        return Err(Error::config(format!("n·d_v = {} is not divisible by d_c = {d_c}", n * d_v as usize)));
    }
    if d_c as usize > n {
        return Err(Error::config(format!("check degree {d_c} exceeds block length {n}")));
    }
    let mut best: Option<LdpcCode> = None;
    for attempt in 0..MAX_RANK_ATTEMPTS {
        let attempt_seed = if attempt == 0 { seed } else { mix_seed(seed, 0x1d9c, attempt as u64) };
        let checks = socket_graph(n, d_v, d_c, attempt_seed)?;
        let encoder = Encoder::from_checks(n, &checks);
        let code = LdpcCode {
            n,
            var_degree: d_v,
            check_degree: d_c,
            checks,
            seed: attempt_seed,
            attempts: attempt + 1,
            encoder,
        };
        if code.is_full_rank() {
            return Ok(code);
        }
        if best.as_ref().map_or(true, |b| code.rank() > b.rank()) {
            best = Some(code);
        }
    }
    let code = best.expect("at least one attempt");
    log::warn!(
        "LDPC code rank {} < {} checks after {MAX_RANK_ATTEMPTS} attempts; info length {}",
        code.rank(),
        code.num_checks(),
        code.info_len()
    );
    Ok(code)
}

fn socket_graph(n: usize, d_v: u32, d_c: u32, seed: u64) -> Result<Vec<Vec<u32>>> {
    let mut rng = stream_rng(seed, Stream::Graph);
    let d_c = d_c as usize;
    let mut sockets: Vec<u32> = (0..n as u32).flat_map(|v| std::iter::repeat(v).take(d_v as usize)).collect();
    sockets.shuffle(&mut rng);
    let m = sockets.len() / d_c;
    let has_dup = |s: &[u32], c: usize, v: u32, skip: usize| {
        s[c * d_c..(c + 1) * d_c].iter().enumerate().any(|(i, &x)| c * d_c + i != skip && x == v)
    };
    // Repeated edges: swap the offending socket with a random socket from
    // another check.
    let max_tries = 1000 * sockets.len().max(1);
    let mut tries = 0;
    for c in 0..m {
        let mut i = c * d_c;
        while i < (c + 1) * d_c {
            if !has_dup(&sockets, c, sockets[i], i) {
                i += 1;
                continue;
            }
            if m < 2 {
                return Err(Error::config("cannot build a simple graph with a single check"));
            }
            loop {
                tries += 1;
                if tries > max_tries {
                    return Err(Error::config("repeated-edge resolution did not terminate"));
                }
                let j = rng.gen_range(0..sockets.len());
                let cj = j / d_c;
                if cj == c {
                    continue;
                }
                let (a, b) = (sockets[i], sockets[j]);
                // Later checks are repaired in turn, so only already clean
                // checks must stay duplicate-free.
                if !has_dup(&sockets, c, b, i) && (cj > c || !has_dup(&sockets, cj, a, j)) {
                    sockets.swap(i, j);
                    break;
                }
            }
            // The swap can only have fixed check `c`; rescan it from the start.
            i = c * d_c;
        }
    }
    let mut checks: Vec<Vec<u32>> = sockets.chunks(d_c).map(<[u32]>::to_vec).collect();
    for c in &mut checks {
        c.sort_unstable();
    }
    Ok(checks)
}

/// Systematic encoding: `info` fills [`LdpcCode::info_positions`], parity bits
/// fill the pivot positions.
pub fn ldpc_encode(code: &LdpcCode, info: &[u8]) -> Result<Vec<u8>> {
    if info.len() != code.info_len() {
        return Err(Error::config(format!("info length {} does not match code info length {}", info.len(), code.info_len())));
    }
    let mut word = vec![0u8; code.n];
    let mut packed = BitRow::zeros(code.n);
    for (&pos, &bit) in code.encoder.free.iter().zip(info) {
        word[pos] = bit & 1;
        if bit & 1 == 1 {
            packed.set(pos);
        }
    }
    for (row, &p) in code.encoder.rows.iter().zip(&code.encoder.pivots) {
        word[p] = row.dot(&packed);
    }
    Ok(word)
}

/// LT output symbols drawn so far, stored as a flat neighbor list.
#[derive(Debug, Clone)]
pub struct LtStream {
    pub k: usize,
    pub seed: u64,
    dist: OutputDegreeDistribution,
    sampler: WeightedIndex<f64>,
    degrees_of: Vec<u32>,
    degree_rng: ChaCha8Rng,
    neighbor_rng: ChaCha8Rng,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl LtStream {
    pub fn new(dist: OutputDegreeDistribution, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("LT stream needs at least one input symbol"));
        }
        let (degrees_of, weights): (Vec<u32>, Vec<f64>) = dist.node_weights().iter().map(|(&d, &w)| (d, w)).unzip();
        let sampler = WeightedIndex::new(&weights).map_err(|e| Error::config(format!("degree distribution: {e}")))?;
        Ok(Self {
            k,
            seed,
            dist,
            sampler,
            degrees_of,
            degree_rng: stream_rng(seed, Stream::Degrees),
            neighbor_rng: stream_rng(seed, Stream::Neighbors),
            offsets: vec![0],
            neighbors: Vec::new(),
        })
    }

    pub fn distribution(&self) -> &OutputDegreeDistribution {
        &self.dist
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, symbol: usize) -> &[u32] {
        &self.neighbors[self.offsets[symbol]..self.offsets[symbol + 1]]
    }

    /// Draws `count` more symbols. Degrees above `k` are capped at `k`.
    pub fn extend(&mut self, count: usize) {
        self.offsets.reserve(count);
        for _ in 0..count {
            let d = (self.degrees_of[self.sampler.sample(&mut self.degree_rng)] as usize).min(self.k);
            let picked = rand::seq::index::sample(&mut self.neighbor_rng, self.k, d);
            self.neighbors.extend(picked.iter().map(|i| i as u32));
            self.offsets.push(self.neighbors.len());
        }
    }

    /// Output bits of symbols `from..len()`.
    pub fn encode_range(&self, input: &[u8], from: usize) -> Vec<u8> {
        (from..self.len())
            .map(|s| self.neighbors(s).iter().fold(0, |acc, &v| acc ^ input[v as usize]))
            .collect()
    }

    pub(crate) fn csr(&self) -> (&[usize], &[u32]) {
        (&self.offsets, &self.neighbors)
    }
}

/// Appends `count` symbols to `stream` and returns their bits for `input`.
pub fn lt_generate(stream: &mut LtStream, input: &[u8], count: usize) -> Result<Vec<u8>> {
    if input.len() != stream.k {
        return Err(Error::config(format!("input length {} does not match k = {}", input.len(), stream.k)));
    }
    let from = stream.len();
    stream.extend(count);
    Ok(stream.encode_range(input, from))
}

#[derive(Debug, Clone)]
pub struct ChannelOutput {
    pub llrs: Vec<f64>,
    pub sigma: f64,
}

/// BPSK `b ↦ 1 − 2b`, Gaussian noise of standard deviation `sigma`, and
/// LLRs `2y/σ²`.
pub fn awgn_llr(bits: &[u8], sigma: f64, seed: u64) -> Result<ChannelOutput> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("noise sigma must be positive, got {sigma}")));
    }
    let mut rng = stream_rng(seed, Stream::Noise);
    let scale = 2.0 / (sigma * sigma);
    let llrs = bits
        .iter()
        .map(|&b| {
            let s = 1.0 - 2.0 * (b & 1) as f64;
            let noise: f64 = rng.sample(StandardNormal);
            scale * (s + sigma * noise)
        })
        .collect();
    Ok(ChannelOutput { llrs, sigma })
}

/// Uniform random bits from the info stream of `seed`.
pub fn random_bits(len: usize, seed: u64) -> Vec<u8> {
    let mut rng = stream_rng(seed, Stream::Info);
    (0..len).map(|_| rng.gen::<bool>() as u8).collect()
}
