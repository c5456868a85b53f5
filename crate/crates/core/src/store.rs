//! Messages, replicated databases and the user's private interleavers.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gf::PrimeField;

/// `(M, P, N, q, L)`: messages, desired messages, databases, field size and
/// symbols per message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProblemParams {
    pub messages: usize,
    pub desired: usize,
    pub databases: usize,
    pub modulus: u64,
    pub message_len: usize,
}

impl ProblemParams {
    pub fn new(messages: usize, desired: usize, databases: usize, modulus: u64, message_len: usize) -> Result<Self> {
        if messages == 0 {
            return Err(Error::InvalidParams("M must be at least 1".into()));
        }
        if desired == 0 || desired > messages {
            return Err(Error::InvalidParams(format!("need 1 <= P <= M, got P={desired}, M={messages}")));
        }
        if databases < 2 {
            return Err(Error::InvalidParams(format!("need N >= 2, got N={databases}")));
        }
        if message_len == 0 {
            return Err(Error::InvalidParams("L must be at least 1".into()));
        }
        PrimeField::new(modulus)?;
        Ok(Self {
            messages,
            desired,
            databases,
            modulus,
            message_len,
        })
    }

    pub fn field(&self) -> PrimeField {
        PrimeField::new(self.modulus).expect("validated on construction")
    }
}

/// Independent randomness streams derived from one seed.
///
/// Every stream is drawn the same way whatever the desired set is, so two
/// runs that differ only in the desired set see identical randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Content = 1,
    Interleaver = 2,
    Permutation = 3,
    Shuffle = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// The desired index set (0-based, sorted) and the user's randomness seed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RetrievalRequest {
    desired: Vec<usize>,
    pub seed: u64,
}

impl RetrievalRequest {
    pub fn new(mut desired: Vec<usize>, seed: u64, params: &ProblemParams) -> Result<Self> {
        desired.sort_unstable();
        if desired.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParams("desired indices must be distinct".into()));
        }
        if desired.len() != params.desired {
            return Err(Error::InvalidParams(format!(
                "desired set has {} indices, expected P={}",
                desired.len(),
                params.desired
            )));
        }
        if let Some(&bad) = desired.iter().find(|&&m| m >= params.messages) {
            return Err(Error::InvalidParams(format!("message index {} out of range", bad + 1)));
        }
        Ok(Self { desired, seed })
    }

    /// The first `P` messages, as in all worked examples.
    pub fn leading(params: &ProblemParams, seed: u64) -> Self {
        Self {
            desired: (0..params.desired).collect(),
            seed,
        }
    }

    pub fn desired(&self) -> &[usize] {
        &self.desired
    }

    pub fn is_desired(&self, m: usize) -> bool {
        self.desired.binary_search(&m).is_ok()
    }

    pub fn undesired(&self, messages: usize) -> Vec<usize> {
        (0..messages).filter(|&m| !self.is_desired(m)).collect()
    }
}

/// One uniform permutation per message; `x_m(i) = w_m(perm[m][i])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleavers {
    perms: Vec<Vec<usize>>,
}

impl Interleavers {
    pub fn from_seed(seed: u64, messages: usize, message_len: usize) -> Self {
        let mut rng = stream_rng(seed, Stream::Interleaver);
        let perms = (0..messages)
            .map(|_| {
                let mut p: Vec<usize> = (0..message_len).collect();
                p.shuffle(&mut rng);
                p
            })
            .collect();
        Self { perms }
    }

    pub fn position(&self, message: usize, index: usize) -> usize {
        self.perms[message][index]
    }

    pub fn perm(&self, message: usize) -> &[usize] {
        &self.perms[message]
    }

    /// Inverts the interleaving of one message: returns `w` given `x`.
    pub fn deinterleave(&self, message: usize, x: &[u64]) -> Vec<u64> {
        let mut w = vec![0; x.len()];
        for (i, &v) in x.iter().enumerate() {
            w[self.perms[message][i]] = v;
        }
        w
    }
}

/// `M` messages of `L` symbols, replicated verbatim on all `N` databases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageStore {
    params: ProblemParams,
    seed: u64,
    messages: Vec<Vec<u64>>,
    interleavers: Interleavers,
}

/// Uniform i.i.d. symbols; the same seed always yields the same store.
pub fn generate_store(params: &ProblemParams, seed: u64) -> MessageStore {
    let mut rng = stream_rng(seed, Stream::Content);
    let messages = (0..params.messages)
        .map(|_| (0..params.message_len).map(|_| rng.random_range(0..params.modulus)).collect())
        .collect();
    MessageStore {
        params: *params,
        seed,
        messages,
        interleavers: Interleavers::from_seed(seed, params.messages, params.message_len),
    }
}

impl MessageStore {
    pub fn from_messages(params: &ProblemParams, seed: u64, messages: Vec<Vec<u64>>) -> Result<Self> {
        if messages.len() != params.messages || messages.iter().any(|m| m.len() != params.message_len) {
            return Err(Error::DimensionMismatch(format!(
                "store must hold {} messages of {} symbols",
                params.messages, params.message_len
            )));
        }
        if messages.iter().flatten().any(|&v| v >= params.modulus) {
            return Err(Error::InvalidParams(format!("symbol outside GF({})", params.modulus)));
        }
        Ok(Self {
            params: *params,
            seed,
            messages,
            interleavers: Interleavers::from_seed(seed, params.messages, params.message_len),
        })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn message(&self, m: usize) -> &[u64] {
        &self.messages[m]
    }

    pub fn interleavers(&self) -> &Interleavers {
        &self.interleavers
    }

    /// `x_m(i)`: symbol at interleaved position `i` of message `m`.
    pub fn interleaved(&self, m: usize, i: usize) -> u64 {
        self.messages[m][self.interleavers.position(m, i)]
    }

    /// Plain-text form: header `M P N q L seed`, then one line per message.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut out = format!(
            "{} {} {} {} {} {}\n",
            p.messages, p.desired, p.databases, p.modulus, p.message_len, self.seed
        );
        for msg in &self.messages {
            let line: Vec<String> = msg.iter().map(u64::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let nums = parse_u64s(header, hline + 1)?;
        if nums.len() != 6 {
            return Err(Error::Parse {
                line: hline + 1,
                msg: "header must be `M P N q L seed`".into(),
            });
        }
        let params = ProblemParams::new(
            nums[0] as usize,
            nums[1] as usize,
            nums[2] as usize,
            nums[3],
            nums[4] as usize,
        )?;
        let messages = lines
            .map(|(i, l)| parse_u64s(l, i + 1))
            .collect::<Result<Vec<_>>>()?;
        Self::from_messages(&params, nums[5], messages)
    }
}

fn parse_u64s(line: &str, lineno: usize) -> Result<Vec<u64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<u64>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("{t:?}: {e}"),
            })
        })
        .collect()
}
