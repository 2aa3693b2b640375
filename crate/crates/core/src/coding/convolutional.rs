use super::{bit_sign, hard_bit, LlrFrame, LlrRole};
use crate::{Error, Result};

/// Generator polynomials in octal, first output first.
pub const GENERATORS: [u32; 2] = [0o7, 0o5];
/// Encoder memory; also the number of zero tail bits.
pub const CODE_MEMORY: usize = 2;

const NUM_STATES: usize = 1 << CODE_MEMORY;
const OUTPUTS: usize = GENERATORS.len();
/// Stand-in for an infinite LLR when one hypothesis has no surviving path.
const SATURATED_LLR: f64 = 1e3;

#[derive(Debug, Clone, Copy)]
struct Transition {
    next: usize,
    outputs: [u8; OUTPUTS],
    /// `outputs` read as a binary number, first output most significant.
    pattern: usize,
}

/// Feedforward rate-1/2 code with constraint length 3, zero-tail terminated.
///
/// The state holds the two previous inputs with the most recent one in the
/// high bit. Outputs are interlaced per step as `(g1, g2)`.
#[derive(Debug, Clone)]
pub struct ConvCode {
    table: [[Transition; 2]; NUM_STATES],
}

impl Default for ConvCode {
    fn default() -> Self {
        Self::new()
    }
}

impl ConvCode {
    pub fn new() -> Self {
        let mut table = [[Transition {
            next: 0,
            outputs: [0; OUTPUTS],
            pattern: 0,
        }; 2]; NUM_STATES];
        for (state, row) in table.iter_mut().enumerate() {
            for (input, slot) in row.iter_mut().enumerate() {
                let register = ((input as u32) << CODE_MEMORY) | state as u32;
                let mut outputs = [0u8; OUTPUTS];
                for (out, g) in outputs.iter_mut().zip(GENERATORS) {
                    *out = ((register & g).count_ones() & 1) as u8;
                }
                *slot = Transition {
                    next: (register >> 1) as usize,
                    outputs,
                    pattern: outputs
                        .iter()
                        .fold(0, |acc, &b| (acc << 1) | usize::from(b)),
                };
            }
        }
        Self { table }
    }

    pub fn coded_len(&self, message_len: usize) -> usize {
        OUTPUTS * (message_len + CODE_MEMORY)
    }

    pub fn message_len(&self, coded_len: usize) -> Result<usize> {
        if !coded_len.is_multiple_of(OUTPUTS) || coded_len / OUTPUTS <= CODE_MEMORY {
            return Err(Error::InvalidParameter(format!(
                "{coded_len} is not a valid codeword length"
            )));
        }
        Ok(coded_len / OUTPUTS - CODE_MEMORY)
    }

    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.is_empty() {
            return Err(Error::EmptyMessage);
        }
        let mut state = 0;
        let mut out = Vec::with_capacity(self.coded_len(message.len()));
        let tail = std::iter::repeat_n(0u8, CODE_MEMORY);
        for bit in message.iter().copied().chain(tail) {
            let tr = self.table[state][usize::from(bit & 1)];
            out.extend_from_slice(&tr.outputs);
            state = tr.next;
        }
        debug_assert_eq!(state, 0);
        Ok(out)
    }

    /// Max-log BCJR over the terminated trellis.
    ///
    /// `apriori` holds channel LLRs on the coded bits in encoder order.
    pub fn decode(&self, apriori: &[f64]) -> Result<DecoderOutput> {
        let message_len = self.message_len(apriori.len())?;
        let steps = message_len + CODE_MEMORY;
        let ninf = f64::NEG_INFINITY;
        const PATTERNS: usize = 1 << OUTPUTS;

        // metrics[t][o]: half the correlation of output pattern `o` with the LLRs
        let metrics: Vec<[f64; PATTERNS]> = apriori
            .chunks(OUTPUTS)
            .map(|llrs| {
                let mut m = [0.0; PATTERNS];
                for (o, slot) in m.iter_mut().enumerate() {
                    for (j, &l) in llrs.iter().enumerate() {
                        *slot += 0.5 * bit_sign(((o >> (OUTPUTS - 1 - j)) & 1) as u8) * l;
                    }
                }
                m
            })
            .collect();
        // tail steps only admit a zero input
        let inputs = |t: usize| if t < message_len { 2 } else { 1 };

        let mut alpha = vec![[ninf; NUM_STATES]; steps + 1];
        alpha[0][0] = 0.0;
        for t in 0..steps {
            let cur = alpha[t];
            let mut next = [ninf; NUM_STATES];
            for (s, &a) in cur.iter().enumerate() {
                for tr in &self.table[s][..inputs(t)] {
                    let v = a + metrics[t][tr.pattern];
                    if v > next[tr.next] {
                        next[tr.next] = v;
                    }
                }
            }
            alpha[t + 1] = next;
        }

        let mut beta = vec![[ninf; NUM_STATES]; steps + 1];
        beta[steps][0] = 0.0;
        for t in (0..steps).rev() {
            let after = beta[t + 1];
            let mut cur = [ninf; NUM_STATES];
            for (s, slot) in cur.iter_mut().enumerate() {
                for tr in &self.table[s][..inputs(t)] {
                    let v = after[tr.next] + metrics[t][tr.pattern];
                    if v > *slot {
                        *slot = v;
                    }
                }
            }
            beta[t] = cur;
        }

        let mut app_coded = vec![0.0; apriori.len()];
        let mut app_message = vec![0.0; message_len];
        for t in 0..steps {
            let mut coded_best = [[ninf; 2]; OUTPUTS];
            let mut input_best = [ninf; 2];
            for s in 0..NUM_STATES {
                let a = alpha[t][s];
                if a == ninf {
                    continue;
                }
                for (u, tr) in self.table[s][..inputs(t)].iter().enumerate() {
                    let v = a + metrics[t][tr.pattern] + beta[t + 1][tr.next];
                    for (best, &b) in coded_best.iter_mut().zip(&tr.outputs) {
                        let slot = &mut best[usize::from(b)];
                        if v > *slot {
                            *slot = v;
                        }
                    }
                    if v > input_best[u] {
                        input_best[u] = v;
                    }
                }
            }
            for (j, best) in coded_best.iter().enumerate() {
                app_coded[t * OUTPUTS + j] = llr_from_maxima(best[0], best[1]);
            }
            if t < message_len {
                app_message[t] = llr_from_maxima(input_best[0], input_best[1]);
            }
        }

        let extrinsic = app_coded
            .iter()
            .zip(apriori)
            .map(|(app, pri)| app - pri)
            .collect();
        let decisions = app_message.iter().map(|&l| hard_bit(l)).collect();
        Ok(DecoderOutput {
            extrinsic: LlrFrame::new(extrinsic, LlrRole::Extrinsic),
            app_coded: LlrFrame::new(app_coded, LlrRole::APosteriori),
            app_message: LlrFrame::new(app_message, LlrRole::APosteriori),
            decisions,
        })
    }
}

fn llr_from_maxima(plus: f64, minus: f64) -> f64 {
    match (plus.is_finite(), minus.is_finite()) {
        (true, true) => plus - minus,
        (true, false) => SATURATED_LLR,
        (false, true) => -SATURATED_LLR,
        (false, false) => 0.0,
    }
}

/// Everything one decoder activation produces.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderOutput {
    /// A posteriori minus a priori on the coded bits.
    pub extrinsic: LlrFrame,
    /// A posteriori LLRs on the coded bits.
    pub app_coded: LlrFrame,
    /// A posteriori LLRs on the message bits.
    pub app_message: LlrFrame,
    /// Sign decisions on `app_message`.
    pub decisions: Vec<u8>,
}

/// Encode with the `[7,5]` code.
pub fn encode(message: &[u8]) -> Result<Vec<u8>> {
    ConvCode::new().encode(message)
}

/// Decode a frame of coded-bit LLRs (already deinterleaved).
pub fn maxlog_map_decode(apriori: &LlrFrame) -> Result<DecoderOutput> {
    ConvCode::new().decode(&apriori.values)
}
