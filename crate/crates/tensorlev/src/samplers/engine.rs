//! Level-synchronous driver for the sampling loop shared by all three
//! samplers.
//!
//! At level a the conditional bucket and member distributions depend on the
//! path (i₁,…,i_{a−1}) only through the running diagonal D^a, so samples on
//! the same path are grouped and each distribution is estimated once per
//! distinct path instead of once per sample. Every sample still draws from
//! its own stream: child(2a−1) picks the bucket and child(2a) the member at
//! level a, which keeps the s rows exchangeable and thread-count agnostic.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure_contract, Result};
use crate::mat::{DenseMatrix, DenseVector};
use crate::rng::RngStream;
use crate::samplers::bucket::BucketHash;
use crate::samplers::rows::SampledRow;

pub(crate) struct LevelLoopInputs<'a> {
    /// Dataset whose rows enter at level a sits at factors[a−1].
    pub factors: Vec<&'a DenseMatrix>,
    pub bucket: &'a BucketHash,
    /// Diagonal of D¹ (all ones, or v for GPK).
    pub init_diag: DenseVector,
    /// Per-sample level count b; always the full degree outside GPK.
    pub blocks: Vec<usize>,
    /// Per-sample starting β (s, or s·f_b for GPK).
    pub init_betas: Vec<f64>,
    /// Samples already flagged by the caller (degree-draw fallback).
    pub init_flags: Vec<bool>,
    /// One independent stream per sample.
    pub streams: Vec<RngStream>,
}

/// Draws an index with probability mass[i]/Σmass. None when the total mass
/// is not positive; never lands on a zero-mass entry.
pub(crate) fn draw_categorical(masses: &[f64], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &m) in masses.iter().enumerate() {
        if m > 0.0 {
            last = Some((i, m / total));
            acc += m;
            if u < acc {
                return last;
            }
        }
    }
    last
}

struct PathState {
    indices: Vec<u32>,
    beta: f64,
    diag: DenseVector,
    flagged: bool,
}

/// Runs levels 1…max(blocks). `bucket_masses(diag, level, block)` returns
/// unnormalized masses aligned with `bucket.nonempty()`;
/// `member_masses(diag, level, block, members)` the per-member masses of one
/// bucket. Zero-mass levels fall back to a uniform draw and flag the sample.
pub(crate) fn run_level_loop<FB, FM>(
    inp: LevelLoopInputs,
    bucket_masses: FB,
    member_masses: FM,
) -> Result<Vec<SampledRow>>
where
    FB: Fn(&DenseVector, usize, usize) -> Result<Vec<f64>>,
    FM: Fn(&DenseVector, usize, usize, &[usize]) -> Result<Vec<f64>>,
{
    let s = inp.blocks.len();
    ensure_contract!(s >= 1, "need at least one sample");
    ensure_contract!(
        inp.init_betas.len() == s && inp.streams.len() == s && inp.init_flags.len() == s,
        "per-sample inputs must align"
    );
    let max_block = inp.blocks.iter().copied().max().unwrap_or(0);
    ensure_contract!(
        inp.factors.len() >= max_block,
        "need one factor per level: {} < {max_block}",
        inp.factors.len()
    );
    let nonempty = inp.bucket.nonempty();

    let mut states: Vec<PathState> = (0..s)
        .map(|l| PathState {
            indices: Vec::with_capacity(inp.blocks[l]),
            beta: inp.init_betas[l],
            diag: inp.init_diag.clone(),
            flagged: inp.init_flags[l],
        })
        .collect();

    for level in 1..=max_block {
        // Phase one: bucket draw, one mass vector per distinct path.
        let mut groups: BTreeMap<(usize, Vec<u32>), Vec<usize>> = BTreeMap::new();
        for l in 0..s {
            if inp.blocks[l] >= level {
                groups
                    .entry((inp.blocks[l], states[l].indices.clone()))
                    .or_default()
                    .push(l);
            }
        }
        let mut picked: Vec<Option<(usize, f64)>> = vec![None; s];
        for ((block, _), group) in &groups {
            let masses = bucket_masses(&states[group[0]].diag, level, *block)?;
            ensure_contract!(
                masses.len() == nonempty.len(),
                "bucket masses must cover every nonempty bucket"
            );
            for &l in group {
                let mut rng = inp.streams[l].child((2 * level - 1) as u64).rng();
                let (pos, p) = match draw_categorical(&masses, &mut rng) {
                    Some(hit) => hit,
                    None => {
                        states[l].flagged = true;
                        (rng.gen_range(0..nonempty.len()), 1.0 / nonempty.len() as f64)
                    }
                };
                picked[l] = Some((nonempty[pos], p));
            }
        }

        // Phase two: member draw within the sampled bucket.
        let mut subgroups: BTreeMap<(usize, Vec<u32>, usize), Vec<usize>> = BTreeMap::new();
        for l in 0..s {
            if let Some((t, _)) = picked[l] {
                subgroups
                    .entry((inp.blocks[l], states[l].indices.clone(), t))
                    .or_default()
                    .push(l);
            }
        }
        for ((block, _, t), group) in &subgroups {
            let members = inp.bucket.members(*t);
            let masses = member_masses(&states[group[0]].diag, level, *block, members)?;
            ensure_contract!(masses.len() == members.len(), "one mass per bucket member");
            for &l in group {
                let mut rng = inp.streams[l].child((2 * level) as u64).rng();
                let (pos, q) = match draw_categorical(&masses, &mut rng) {
                    Some(hit) => hit,
                    None => {
                        states[l].flagged = true;
                        (rng.gen_range(0..members.len()), 1.0 / members.len() as f64)
                    }
                };
                let i = members[pos];
                let (_, p) = picked[l].expect("bucket drawn in phase one");
                let state = &mut states[l];
                state.beta *= p * q;
                state.indices.push(i as u32);
                let x = inp.factors[level - 1];
                for c in 0..state.diag.len() {
                    state.diag[c] *= x[(i, c)];
                }
            }
        }
    }

    Ok(states
        .into_iter()
        .zip(&inp.blocks)
        .map(|(st, &b)| SampledRow {
            block: b,
            indices: st.indices,
            weight: 1.0 / st.beta.sqrt(),
            prob: st.beta / s as f64,
            fallback: st.flagged,
        })
        .collect())
}

/// Bucket-compressed datasets W[pos][k][a] = G_{r,k}·X^(a)_{members(r),⋆} for
/// the nonempty buckets, in nonempty() order. G streams key on the bucket id,
/// so skipping empty buckets changes nothing downstream.
pub(crate) fn build_bucket_compressions(
    xs: &[&DenseMatrix],
    hash: &BucketHash,
    deg1_dim: usize,
    medians: usize,
    stream: &RngStream,
) -> Result<Vec<Vec<Vec<DenseMatrix>>>> {
    use crate::sketch::CountSketchSpec;
    let n = xs[0].ncols();
    let mut out = Vec::with_capacity(hash.nonempty().len());
    let mut col = Vec::new();
    for &r in hash.nonempty() {
        let members = hash.members(r);
        let mut per_k = Vec::with_capacity(medians);
        for k in 0..medians {
            let g = CountSketchSpec::build(
                members.len(),
                deg1_dim,
                &stream.child(r as u64).child(k as u64),
            );
            let mut per_a = Vec::with_capacity(xs.len());
            for x in xs {
                let mut w = DenseMatrix::zeros(deg1_dim, n);
                for l in 0..n {
                    col.clear();
                    col.extend(members.iter().map(|&i| x[(i, l)]));
                    for (j, val) in g.apply_dense(&col)?.into_iter().enumerate() {
                        w[(j, l)] = val;
                    }
                }
                per_a.push(w);
            }
            per_k.push(per_a);
        }
        out.push(per_k);
    }
    Ok(out)
}

/// D·Wᵀ as the n×n' query matrix for a bucket mass estimate.
pub(crate) fn diag_times_transpose(diag: &DenseVector, w: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(diag.len(), w.nrows(), |l, j| diag[l] * w[(j, l)])
}

/// D·xᵀ_{i,⋆} as the n×1 query matrix for a single member.
pub(crate) fn diag_times_row(diag: &DenseVector, x: &DenseMatrix, i: usize) -> DenseMatrix {
    DenseMatrix::from_fn(diag.len(), 1, |l, _| diag[l] * x[(i, l)])
}
