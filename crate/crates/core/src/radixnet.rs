//! RadiX-Net synthetic topology generator.
//!
//! A base network is a mixed-radix butterfly: stage `s` links neurons whose
//! mixed-radix expansions differ only in digit `s`, so the stages together
//! give exactly one path between every input and output neuron. The base is
//! widened by a Kronecker product with all-ones blocks and then deepened by
//! appending copies of its stages relabelled with random permutations.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{LayerWeights, NetworkModel, SparseMatrix};

/// Weight given to every connection unless configured otherwise.
pub const DEFAULT_WEIGHT: f64 = 0.0625;

/// Connections per neuron in every challenge network.
pub const CHALLENGE_FAN_IN: usize = 32;

/// Challenge layer counts.
pub const CHALLENGE_DEPTHS: [usize; 3] = [120, 480, 1920];

/// Per-stage radices of a butterfly base network, least-significant digit first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RadixSpec {
    radices: Vec<usize>,
    neurons: usize,
}

impl RadixSpec {
    pub fn new(radices: Vec<usize>) -> Result<Self> {
        if radices.is_empty() {
            return Err(Error::Parameter("radix set is empty".into()));
        }
        if let Some(r) = radices.iter().find(|&&r| r < 2) {
            return Err(Error::Parameter(format!("radix {r} is below 2")));
        }
        let neurons = radices
            .iter()
            .try_fold(1usize, |acc, &r| acc.checked_mul(r))
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or_else(|| Error::Capacity(format!("product of radices {radices:?} overflows")))?;
        Ok(RadixSpec { radices, neurons })
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// Neurons per layer, the product of the radices.
    pub fn neurons(&self) -> usize {
        self.neurons
    }

    pub fn stages(&self) -> usize {
        self.radices.len()
    }
}

/// Kronecker widening factors, one per neuron layer of the base network
/// (stages + 1). Only uniform factors are supported.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KroneckerSpec {
    factors: Vec<usize>,
}

impl KroneckerSpec {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        let first = *factors
            .first()
            .ok_or_else(|| Error::Parameter("Kronecker set is empty".into()))?;
        if first < 1 {
            return Err(Error::Parameter(
                "Kronecker factors must be at least 1".into(),
            ));
        }
        if factors.iter().any(|&f| f != first) {
            return Err(Error::Parameter(format!(
                "Kronecker set {factors:?} is not uniform"
            )));
        }
        Ok(KroneckerSpec { factors })
    }

    /// A uniform set of `len` copies of `factor`.
    pub fn uniform(factor: usize, len: usize) -> Result<Self> {
        Self::new(vec![factor; len])
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn factor(&self) -> usize {
        self.factors[0]
    }
}

/// Full description of a generated network.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub radix: RadixSpec,
    pub kron: KroneckerSpec,
    pub target_layers: usize,
    pub weight_value: f64,
    pub rng_seed: u64,
    /// Overrides the bias looked up by neuron count.
    pub bias: Option<f64>,
}

impl GeneratorConfig {
    /// Challenge parameters for `neurons` in {1024, 4096, 16384, 65536}:
    /// a radix-2 base of log2(neurons / 16) stages widened by 16.
    pub fn challenge(neurons: usize, layers: usize, rng_seed: u64) -> Result<Self> {
        let stages = match neurons {
            1024 => 6,
            4096 => 8,
            16384 => 10,
            65536 => 12,
            _ => {
                return Err(Error::Parameter(format!(
                    "no challenge parameters for {neurons} neurons; supply radix, Kronecker and bias explicitly"
                )))
            }
        };
        let cfg = GeneratorConfig {
            radix: RadixSpec::new(vec![2; stages])?,
            kron: KroneckerSpec::uniform(16, stages + 1)?,
            target_layers: layers,
            weight_value: DEFAULT_WEIGHT,
            rng_seed,
            bias: None,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn neurons(&self) -> usize {
        self.radix.neurons() * self.kron.factor()
    }

    pub fn base_depth(&self) -> usize {
        self.radix.stages()
    }

    /// Bias for every layer: the override, else the table value.
    pub fn layer_bias(&self) -> Result<f64> {
        resolve_bias(self.neurons(), self.bias)
    }

    pub fn check(&self) -> Result<()> {
        if self.kron.factors().len() != self.radix.stages() + 1 {
            return Err(Error::Parameter(format!(
                "Kronecker set needs {} factors for {} stages, got {}",
                self.radix.stages() + 1,
                self.radix.stages(),
                self.kron.factors().len()
            )));
        }
        check_depth(self.target_layers, self.base_depth())?;
        if !(self.weight_value.is_finite() && self.weight_value > 0.0) {
            return Err(Error::Parameter(format!(
                "weight value {} must be positive and finite",
                self.weight_value
            )));
        }
        if self
            .radix
            .neurons()
            .checked_mul(self.kron.factor())
            .is_none_or(|n| n > u32::MAX as usize)
        {
            return Err(Error::Capacity("expanded network is too wide".into()));
        }
        self.layer_bias().map(|_| ())
    }
}

/// Layer bias by neuron count.
pub fn challenge_bias(neurons: usize) -> Option<f64> {
    match neurons {
        1024 => Some(-0.30),
        4096 => Some(-0.35),
        16384 => Some(-0.40),
        65536 => Some(-0.45),
        _ => None,
    }
}

fn resolve_bias(neurons: usize, bias: Option<f64>) -> Result<f64> {
    match bias.or_else(|| challenge_bias(neurons)) {
        Some(b) if b.is_finite() => Ok(b),
        Some(b) => Err(Error::Parameter(format!("bias {b} is not finite"))),
        None => Err(Error::Parameter(format!(
            "no tabulated bias for {neurons} neurons; supply one explicitly"
        ))),
    }
}

fn check_depth(target: usize, base: usize) -> Result<()> {
    if target == 0 || base == 0 || !target.is_multiple_of(base) {
        return Err(Error::Parameter(format!(
            "target depth {target} is not a positive multiple of the base depth {base}"
        )));
    }
    Ok(())
}

/// Binary adjacency matrices, one per radix, of the mixed-radix butterfly.
pub fn mixed_radix_butterfly(spec: &RadixSpec) -> Result<Vec<SparseMatrix>> {
    let n = spec.neurons();
    let mut place = 1usize;
    let mut stages = Vec::with_capacity(spec.stages());
    for &radix in spec.radices() {
        let coords = (0..n).flat_map(move |i| {
            let digit = (i / place) % radix;
            let base = i - digit * place;
            (0..radix).map(move |d| (i, (base + d * place) as u32))
        });
        let m = SparseMatrix::from_coo(coords, std::iter::repeat(1.0), n * radix, n, n)
            .expect("butterfly rows have distinct columns");
        stages.push(m);
        place *= radix;
    }
    Ok(stages)
}

/// Replaces each entry of every stage by a `k` x `k` block of ones.
pub fn kronecker_expand(base: &[SparseMatrix], k: usize) -> Result<Vec<SparseMatrix>> {
    if k < 1 {
        return Err(Error::Parameter(
            "Kronecker factor must be at least 1".into(),
        ));
    }
    base.iter().map(|a| kron_ones(a, k)).collect()
}

fn kron_ones(a: &SparseMatrix, k: usize) -> Result<SparseMatrix> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::Shape(format!(
            "stage is {}x{}, expected square",
            a.n_rows(),
            a.n_cols()
        )));
    }
    if a.values().iter().any(|&v| v != 1.0) {
        return Err(Error::Parameter(
            "Kronecker expansion expects binary stages".into(),
        ));
    }
    let n = a.n_rows();
    let big = n
        .checked_mul(k)
        .filter(|&v| v <= u32::MAX as usize)
        .ok_or_else(|| Error::Capacity(format!("{n} neurons expanded by {k} overflows")))?;
    let nnz = a.nnz() * k * k;
    let coords = (0..big).flat_map(move |r| {
        let (cols, _) = a.row(r / k);
        cols.iter()
            .flat_map(move |&c| (0..k).map(move |b| (r, (c as usize * k + b) as u32)))
    });
    Ok(
        SparseMatrix::from_coo(coords, std::iter::repeat(1.0), nnz, big, big)
            .expect("Kronecker rows have distinct columns"),
    )
}

/// The relabelling applied at layer boundary `t`: identity for `t = 0`,
/// otherwise a uniform random permutation drawn from stream `t` of a
/// ChaCha generator keyed by `seed`.
pub fn boundary_permutation(seed: u64, t: usize, n: usize) -> Vec<u32> {
    let mut perm: Vec<u32> = (0..n as u32).collect();
    if t > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        perm.shuffle(&mut rng);
    }
    perm
}

/// Maps edge `(i, j)` of `a` to `(inbound[i], outbound[j])`.
pub fn permute_stage(a: &SparseMatrix, inbound: &[u32], outbound: &[u32]) -> SparseMatrix {
    let n = a.n_rows();
    let coords = a.iter().map(|(r, c, _)| (inbound[r] as usize, outbound[c]));
    SparseMatrix::from_coo(coords, a.values().iter().copied(), a.nnz(), n, a.n_cols())
        .expect("permutations are bijective")
}

/// Layer `t` (1-based) of a deepened network built from `base`.
pub fn deepened_layer(base: &[SparseMatrix], t: usize, seed: u64) -> SparseMatrix {
    let stage = &base[(t - 1) % base.len()];
    let inbound = boundary_permutation(seed, t - 1, stage.n_rows());
    let outbound = boundary_permutation(seed, t, stage.n_cols());
    permute_stage(stage, &inbound, &outbound)
}

/// Repeats `base` until `target_layers` stages exist, relabelling every
/// layer boundary with a fresh permutation.
pub fn deepen(base: &[SparseMatrix], target_layers: usize, seed: u64) -> Result<Vec<SparseMatrix>> {
    check_depth(target_layers, base.len())?;
    check_square(base)?;
    Ok((1..=target_layers)
        .into_par_iter()
        .map(|t| deepened_layer(base, t, seed))
        .collect())
}

/// Deepening with caller-supplied boundary permutations `perms[0..=L]`.
pub fn deepen_with_permutations(
    base: &[SparseMatrix],
    perms: &[Vec<u32>],
) -> Result<Vec<SparseMatrix>> {
    let target = perms.len().saturating_sub(1);
    check_depth(target, base.len())?;
    check_square(base)?;
    let n = base[0].n_rows();
    for p in perms {
        let mut seen = vec![false; n];
        if p.len() != n
            || !p
                .iter()
                .all(|&i| (i as usize) < n && !std::mem::replace(&mut seen[i as usize], true))
        {
            return Err(Error::Parameter(
                "boundary relabelling is not a permutation".into(),
            ));
        }
    }
    Ok((1..=target)
        .map(|t| permute_stage(&base[(t - 1) % base.len()], &perms[t - 1], &perms[t]))
        .collect())
}

fn check_square(base: &[SparseMatrix]) -> Result<()> {
    let n = base[0].n_rows();
    if base.iter().any(|a| a.n_rows() != n || a.n_cols() != n) {
        return Err(Error::Shape(
            "base stages must all be the same square size".into(),
        ));
    }
    Ok(())
}

/// Gives every connection the value `weight_value` and every layer the
/// bias for `neurons` (or `bias` when supplied).
pub fn assign_weights(
    topology: Vec<SparseMatrix>,
    weight_value: f64,
    neurons: usize,
    bias: Option<f64>,
) -> Result<NetworkModel> {
    let bias = resolve_bias(neurons, bias)?;
    if !(weight_value.is_finite() && weight_value != 0.0) {
        return Err(Error::Parameter(format!(
            "weight value {weight_value} is unusable"
        )));
    }
    let layers = topology
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            if a.values().iter().any(|&v| v != 1.0) {
                return Err(Error::Parameter(format!("stage {} is not binary", i + 1)));
            }
            Ok(LayerWeights {
                weights: with_constant_values(a, weight_value),
                bias,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkModel::new(neurons, layers)
}

fn with_constant_values(a: SparseMatrix, value: f64) -> SparseMatrix {
    let mut parts = a.into_parts();
    parts.values.iter_mut().for_each(|v| *v = value);
    SparseMatrix::from_parts_unchecked(parts)
}

pub fn count_connections(model: &NetworkModel) -> u64 {
    model.connections()
}

/// Connection count of a challenge network.
pub fn challenge_connections(neurons: usize, layers: usize) -> u64 {
    (CHALLENGE_FAN_IN * neurons * layers) as u64
}

/// The widened base stages for `cfg`.
pub fn expanded_base(cfg: &GeneratorConfig) -> Result<Vec<SparseMatrix>> {
    cfg.check()?;
    kronecker_expand(&mixed_radix_butterfly(&cfg.radix)?, cfg.kron.factor())
}

/// Produces weighted layers one at a time, in order, so a caller can write
/// each to disk without holding the whole model.
pub struct LayerStream {
    base: Vec<SparseMatrix>,
    seed: u64,
    weight: f64,
    bias: f64,
    next: usize,
    total: usize,
}

impl LayerStream {
    pub fn new(cfg: &GeneratorConfig) -> Result<Self> {
        Ok(LayerStream {
            base: expanded_base(cfg)?,
            seed: cfg.rng_seed,
            weight: cfg.weight_value,
            bias: cfg.layer_bias()?,
            next: 1,
            total: cfg.target_layers,
        })
    }

    /// Layer `t` (1-based), independent of iteration state.
    pub fn layer(&self, t: usize) -> LayerWeights {
        LayerWeights {
            weights: with_constant_values(deepened_layer(&self.base, t, self.seed), self.weight),
            bias: self.bias,
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

impl Iterator for LayerStream {
    type Item = LayerWeights;

    fn next(&mut self) -> Option<LayerWeights> {
        if self.next > self.total {
            return None;
        }
        let layer = self.layer(self.next);
        self.next += 1;
        Some(layer)
    }
}

/// Generates the complete model in memory. Layers are built in parallel;
/// the result does not depend on the number of threads.
pub fn generate(cfg: &GeneratorConfig) -> Result<NetworkModel> {
    let stream = LayerStream::new(cfg)?;
    let layers: Vec<LayerWeights> = (1..=stream.len())
        .into_par_iter()
        .map(|t| stream.layer(t))
        .collect();
    NetworkModel::new(cfg.neurons(), layers)
}
