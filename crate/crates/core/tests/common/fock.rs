//! Number-basis oracle for an EPR pair with one beam through a
//! quantum-limited amplifier.
//!
//! The source is `Σ_n c_n |n, n>` with `c_n = tanhⁿ r / cosh r`, truncated at
//! `cutoff`. The amplifier has Kraus operators
//! `A_k |n> = α_{n,k} |n + k>`, `|α_{n,k}|² = C(n+k, k) (1 - 1/G)^k / G^{n+1}`,
//! so the branches `(1 ⊗ A_k)|ψ>` occupy disjoint photon-number differences and
//! are orthogonal. The joint spectrum is then the set of branch weights and
//! both marginals are diagonal.

fn shannon_bits(p: impl IntoIterator<Item = f64>) -> f64 {
    p.into_iter().filter(|&x| x > 0.0).map(|x| -x * x.log2()).sum()
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

pub struct FockState {
    /// `|c_n|²`, renormalized after truncation.
    pub source: Vec<f64>,
    /// `|c_n α_{n,k}|²` indexed `[n][k]`.
    pub branches: Vec<Vec<f64>>,
}

impl FockState {
    pub fn amplified_epr(r: f64, gain: f64, cutoff: usize, max_added: usize) -> Self {
        let t2 = r.tanh().powi(2);
        let mut source: Vec<f64> = (0..=cutoff).map(|n| t2.powi(n as i32)).collect();
        let norm: f64 = source.iter().sum();
        source.iter_mut().for_each(|p| *p /= norm);
        let x = 1.0 - 1.0 / gain;
        let branches = source
            .iter()
            .enumerate()
            .map(|(n, &p)| {
                (0..=max_added)
                    .map(|k| {
                        if gain == 1.0 {
                            return if k == 0 { p } else { 0.0 };
                        }
                        let ln = ln_binomial(n + k, k) + k as f64 * x.ln() - (n as f64 + 1.0) * gain.ln();
                        p * ln.exp()
                    })
                    .collect()
            })
            .collect();
        Self { source, branches }
    }

    /// Probability lost to the `max_added` truncation.
    pub fn leaked(&self) -> f64 {
        1.0 - self.branches.iter().flatten().sum::<f64>()
    }

    pub fn mutual_information_bits(&self) -> f64 {
        let k_max = self.branches[0].len();
        let joint = (0..k_max).map(|k| self.branches.iter().map(|b| b[k]).sum::<f64>());
        let mut amplified = vec![0.0; self.branches.len() + k_max];
        for (n, row) in self.branches.iter().enumerate() {
            for (k, &p) in row.iter().enumerate() {
                amplified[n + k] += p;
            }
        }
        shannon_bits(self.source.iter().copied()) + shannon_bits(amplified) - shannon_bits(joint)
    }

    /// `⟨n⟩` of the amplified beam.
    pub fn amplified_mean_photons(&self) -> f64 {
        self.branches
            .iter()
            .enumerate()
            .flat_map(|(n, row)| row.iter().enumerate().map(move |(k, &p)| (n + k) as f64 * p))
            .sum()
    }
}
