//! Pixel MSE blended with an edge-map MSE: `μ·l_mse + (1−μ)·l_edge`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::edge::{edge_map, edge_operator, CannyConfig, EdgeMode, SoftEdgeConfig};
use crate::tensor::mean_sq;
use crate::{Error, Plane, Real, Result, Tensor};

/// Range of μ accepted for training unless explicitly overridden.
pub const MU_RANGE: (f64, f64) = (0.8, 0.99);
pub const DEFAULT_MU: f64 = 0.85;
pub const DEFAULT_MU_GRID: [f64; 7] = [0.80, 0.84, 0.85, 0.86, 0.90, 0.95, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeLossMode {
    Soft,
    HardSt,
    /// No edge term; `l_edge` is reported as 0.
    Off,
}

impl EdgeLossMode {
    fn edge_mode(self) -> Option<EdgeMode> {
        match self {
            EdgeLossMode::Soft => Some(EdgeMode::Soft),
            EdgeLossMode::HardSt => Some(EdgeMode::HardSt),
            EdgeLossMode::Off => None,
        }
    }
}

impl fmt::Display for EdgeLossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeLossMode::Soft => "soft",
            EdgeLossMode::HardSt => "hard-st",
            EdgeLossMode::Off => "off",
        })
    }
}

impl FromStr for EdgeLossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(EdgeLossMode::Soft),
            "hard-st" => Ok(EdgeLossMode::HardSt),
            "off" => Ok(EdgeLossMode::Off),
            other => Err(Error::InvalidConfig(format!("unknown edge mode `{other}` (soft, hard-st, off)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub mu: f64,
    pub edge_mode: EdgeLossMode,
    /// Multiplies both edge maps before differencing (1 for {0,1} maps, 255 for {0,255}).
    pub edge_scale: f64,
    pub canny: CannyConfig,
    pub soft: SoftEdgeConfig,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            mu: DEFAULT_MU,
            edge_mode: EdgeLossMode::Soft,
            edge_scale: 1.0,
            canny: CannyConfig::default(),
            soft: SoftEdgeConfig::default(),
        }
    }
}

impl LossConfig {
    /// Plain MSE training. The edge term is still measured for logging.
    pub fn mse() -> Self {
        Self { mu: 1.0, ..Self::default() }
    }

    pub fn with_mu(mu: f64) -> Self {
        Self { mu, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::InvalidConfig(format!("mu {} outside [0, 1]", self.mu)));
        }
        if !(self.edge_scale.is_finite() && self.edge_scale > 0.0) {
            return Err(Error::InvalidConfig(format!("edge scale {} must be positive", self.edge_scale)));
        }
        self.canny.validate()?;
        self.soft.validate()
    }

    /// Like [`validate`](Self::validate), additionally enforcing the training
    /// range for μ. μ = 1 (pure MSE) is always accepted.
    pub fn validate_training(&self, unsafe_mu: bool) -> Result<()> {
        self.validate()?;
        check_mu_range(self.mu, unsafe_mu)
    }

    fn edge_active(&self) -> bool {
        self.edge_mode != EdgeLossMode::Off
    }
}

fn check_mu_range(mu: f64, unsafe_mu: bool) -> Result<()> {
    if unsafe_mu || mu == 1.0 || (MU_RANGE.0..=MU_RANGE.1).contains(&mu) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "mu {mu} outside [{}, {}] (pass --unsafe-mu to allow)",
            MU_RANGE.0, MU_RANGE.1
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub l_mse: f64,
    pub l_edge: f64,
    pub combined: f64,
}

impl LossBreakdown {
    pub fn new(mu: f64, l_mse: f64, l_edge: f64) -> Self {
        Self { l_mse, l_edge, combined: combine(mu, l_mse, l_edge) }
    }

    pub fn is_valid(&self) -> bool {
        [self.l_mse, self.l_edge, self.combined].iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

pub fn combine(mu: f64, l_mse: f64, l_edge: f64) -> f64 {
    mu * l_mse + (1.0 - mu) * l_edge
}

fn batch_dims<T: Real>(output: &Tensor<T>, target: &Tensor<T>) -> Result<(usize, usize, usize)> {
    if output.shape() != target.shape() {
        return Err(Error::ShapeMismatch { left: output.shape().to_vec(), right: target.shape().to_vec() });
    }
    match output.shape() {
        [b, 1, h, w] => Ok((*b, *h, *w)),
        s => Err(Error::InvalidShape { shape: s.to_vec(), reason: "expected B×1×H×W" }),
    }
}

fn sample<T: Real>(t: &Tensor<T>, i: usize, h: usize, w: usize) -> Plane<T> {
    Plane::new(w, h, t.data()[i * h * w..(i + 1) * h * w].to_vec()).expect("slice matches dims")
}

/// Loss values and the gradient with respect to `output`. The target's edge
/// map is treated as a constant.
pub fn msce_loss<T: Real>(output: &Tensor<T>, target: &Tensor<T>, cfg: &LossConfig) -> Result<(LossBreakdown, Tensor<T>)> {
    let (b, h, w) = batch_dims(output, target)?;
    let count = (b * h * w) as f64;
    let mu = cfg.mu;
    let l_mse = mean_sq(output, target)?;

    let mse_coef = mu * 2.0 / count;
    let mut grad: Vec<T> = output
        .data()
        .iter()
        .zip(target.data())
        .map(|(&o, &t)| T::of(mse_coef * (o.as_f64() - t.as_f64())))
        .collect();

    let mut edge_sq = 0.0f64;
    if let Some(mode) = cfg.edge_mode.edge_mode() {
        let s = cfg.edge_scale;
        let need_grad = mu < 1.0;
        for i in 0..b {
            let o = sample(output, i, h, w);
            let t = sample(target, i, h, w);
            let target_edges = edge_map(&t, mode, &cfg.canny, &cfg.soft)?;
            let (out_edges, back) = edge_operator(&o, mode, &cfg.canny, &cfg.soft)?;
            let mut upstream = Vec::with_capacity(h * w);
            for (&eo, &et) in out_edges.data().iter().zip(target_edges.data()) {
                let d = s * (eo.as_f64() - et.as_f64());
                edge_sq += d * d;
                upstream.push(T::of((1.0 - mu) * 2.0 * s * d / count));
            }
            if need_grad {
                let g = back.backward(&Plane::new(w, h, upstream)?)?;
                for (dst, &v) in grad[i * h * w..(i + 1) * h * w].iter_mut().zip(g.data()) {
                    *dst += v;
                }
            }
        }
    }
    let l_edge = edge_sq / count;
    Ok((LossBreakdown::new(mu, l_mse, l_edge), Tensor::new(output.shape(), grad)?))
}

/// Loss values only; used for validation.
pub fn msce_breakdown<T: Real>(output: &Tensor<T>, target: &Tensor<T>, cfg: &LossConfig) -> Result<LossBreakdown> {
    let (b, h, w) = batch_dims(output, target)?;
    let l_mse = mean_sq(output, target)?;
    let mut edge_sq = 0.0f64;
    if let Some(mode) = cfg.edge_mode.edge_mode() {
        for i in 0..b {
            let eo = edge_map(&sample(output, i, h, w), mode, &cfg.canny, &cfg.soft)?;
            let et = edge_map(&sample(target, i, h, w), mode, &cfg.canny, &cfg.soft)?;
            for (&a, &c) in eo.data().iter().zip(et.data()) {
                let d = cfg.edge_scale * (a.as_f64() - c.as_f64());
                edge_sq += d * d;
            }
        }
    }
    debug_assert!(cfg.edge_active() || edge_sq == 0.0);
    Ok(LossBreakdown::new(cfg.mu, l_mse, edge_sq / (b * h * w) as f64))
}

/// Strictly increasing μ values for dynamic selection.
#[derive(Debug, Clone, PartialEq)]
pub struct MuCandidates(Vec<f64>);

impl MuCandidates {
    pub fn new(values: Vec<f64>, unsafe_mu: bool) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        for &v in &values {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("mu candidate {v} outside [0, 1]")));
            }
            check_mu_range(v, unsafe_mu)?;
        }
        if values.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidConfig(String::from("mu candidates must be strictly increasing")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parse a comma-separated list such as `0.84,0.85,0.86`.
    pub fn parse(s: &str, unsafe_mu: bool) -> Result<Self> {
        let values = s
            .split(',')
            .map(|p| p.trim())
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<f64>().map_err(|_| Error::InvalidConfig(format!("bad mu candidate `{p}`"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(values, unsafe_mu)
    }
}

impl Default for MuCandidates {
    fn default() -> Self {
        Self(DEFAULT_MU_GRID.to_vec())
    }
}

impl fmt::Display for MuCandidates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Index of the candidate minimizing `μᵢ·l_mseᵢ + (1−μᵢ)·l_edgeᵢ`; ties go to
/// the larger μ. Candidates with non-finite losses are skipped.
pub fn select_mu(per_candidate: &[(f64, LossBreakdown)]) -> Result<usize> {
    if per_candidate.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, (mu, b)) in per_candidate.iter().enumerate() {
        let c = combine(*mu, b.l_mse, b.l_edge);
        if !c.is_finite() {
            continue;
        }
        let better = match best {
            None => true,
            Some((j, bc)) => c < bc || (c == bc && *mu > per_candidate[j].0),
        };
        if better {
            best = Some((i, c));
        }
    }
    best.map(|(i, _)| i).ok_or_else(|| {
        Error::Divergence(format!(
            "all {} candidates produced non-finite losses: {:?}",
            per_candidate.len(),
            per_candidate.iter().map(|(m, _)| *m).collect::<Vec<_>>()
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::testutil::{assert_grad_close, random_tensor};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn pair(seed: u64, b: usize, n: usize) -> (Tensor<f64>, Tensor<f64>) {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let o = random_tensor(&[b, 1, n, n], &mut rng).map(|v| 0.5 + 0.5 * v);
        let t = random_tensor(&[b, 1, n, n], &mut rng).map(|v| 0.5 + 0.5 * v);
        (o, t)
    }

    #[test]
    fn mu_one_collapses_to_mse() {
        let (o, t) = pair(1, 2, 8);
        let (b, g) = msce_loss(&o, &t, &LossConfig::mse()).unwrap();
        assert_eq!(b.combined, b.l_mse);
        assert!(b.l_edge > 0.0);
        let n = o.len() as f64;
        for ((gv, ov), tv) in g.data().iter().zip(o.data()).zip(t.data()) {
            assert!((*gv - 2.0 * (ov - tv) / n).abs() <= 1e-16);
        }
    }

    #[test]
    fn identical_pair_is_zero() {
        let (o, _) = pair(2, 1, 8);
        let (b, g) = msce_loss(&o, &o, &LossConfig::default()).unwrap();
        assert_eq!((b.l_mse, b.l_edge, b.combined), (0.0, 0.0, 0.0));
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn combination_arithmetic() {
        let b = LossBreakdown::new(0.85, 0.04, 0.20);
        assert!((b.combined - 0.064).abs() < 1e-15);
    }

    #[test]
    fn off_mode_is_scaled_mse_gradient() {
        let (o, t) = pair(3, 2, 6);
        let cfg = LossConfig { edge_mode: EdgeLossMode::Off, mu: 0.9, ..LossConfig::default() };
        let (b, g) = msce_loss(&o, &t, &cfg).unwrap();
        assert_eq!(b.l_edge, 0.0);
        let n = o.len() as f64;
        for ((gv, ov), tv) in g.data().iter().zip(o.data()).zip(t.data()) {
            assert!((*gv - 0.9 * 2.0 * (ov - tv) / n).abs() <= 1e-16);
        }
    }

    #[test]
    fn soft_gradient_matches_finite_differences() {
        for seed in 0..20 {
            let (o, t) = pair(100 + seed, 1, 8);
            let cfg = LossConfig::default();
            let (_, g) = msce_loss(&o, &t, &cfg).unwrap();
            let h = 1e-6;
            for i in 0..o.len() {
                let mut p = o.clone();
                p.data_mut()[i] += h;
                let mut m = o.clone();
                m.data_mut()[i] -= h;
                let fp = msce_breakdown(&p, &t, &cfg).unwrap().combined;
                let fm = msce_breakdown(&m, &t, &cfg).unwrap().combined;
                assert_grad_close(g.data()[i], (fp - fm) / (2.0 * h));
            }
        }
    }

    #[test]
    fn breakdown_agrees_with_loss() {
        let (o, t) = pair(4, 3, 9);
        for mode in [EdgeLossMode::Soft, EdgeLossMode::HardSt, EdgeLossMode::Off] {
            let cfg = LossConfig { edge_mode: mode, edge_scale: 2.0, ..LossConfig::default() };
            let (a, _) = msce_loss(&o, &t, &cfg).unwrap();
            assert_eq!(a, msce_breakdown(&o, &t, &cfg).unwrap());
        }
    }

    #[test]
    fn edge_scale_is_quadratic() {
        let (o, t) = pair(5, 1, 8);
        let one = msce_breakdown(&o, &t, &LossConfig::default()).unwrap();
        let big = msce_breakdown(&o, &t, &LossConfig { edge_scale: 255.0, ..LossConfig::default() }).unwrap();
        assert!((big.l_edge / one.l_edge - 255.0 * 255.0).abs() < 1e-6 * 255.0 * 255.0);
    }

    #[test]
    fn errors() {
        let (o, _) = pair(6, 1, 8);
        let (t, _) = pair(6, 1, 7);
        assert!(matches!(msce_loss(&o, &t, &LossConfig::default()), Err(Error::ShapeMismatch { .. })));
        let (small, small_t) = pair(7, 1, 2);
        assert!(matches!(msce_loss(&small, &small_t, &LossConfig::default()), Err(Error::ImageTooSmall { .. })));
        let off = LossConfig { edge_mode: EdgeLossMode::Off, ..LossConfig::default() };
        assert!(msce_loss(&small, &small_t, &off).is_ok());
    }

    #[test]
    fn training_mu_range() {
        assert!(LossConfig::with_mu(0.85).validate_training(false).is_ok());
        assert!(LossConfig::with_mu(1.0).validate_training(false).is_ok());
        assert!(LossConfig::with_mu(0.5).validate_training(false).is_err());
        assert!(LossConfig::with_mu(0.5).validate_training(true).is_ok());
        assert!(LossConfig::with_mu(1.5).validate_training(true).is_err());
    }

    #[test]
    fn candidates() {
        assert_eq!(MuCandidates::default().values(), &DEFAULT_MU_GRID);
        assert_eq!(MuCandidates::parse("0.84, 0.85,0.86", false).unwrap().len(), 3);
        assert!(MuCandidates::parse("0.85,0.84", false).is_err());
        assert!(MuCandidates::parse("0.85,0.85", false).is_err());
        assert!(MuCandidates::parse("0.7,0.85", false).is_err());
        assert!(MuCandidates::parse("", false).is_err());
    }

    #[test]
    fn select_examples() {
        let one = [(0.85, LossBreakdown::new(0.85, 0.3, 0.3))];
        assert_eq!(select_mu(&one).unwrap(), 0);
        let two = [
            (0.85, LossBreakdown::new(0.85, 0.01, 0.10)),
            (0.90, LossBreakdown::new(0.90, 0.02, 0.02)),
        ];
        assert_eq!(select_mu(&two).unwrap(), 1);
        let tie = [(0.84, LossBreakdown::new(0.84, 0.5, 0.5)), (0.86, LossBreakdown::new(0.86, 0.5, 0.5))];
        assert_eq!(select_mu(&tie).unwrap(), 1);
        assert!(matches!(select_mu(&[]), Err(Error::EmptyCandidates)));
        let nan = [(0.85, LossBreakdown::new(0.85, f64::NAN, 0.1)), (0.9, LossBreakdown::new(0.9, 0.1, 0.1))];
        assert_eq!(select_mu(&nan).unwrap(), 1);
        assert!(matches!(select_mu(&nan[..1]), Err(Error::Divergence(_))));
    }

    proptest! {
        #[test]
        fn combined_is_convex(mu in 0.0f64..=1.0, a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let c = combine(mu, a, b);
            prop_assert!(c >= a.min(b) - 1e-12 && c <= a.max(b) + 1e-12);
        }

        #[test]
        fn selection_is_permutation_invariant(
            ls in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..6),
            rot in 0usize..6,
        ) {
            let grid = [0.80, 0.84, 0.85, 0.86, 0.90, 0.95];
            let cands: Vec<(f64, LossBreakdown)> =
                ls.iter().enumerate().map(|(i, &(m, e))| (grid[i], LossBreakdown::new(grid[i], m, e))).collect();
            let chosen = cands[select_mu(&cands).unwrap()].0;
            let mut shuffled = cands.clone();
            shuffled.rotate_left(rot % cands.len());
            shuffled.reverse();
            prop_assert_eq!(shuffled[select_mu(&shuffled).unwrap()].0, chosen);
        }
    }
}
