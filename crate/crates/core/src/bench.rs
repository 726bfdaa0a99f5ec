//! Synthetic pose graphs, the five-node counterexample, graph edits used in
//! the experiments, and the Monte Carlo harness.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::Vector2;
use rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::{certify_matrix, DualOptions};
use crate::error::{Error, Result};
use crate::graph::{PoseAssignment, PoseGraph, RelativeMeasurement};
use crate::matrices::build_complex_matrix;
use crate::nullspace::eigenvector_heuristic;
use crate::pose::Pose2D;
use crate::refine::{gauss_newton, rotation_first_init, RefineOptions};
use crate::relaxation::{rank_one_extract, solve_sdp_relaxation, RelaxationOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n: usize,
    pub pc: f64,
    pub sigma_delta: f64,
    pub sigma_r: f64,
    pub rotation_uniform: bool,
    pub translation_uniform: bool,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n: 10,
            pc: 0.1,
            sigma_delta: 0.1,
            sigma_r: 0.1,
            rotation_uniform: false,
            translation_uniform: false,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be at least 2, got {}", self.n)));
        }
        if !(0.0..=1.0).contains(&self.pc) {
            return Err(Error::InvalidConfig(format!("pc must lie in [0, 1], got {}", self.pc)));
        }
        for (name, v) in [("sigma_delta", self.sigma_delta), ("sigma_r", self.sigma_r)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Seeded stream of uniforms and Gaussians on top of ChaCha8. The seed is
/// written little-endian into the first 8 key bytes.
pub struct SampleStream {
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        Self {
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Uniform on `[0, 1)` from the top 53 bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform angle on `(−π, π]`.
    pub fn angle(&mut self) -> f64 {
        PI - 2.0 * PI * self.uniform()
    }

    /// Standard normal by Box-Muller (cosine branch, two uniforms per draw).
    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

/// Random pose graph with ground truth.
///
/// Draw order: `n` positions on `[0, 10]²` (x then y), `n` angles, one
/// Bernoulli draw per pair `(i, j)`, `j > i + 1`, in lexicographic order, then
/// per edge two translation noise draws and one rotation noise draw.
/// Odometry edges `(i, i+1)` come first, loop closures after.
pub fn generate_random_graph(config: &GeneratorConfig) -> Result<(PoseGraph, PoseAssignment)> {
    config.validate()?;
    let n = config.n;
    let mut rng = SampleStream::new(config.seed);
    let positions: Vec<Vector2<f64>> = (0..n)
        .map(|_| {
            let x = rng.uniform_in(0.0, 10.0);
            let y = rng.uniform_in(0.0, 10.0);
            Vector2::new(x, y)
        })
        .collect();
    let truth: Vec<Pose2D> = positions.iter().map(|p| Pose2D::from_parts(*p, rng.angle())).collect();

    let mut pairs: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    for i in 0..n {
        for j in i + 2..n {
            if rng.uniform() < config.pc {
                pairs.push((i, j));
            }
        }
    }

    let edges = pairs
        .into_iter()
        .map(|(i, j)| {
            let (ti, tj) = (&truth[i], &truth[j]);
            let mut delta = ti.rotation_matrix().transpose() * (tj.position - ti.position);
            let noise = if config.translation_uniform {
                Vector2::new(rng.uniform_in(-5.0, 5.0), rng.uniform_in(-5.0, 5.0))
            } else {
                let a = rng.gaussian();
                let b = rng.gaussian();
                Vector2::new(a, b) * config.sigma_delta
            };
            delta += noise;
            let eps = if config.rotation_uniform {
                rng.angle()
            } else {
                config.sigma_r * rng.gaussian()
            };
            RelativeMeasurement::new(i, j, delta.x, delta.y, tj.angle() - ti.angle() + eps)
        })
        .collect();
    Ok((PoseGraph::new(n, edges)?, PoseAssignment(truth)))
}

/// The five-node single-loop graph on which the zero eigenvalue of the
/// penalized matrix is double. Nodes are 0-based (file labels 1..5).
pub fn counterexample_fixture() -> (PoseGraph, PoseAssignment) {
    let truth = PoseAssignment(vec![
        Pose2D::new(0.0, -5.0, 0.2451),
        Pose2D::new(4.7553, -1.5451, -0.4496),
        Pose2D::new(2.9389, 4.0451, 0.7361),
        Pose2D::new(-2.9389, 4.0451, 0.3699),
        Pose2D::new(-4.7553, -1.5451, -1.7225),
    ]);
    let edges = vec![
        RelativeMeasurement::new(0, 1, 4.6606, 1.2177, 2.8186),
        RelativeMeasurement::new(1, 2, -4.4199, 4.8043, 0.1519),
        RelativeMeasurement::new(2, 3, -4.1169, 4.9322, 0.5638),
        RelativeMeasurement::new(3, 4, -3.6351, -5.0908, -0.5855),
        RelativeMeasurement::new(4, 0, 3.4744, 5.9425, 2.5775),
    ];
    (PoseGraph::new(5, edges).expect("fixture is a valid graph"), truth)
}

/// Removes node `k` (two incident edges to distinct neighbors `a`, `b`) and
/// joins `a → b` with the composition of the two measurements. The new edge
/// takes the slot of the edge entering `k` (or the first incident edge);
/// nodes above `k` shift down by one.
pub fn remove_node_compose(graph: &PoseGraph, k: usize) -> Result<PoseGraph> {
    let n = graph.node_count();
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, node_count: n });
    }
    let incident = graph.incident_edges(k);
    if incident.len() != 2 || n < 3 {
        return Err(Error::NotAChainNode { node: k });
    }
    let edges = graph.edges();
    let (first, second) = if edges[incident[0]].head != k && edges[incident[1]].head == k {
        (incident[1], incident[0])
    } else {
        (incident[0], incident[1])
    };
    let (e1, e2) = (&edges[first], &edges[second]);
    let a = e1.other_end(k);
    let b = e2.other_end(k);
    if a == b {
        return Err(Error::NotAChainNode { node: k });
    }
    // T_a⁻¹ T_k and T_k⁻¹ T_b.
    let a_to_k = if e1.head == k { e1.as_pose() } else { e1.as_pose().inverse() };
    let k_to_b = if e2.tail == k { e2.as_pose() } else { e2.as_pose().inverse() };
    let joined = RelativeMeasurement::from_pose(a, b, &a_to_k.compose(&k_to_b));

    let shift = |v: usize| if v > k { v - 1 } else { v };
    let new_edges = edges
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != second)
        .map(|(i, e)| {
            let e = if i == first { joined } else { *e };
            RelativeMeasurement::new(shift(e.tail), shift(e.head), e.delta.x, e.delta.y, e.angle())
        })
        .collect();
    PoseGraph::new(n - 1, new_edges)
}

/// Multiplies every translation measurement by `s`.
pub fn scale_translations(graph: &PoseGraph, s: f64) -> Result<PoseGraph> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::NonPositiveScale(s));
    }
    let edges = graph
        .edges()
        .iter()
        .map(|e| RelativeMeasurement::new(e.tail, e.head, s * e.delta.x, s * e.delta.y, e.angle()))
        .collect();
    PoseGraph::new(graph.node_count(), edges)
}

/// Baselines run next to the certifier in every Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSet {
    /// Null-space estimate (the certifier's own fallback; its optimum under SZEP).
    pub ns: bool,
    pub eig: bool,
    pub sdp: bool,
    /// Gauss-Newton from the ground truth.
    pub gn: bool,
    /// Rotation-first initialization followed by Gauss-Newton.
    pub eigr: bool,
}

impl Default for SolverSet {
    fn default() -> Self {
        Self {
            ns: true,
            eig: true,
            sdp: false,
            gn: true,
            eigr: false,
        }
    }
}

impl SolverSet {
    pub fn all() -> Self {
        Self {
            ns: true,
            eig: true,
            sdp: true,
            gn: true,
            eigr: true,
        }
    }

    pub fn none() -> Self {
        Self {
            ns: false,
            eig: false,
            sdp: false,
            gn: false,
            eigr: false,
        }
    }

    /// Parses a comma-separated list such as `ns,eig,gn`.
    pub fn parse_list(list: &str) -> Result<Self> {
        let mut set = Self::none();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "ns" => set.ns = true,
                "eig" => set.eig = true,
                "sdp" => set.sdp = true,
                "gn" => set.gn = true,
                "eigr" => set.eigr = true,
                "all" => set = Self::all(),
                other => return Err(Error::InvalidConfig(format!("unknown solver `{other}`"))),
            }
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub generator: GeneratorConfig,
    pub runs: usize,
    pub solvers: SolverSet,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    pub dual: DualOptions,
    pub relaxation: RelaxationOptions,
    pub refine: RefineOptions,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            runs: 10,
            solvers: SolverSet::default(),
            threads: None,
            dual: DualOptions::default(),
            relaxation: RelaxationOptions::default(),
            refine: RefineOptions::default(),
        }
    }
}

/// One Monte Carlo run. Costs are `None` when the solver was not requested
/// or failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub edges: usize,
    pub szep: bool,
    pub zero_count: Option<usize>,
    pub optimal: bool,
    pub dual_value: Option<f64>,
    pub primal_value: Option<f64>,
    pub gap: Option<f64>,
    pub ns_cost: Option<f64>,
    pub eig_cost: Option<f64>,
    pub sdp_value: Option<f64>,
    pub sdp_cost: Option<f64>,
    pub gn_cost: Option<f64>,
    pub eigr_cost: Option<f64>,
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub runs: usize,
    pub szep_fraction: f64,
    pub failures: usize,
    pub config: GeneratorConfig,
    pub records: Vec<RunRecord>,
}

impl MonteCarloReport {
    /// Drops the wall-clock timings, the only non-deterministic fields.
    pub fn without_timings(mut self) -> Self {
        for r in &mut self.records {
            r.runtime_ms = None;
        }
        self
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    /// One header row, then one row per run.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            writer.serialize(r).map_err(|e| Error::Internal(e.to_string()))?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }
}

/// Median of the present values.
pub fn median(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().flatten().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

fn run_once(config: &MonteCarloConfig, run: usize) -> RunRecord {
    let seed = config.generator.seed.wrapping_add(run as u64);
    let start = Instant::now();
    let mut record = RunRecord {
        run,
        seed,
        edges: 0,
        szep: false,
        zero_count: None,
        optimal: false,
        dual_value: None,
        primal_value: None,
        gap: None,
        ns_cost: None,
        eig_cost: None,
        sdp_value: None,
        sdp_cost: None,
        gn_cost: None,
        eigr_cost: None,
        error: None,
        runtime_ms: None,
    };
    if let Err(e) = fill_record(config, seed, &mut record) {
        record.error = Some(e.to_string());
    }
    record.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    record
}

fn fill_record(config: &MonteCarloConfig, seed: u64, record: &mut RunRecord) -> Result<()> {
    let s = config.solvers;
    let (graph, truth) = generate_random_graph(&config.generator.with_seed(seed))?;
    record.edges = graph.edge_count();
    let w = build_complex_matrix(&graph)?;
    let cert = certify_matrix(&w, &config.dual)?;
    record.szep = cert.szep;
    record.zero_count = Some(cert.zero_count);
    record.optimal = cert.status == crate::dual::Status::Optimal;
    record.dual_value = Some(cert.dual_value);
    record.primal_value = Some(cert.primal_value);
    record.gap = Some(cert.gap);
    let n = graph.node_count();
    if s.ns {
        record.ns_cost = Some(cert.primal_value);
    }
    if s.eig {
        let est = eigenvector_heuristic(&cert.dual.penalized_spectrum, n)?;
        record.eig_cost = Some(w.quadratic_form(&est.stacked()));
    }
    if s.sdp {
        let sol = solve_sdp_relaxation(&w, &config.relaxation)?;
        record.sdp_value = Some(sol.value);
        let (est, _) = rank_one_extract(&sol, config.relaxation.rank_tol)?;
        record.sdp_cost = Some(w.quadratic_form(&est.stacked()));
    }
    if s.gn {
        record.gn_cost = Some(gauss_newton(&graph, &truth, &config.refine)?.final_cost);
    }
    if s.eigr {
        let init = rotation_first_init(&graph)?;
        record.eigr_cost = Some(gauss_newton(&graph, &init.poses, &config.refine)?.final_cost);
    }
    Ok(())
}

/// Runs `config.runs` independent trials with seeds `seed + run`. Records are
/// returned in run order whatever the scheduling.
pub fn monte_carlo(config: &MonteCarloConfig) -> Result<MonteCarloReport> {
    if config.runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    config.generator.validate()?;
    let work = || -> Vec<RunRecord> { (0..config.runs).into_par_iter().map(|r| run_once(config, r)).collect() };
    let records = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?
            .install(work),
        None => work(),
    };
    let szep = records.iter().filter(|r| r.szep).count();
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    Ok(MonteCarloReport {
        runs: config.runs,
        szep_fraction: szep as f64 / config.runs as f64,
        failures,
        config: config.generator,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::{certify, Szep};
    use crate::graph::{evaluate_cost, is_balanced, DEFAULT_BALANCE_TOL};
    use crate::spectral::hermitian_eigen;

    fn config(n: usize, pc: f64, sigma: f64, seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            n,
            pc,
            sigma_delta: sigma,
            sigma_r: sigma,
            seed,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn stream_is_reproducible_and_in_range() {
        let mut a = SampleStream::new(42);
        let mut b = SampleStream::new(42);
        let mut c = SampleStream::new(43);
        let xs: Vec<f64> = (0..100).map(|_| a.uniform()).collect();
        let ys: Vec<f64> = (0..100).map(|_| b.uniform()).collect();
        let zs: Vec<f64> = (0..100).map(|_| c.uniform()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
        assert!(xs.iter().all(|x| (0.0..1.0).contains(x)));
        let mut s = SampleStream::new(1);
        for _ in 0..1000 {
            let t = s.angle();
            assert!(t > -PI && t <= PI);
        }
    }

    #[test]
    fn gaussian_moments() {
        let mut s = SampleStream::new(5);
        let draws: Vec<f64> = (0..200_000).map(|_| s.gaussian()).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn zero_noise_graphs_are_balanced_with_one_zero() {
        for seed in 0..5 {
            let (g, truth) = generate_random_graph(&config(12, 0.3, 0.0, seed)).unwrap();
            assert!(is_balanced(&g, DEFAULT_BALANCE_TOL).balanced);
            let cost = evaluate_cost(&g, &truth).unwrap();
            let scale: f64 = g.edges().iter().map(|e| 1.0 + e.delta.norm_squared()).sum();
            assert!(cost <= 1e-18 * scale, "{cost}");
            let spec = hermitian_eigen(&build_complex_matrix(&g).unwrap().entries).unwrap();
            assert_eq!(spec.zero_count, 1);
            // Rij = RiᵀRj at zero noise.
            for e in g.edges() {
                let expected = truth.0[e.tail].rotation_matrix().transpose() * truth.0[e.head].rotation_matrix();
                assert!((e.rotation() - expected).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn no_loop_closures_gives_a_path_tree() {
        let (g, _) = generate_random_graph(&config(15, 0.0, 0.1, 3)).unwrap();
        assert!(g.is_tree());
        assert_eq!(g.edge_count(), 14);
        assert!(g.edges().iter().enumerate().all(|(i, e)| e.tail == i && e.head == i + 1));
    }

    #[test]
    fn generation_is_deterministic() {
        let c = config(10, 0.3, 0.2, 77);
        let a = generate_random_graph(&c).unwrap();
        let b = generate_random_graph(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a.0).unwrap(), serde_json::to_string(&b.0).unwrap());
        assert!(generate_random_graph(&GeneratorConfig { n: 1, ..c }).is_err());
        assert!(generate_random_graph(&GeneratorConfig { pc: 1.5, ..c }).is_err());
        assert!(generate_random_graph(&GeneratorConfig { sigma_r: -1.0, ..c }).is_err());
    }

    #[test]
    fn uniform_noise_flags() {
        let c = GeneratorConfig {
            rotation_uniform: true,
            translation_uniform: true,
            ..config(10, 0.2, 0.0, 8)
        };
        let (g, _) = generate_random_graph(&c).unwrap();
        assert!(!is_balanced(&g, DEFAULT_BALANCE_TOL).balanced);
    }

    #[test]
    fn fixture_is_connected_and_unbalanced() {
        let (g, truth) = counterexample_fixture();
        assert_eq!((g.node_count(), g.edge_count()), (5, 5));
        let b = is_balanced(&g, DEFAULT_BALANCE_TOL);
        assert!(!b.balanced && b.residual > 1e-3);
        assert_eq!(truth.len(), 5);
    }

    #[test]
    fn removal_patterns() {
        let (g, _) = counterexample_fixture();
        let expected = [Szep::Single, Szep::Single, Szep::Multiple(2), Szep::Single, Szep::Single];
        for (k, want) in expected.iter().enumerate() {
            let h = remove_node_compose(&g, k).unwrap();
            assert_eq!((h.node_count(), h.edge_count()), (4, 4));
            let cert = certify(&h, &DualOptions::default()).unwrap();
            let got = if cert.szep { Szep::Single } else { Szep::Multiple(cert.zero_count) };
            assert_eq!(got, *want, "removing label {}", k + 1);
        }
    }

    #[test]
    fn removal_preserves_cycle_residual() {
        let (g, _) = counterexample_fixture();
        let cycle = |g: &PoseGraph| {
            // Compose around the single cycle starting from node 0.
            let n = g.node_count();
            let mut pose = Pose2D::identity();
            let mut node = 0;
            let mut used = vec![false; g.edge_count()];
            for _ in 0..n {
                let (k, e) = g
                    .edges()
                    .iter()
                    .enumerate()
                    .find(|(k, e)| !used[*k] && (e.tail == node || e.head == node))
                    .unwrap();
                used[k] = true;
                pose = if e.tail == node {
                    pose.compose(&e.as_pose())
                } else {
                    pose.compose(&e.as_pose().inverse())
                };
                node = e.other_end(node);
            }
            assert_eq!(node, 0);
            pose
        };
        let original = cycle(&g);
        for k in 1..5 {
            let h = remove_node_compose(&g, k).unwrap();
            let r = cycle(&h);
            assert!((r.position - original.position).norm() < 1e-12);
            assert!(crate::pose::wrap_angle(r.angle() - original.angle()).abs() < 1e-12);
        }
    }

    #[test]
    fn removal_rejects_non_chain_nodes() {
        let (g, _) = generate_random_graph(&config(6, 1.0, 0.1, 1)).unwrap();
        assert!(matches!(remove_node_compose(&g, 0), Err(Error::NotAChainNode { node: 0 })));
        let (g, _) = counterexample_fixture();
        assert!(remove_node_compose(&g, 9).is_err());
    }

    #[test]
    fn scaling() {
        let (g, _) = counterexample_fixture();
        assert_eq!(scale_translations(&g, 1.0).unwrap(), g);
        assert_eq!(scale_translations(&g, 0.0), Err(Error::NonPositiveScale(0.0)));
        assert!(scale_translations(&g, -1.0).is_err());
        let h = scale_translations(&g, 0.4).unwrap();
        assert!(certify(&h, &DualOptions::default()).unwrap().szep);
        assert!(!certify(&g, &DualOptions::default()).unwrap().szep);
    }

    #[test]
    fn monte_carlo_is_reproducible_and_ordered() {
        let mc = MonteCarloConfig {
            generator: config(8, 0.2, 0.1, 11),
            runs: 6,
            solvers: SolverSet::all(),
            threads: Some(3),
            ..MonteCarloConfig::default()
        };
        let a = monte_carlo(&mc).unwrap().without_timings();
        let b = monte_carlo(&MonteCarloConfig { threads: Some(1), ..mc.clone() }).unwrap().without_timings();
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert!(a.records.iter().enumerate().all(|(i, r)| r.run == i && r.seed == 11 + i as u64));
        assert_eq!(a.szep_fraction, 1.0);
        for r in &a.records {
            let d = r.dual_value.unwrap();
            assert!(r.gap.unwrap() >= -1e-6 * (1.0 + d.abs()));
            assert!(r.error.is_none());
        }
        let csv = a.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.starts_with("run,seed,edges,szep"));
        assert!(monte_carlo(&MonteCarloConfig { runs: 0, ..mc }).is_err());
    }

    #[test]
    fn solver_list_parsing() {
        let s = SolverSet::parse_list("ns, gn").unwrap();
        assert!(s.ns && s.gn && !s.eig && !s.sdp && !s.eigr);
        assert_eq!(SolverSet::parse_list("all").unwrap(), SolverSet::all());
        assert!(SolverSet::parse_list("foo").is_err());
    }

    #[test]
    fn median_examples() {
        assert_eq!(median([Some(3.0), None, Some(1.0), Some(2.0)]), Some(2.0));
        assert_eq!(median([Some(1.0), Some(2.0)]), Some(1.5));
        assert_eq!(median([None]), None);
    }
}
