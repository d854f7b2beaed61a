//! Random dataset specs and a nested-loop enumerator for their expansion.

use rand::Rng;
use serde_json::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum FuzzLevels {
    Fixed(i64),
    All(Vec<i64>),
    Random(Vec<i64>),
    IntRange(i64, i64),
    RealRange(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzVar {
    pub path: String,
    pub levels: FuzzLevels,
    pub n_images: u32,
    /// Randomization percentage, when the variable is randomized.
    pub randomize: Option<f64>,
    /// Spell the variate type with its alias.
    pub alias: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzSpec {
    pub seed: u64,
    pub replicates: u32,
    pub vars: Vec<FuzzVar>,
}

fn int_list(rng: &mut impl Rng) -> Vec<i64> {
    let n = rng.random_range(1..=5);
    (0..n).map(|_| rng.random_range(1..=30)).collect()
}

pub fn fuzz_spec(rng: &mut impl Rng) -> FuzzSpec {
    let n_vars = rng.random_range(0..=4);
    let vars = (0..n_vars)
        .map(|i| {
            let levels = match rng.random_range(0..5) {
                0 => FuzzLevels::Fixed(rng.random_range(1..=30)),
                1 => FuzzLevels::All(int_list(rng)),
                2 => FuzzLevels::Random(int_list(rng)),
                3 => {
                    let a = rng.random_range(-5..=10);
                    FuzzLevels::IntRange(a, a + rng.random_range(0..=5))
                }
                _ => {
                    let a = rng.random_range(0.0..5.0);
                    FuzzLevels::RealRange(a, a + rng.random_range(0.0..3.0))
                }
            };
            let randomize = match levels {
                FuzzLevels::Fixed(_) | FuzzLevels::All(_) if rng.random_bool(0.3) => Some(rng.random_range(0.0..=0.5)),
                _ => None,
            };
            FuzzVar { path: format!("var_{i}"), levels, n_images: rng.random_range(1..=4), randomize, alias: rng.random_bool(0.3) }
        })
        .collect();
    FuzzSpec { seed: rng.random(), replicates: rng.random_range(1..=3), vars }
}

fn list(v: &[i64]) -> String {
    format!("[{}]", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
}

impl FuzzSpec {
    pub fn yaml(&self) -> String {
        let mut s = format!(
            "dataset:\n  name: fuzz\n  seed: {}\n  replicates: {}\nvariables:\n",
            self.seed, self.replicates
        );
        for v in &self.vars {
            let (kind, levels) = match &v.levels {
                FuzzLevels::Fixed(x) => ("fixed", x.to_string()),
                FuzzLevels::All(xs) => ("varying_all", list(xs)),
                FuzzLevels::Random(xs) => (if v.alias { "varying_among" } else { "varying_random" }, list(xs)),
                FuzzLevels::IntRange(a, b) => {
                    (if v.alias { "varying_all_range" } else { "varying_among_range" }, format!("[{a}, {b}]"))
                }
                FuzzLevels::RealRange(a, b) => ("varying_among_range", format!("[{a:?}, {b:?}]")),
            };
            s.push_str(&format!("  {}:\n    variate_type: {kind}\n    variate_levels: {levels}\n", v.path));
            s.push_str(&format!("    n_images: {}\n", v.n_images));
            if let Some(p) = v.randomize {
                s.push_str(&format!("    randomize: true\n    randomize_percentage: {p:?}\n"));
            }
        }
        s
    }
}

/// What a single assigned value may be.
#[derive(Debug, Clone, PartialEq)]
pub enum Expect {
    Exact(i64),
    /// Integer drawn around `base` by at most `p` of it, then rounded.
    Near { base: i64, p: f64 },
    OneOf(Vec<i64>),
    Within(f64, f64),
}

impl Expect {
    pub fn admits(&self, v: &Value) -> bool {
        match self {
            Expect::Exact(x) => v.as_i64() == Some(*x),
            Expect::Near { base, p } => {
                let b = *base as f64;
                let (lo, hi) = ((b * (1.0 - p)).round(), (b * (1.0 + p)).round());
                v.as_i64().is_some_and(|x| (lo..=hi).contains(&(x as f64)))
            }
            Expect::OneOf(xs) => v.as_i64().is_some_and(|x| xs.contains(&x)),
            Expect::Within(a, b) => v.as_f64().is_some_and(|x| *a <= x && x <= *b),
        }
    }
}

fn one(v: &FuzzVar, x: i64) -> Expect {
    match v.randomize {
        Some(p) if p > 0.0 => Expect::Near { base: x, p },
        _ => Expect::Exact(x),
    }
}

fn descend(i: usize, slots: &[Vec<Expect>], reps: u64, cur: &mut Vec<Expect>, out: &mut Vec<Vec<Expect>>) {
    if i == slots.len() {
        for _ in 0..reps {
            out.push(cur.clone());
        }
        return;
    }
    for e in &slots[i] {
        cur.push(e.clone());
        descend(i + 1, slots, reps, cur, out);
        cur.pop();
    }
}

/// Every combination in order (last variable fastest), each repeated by the
/// replicate count times the largest `n_images` among `varying_all` variables.
pub fn brute_force(spec: &FuzzSpec) -> Vec<Vec<Expect>> {
    let slots: Vec<Vec<Expect>> = spec
        .vars
        .iter()
        .map(|v| match &v.levels {
            FuzzLevels::Fixed(x) => vec![one(v, *x)],
            FuzzLevels::All(xs) => xs.iter().map(|x| one(v, *x)).collect(),
            FuzzLevels::Random(xs) => (0..v.n_images).map(|_| Expect::OneOf(xs.clone())).collect(),
            FuzzLevels::IntRange(a, b) => (*a..=*b).map(Expect::Exact).collect(),
            FuzzLevels::RealRange(a, b) => (0..v.n_images).map(|_| Expect::Within(*a, *b)).collect(),
        })
        .collect();
    let per_level = spec
        .vars
        .iter()
        .filter(|v| matches!(v.levels, FuzzLevels::All(_)))
        .map(|v| u64::from(v.n_images))
        .max()
        .unwrap_or(1);
    let mut out = Vec::new();
    descend(0, &slots, per_level * u64::from(spec.replicates), &mut Vec::new(), &mut out);
    out
}
