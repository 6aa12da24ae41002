//! Flat `key = value` configuration files.
//!
//! One setting per line, `#` starts a comment (at the start of a line or
//! after whitespace), unknown keys are rejected. [`Config::to_text`] writes
//! every key in a fixed order and parses back to an equal value.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::policies::PolicyKind;
use crate::simulation::{FeedbackKind, Retrain, SeenSemantics, SimulationConfig};
use crate::synthetic::PlantedParams;

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    MovieLens { ratings: PathBuf, movies: PathBuf },
    Synthetic(PlantedParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub source: Source,
    /// Ground truth to load instead of building one.
    pub ground_truth: Option<PathBuf>,
    pub simulation: SimulationConfig,
    pub sample_users: usize,
    pub repetitions: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            source: Source::Synthetic(PlantedParams::default()),
            ground_truth: None,
            simulation: SimulationConfig::default(),
            sample_users: 100,
            repetitions: 10,
        }
    }
}

fn strip_comment(line: &str) -> &str {
    if line.trim_start().starts_with('#') {
        return "";
    }
    let bytes = line.as_bytes();
    for (k, b) in bytes.iter().enumerate() {
        if *b == b'#' && k > 0 && bytes[k - 1].is_ascii_whitespace() {
            return &line[..k];
        }
    }
    line
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("line {line}: invalid value {value:?} for {key}")))
}

fn parse_deltas(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|d| {
            d.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid delta {:?}", d.trim())))
        })
        .collect()
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut c = Config::default();
        let mut source = "synthetic".to_string();
        let mut planted = PlantedParams::default();
        let (mut ratings, mut movies) = (None, None);
        let mut policy = "exploit".to_string();
        let mut feedback = "perfect".to_string();
        let mut theta = None;
        let sim = &mut c.simulation;
        let mut seen_keys = std::collections::HashSet::new();

        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = strip_comment(raw).trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen_keys.insert(key.to_string()) {
                return Err(Error::Config(format!("line {line}: duplicate key {key}")));
            }
            match key {
                "source" => source = value.to_string(),
                "ratings" => ratings = Some(PathBuf::from(value)),
                "movies" => movies = Some(PathBuf::from(value)),
                "ground_truth" => c.ground_truth = Some(PathBuf::from(value)),
                "synthetic.users" => planted.users = parse_value(key, value, line)?,
                "synthetic.items" => planted.items = parse_value(key, value, line)?,
                "synthetic.groups" => planted.groups = parse_value(key, value, line)?,
                "synthetic.rank" => planted.rank = parse_value(key, value, line)?,
                "synthetic.home_groups" => planted.home_groups = parse_value(key, value, line)?,
                "synthetic.history" => planted.history = parse_value(key, value, line)?,
                "synthetic.niche_groups" => planted.niche_groups = parse_value(key, value, line)?,
                "synthetic.secondary_prob" => planted.secondary_prob = parse_value(key, value, line)?,
                "synthetic.noise" => planted.noise = parse_value(key, value, line)?,
                "synthetic.seed" => planted.seed = parse_value(key, value, line)?,
                "iterations" => sim.iterations = parse_value(key, value, line)?,
                "runs" => sim.runs = parse_value(key, value, line)?,
                "rec_len" => sim.policy.rec_len = parse_value(key, value, line)?,
                "policy" => policy = value.to_string(),
                "epsilon" => sim.policy.epsilon = parse_value(key, value, line)?,
                "feedback" => feedback = value.to_string(),
                "theta" => theta = Some(parse_value(key, value, line)?),
                "relevance_threshold" => sim.relevance_threshold = parse_value(key, value, line)?,
                "retrain" => {
                    sim.retrain = match value {
                        "from_scratch" => Retrain::FromScratch,
                        "warm_start" => Retrain::WarmStart,
                        _ => return Err(Error::Config(format!("line {line}: unknown retrain mode {value:?}"))),
                    }
                }
                "seen_semantics" => {
                    sim.seen_semantics = match value {
                        "displayed" => SeenSemantics::Displayed,
                        "rated" => SeenSemantics::Rated,
                        _ => return Err(Error::Config(format!("line {line}: unknown seen_semantics {value:?}"))),
                    }
                }
                "learning_rate" => sim.hyperparams.learning_rate = parse_value(key, value, line)?,
                "latent_dim" => sim.hyperparams.latent_dim = parse_value(key, value, line)?,
                "l2_coeff" => sim.hyperparams.l2_coeff = parse_value(key, value, line)?,
                "epochs" => sim.hyperparams.epochs = parse_value(key, value, line)?,
                "seed" => sim.master_seed = parse_value(key, value, line)?,
                "deltas" => sim.deltas = parse_deltas(value)?,
                "sample_users" => c.sample_users = parse_value(key, value, line)?,
                "repetitions" => c.repetitions = parse_value(key, value, line)?,
                _ => return Err(Error::Config(format!("line {line}: unknown key {key:?}"))),
            }
        }

        c.source = match source.as_str() {
            "synthetic" => Source::Synthetic(planted),
            "movielens" => Source::MovieLens {
                ratings: ratings.ok_or_else(|| Error::Config("source = movielens needs `ratings`".into()))?,
                movies: movies.ok_or_else(|| Error::Config("source = movielens needs `movies`".into()))?,
            },
            other => return Err(Error::Config(format!("unknown source {other:?}"))),
        };
        c.simulation.policy.kind = parse_policy(&policy)?;
        c.simulation.feedback.kind = parse_feedback(&feedback, theta)?;
        c.validate()?;
        Ok(c)
    }

    pub fn read(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.simulation
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        Ok(())
    }

    /// Resolve relative input paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Source::MovieLens { ratings, movies } = &mut self.source {
            fix(ratings);
            fix(movies);
        }
        if let Some(g) = &mut self.ground_truth {
            fix(g);
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let sim = &self.simulation;
        match &self.source {
            Source::MovieLens { ratings, movies } => {
                let _ = writeln!(s, "source = movielens");
                let _ = writeln!(s, "ratings = {}", ratings.display());
                let _ = writeln!(s, "movies = {}", movies.display());
            }
            Source::Synthetic(p) => {
                let _ = writeln!(s, "source = synthetic");
                let _ = writeln!(s, "synthetic.users = {}", p.users);
                let _ = writeln!(s, "synthetic.items = {}", p.items);
                let _ = writeln!(s, "synthetic.groups = {}", p.groups);
                let _ = writeln!(s, "synthetic.rank = {}", p.rank);
                let _ = writeln!(s, "synthetic.home_groups = {}", p.home_groups);
                let _ = writeln!(s, "synthetic.history = {}", p.history);
                let _ = writeln!(s, "synthetic.niche_groups = {}", p.niche_groups);
                let _ = writeln!(s, "synthetic.secondary_prob = {:?}", p.secondary_prob);
                let _ = writeln!(s, "synthetic.noise = {:?}", p.noise);
                let _ = writeln!(s, "synthetic.seed = {}", p.seed);
            }
        }
        if let Some(g) = &self.ground_truth {
            let _ = writeln!(s, "ground_truth = {}", g.display());
        }
        let _ = writeln!(s, "iterations = {}", sim.iterations);
        let _ = writeln!(s, "runs = {}", sim.runs);
        let _ = writeln!(s, "rec_len = {}", sim.policy.rec_len);
        let _ = writeln!(s, "policy = {}", policy_name(sim.policy.kind));
        let _ = writeln!(s, "epsilon = {:?}", sim.policy.epsilon);
        match sim.feedback.kind {
            FeedbackKind::Perfect => {
                let _ = writeln!(s, "feedback = perfect");
            }
            FeedbackKind::RankDependent { theta } => {
                let _ = writeln!(s, "feedback = rank_dependent");
                let _ = writeln!(s, "theta = {theta:?}");
            }
        }
        let _ = writeln!(s, "relevance_threshold = {}", sim.relevance_threshold);
        let retrain = match sim.retrain {
            Retrain::FromScratch => "from_scratch",
            Retrain::WarmStart => "warm_start",
        };
        let _ = writeln!(s, "retrain = {retrain}");
        let seen = match sim.seen_semantics {
            SeenSemantics::Displayed => "displayed",
            SeenSemantics::Rated => "rated",
        };
        let _ = writeln!(s, "seen_semantics = {seen}");
        let hp = &sim.hyperparams;
        let _ = writeln!(s, "learning_rate = {:?}", hp.learning_rate);
        let _ = writeln!(s, "latent_dim = {}", hp.latent_dim);
        let _ = writeln!(s, "l2_coeff = {:?}", hp.l2_coeff);
        let _ = writeln!(s, "epochs = {}", hp.epochs);
        let _ = writeln!(s, "seed = {}", sim.master_seed);
        let deltas: Vec<String> = sim.deltas.iter().map(|d| format!("{d:?}")).collect();
        let _ = writeln!(s, "deltas = {}", deltas.join(", "));
        let _ = writeln!(s, "sample_users = {}", self.sample_users);
        let _ = writeln!(s, "repetitions = {}", self.repetitions);
        s
    }
}

pub fn parse_policy(name: &str) -> Result<PolicyKind> {
    match name {
        "exploit" => Ok(PolicyKind::Exploit),
        "epsilon_greedy" | "epsilon-greedy" => Ok(PolicyKind::EpsilonGreedy),
        _ => Err(Error::Config(format!("unknown policy {name:?}"))),
    }
}

pub fn policy_name(kind: PolicyKind) -> &'static str {
    match kind {
        PolicyKind::Exploit => "exploit",
        PolicyKind::EpsilonGreedy => "epsilon_greedy",
    }
}

/// `theta` is required for rank-dependent feedback and ignored otherwise.
pub fn parse_feedback(name: &str, theta: Option<f64>) -> Result<FeedbackKind> {
    match name {
        "perfect" => Ok(FeedbackKind::Perfect),
        "rank_dependent" | "rank-dependent" => Ok(FeedbackKind::RankDependent {
            theta: theta.ok_or_else(|| Error::Config("feedback = rank_dependent needs `theta`".into()))?,
        }),
        _ => Err(Error::Config(format!("unknown feedback model {name:?}"))),
    }
}

/// Settings that can also be given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub iterations: Option<usize>,
    pub epsilon: Option<f64>,
    pub policy: Option<String>,
    pub feedback: Option<String>,
    pub theta: Option<f64>,
    pub deltas: Option<Vec<f64>>,
}

impl Overrides {
    pub fn apply(&self, c: &mut Config) -> Result<()> {
        let sim = &mut c.simulation;
        if let Some(s) = self.seed {
            sim.master_seed = s;
        }
        if let Some(r) = self.runs {
            sim.runs = r;
        }
        if let Some(n) = self.iterations {
            sim.iterations = n;
        }
        if let Some(e) = self.epsilon {
            sim.policy.epsilon = e;
        }
        if let Some(p) = &self.policy {
            sim.policy.kind = parse_policy(p)?;
        }
        let current_theta = match sim.feedback.kind {
            FeedbackKind::RankDependent { theta } => Some(theta),
            FeedbackKind::Perfect => None,
        };
        let theta = self.theta.or(current_theta);
        match &self.feedback {
            Some(f) => sim.feedback.kind = parse_feedback(f, theta)?,
            None => {
                if let (Some(t), FeedbackKind::RankDependent { .. }) = (self.theta, sim.feedback.kind) {
                    sim.feedback.kind = FeedbackKind::RankDependent { theta: t };
                }
            }
        }
        if let Some(d) = &self.deltas {
            sim.deltas = d.clone();
        }
        c.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = Config::default();
        assert_eq!(Config::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn parses_comments_and_movielens() {
        let text = "# movielens run\nsource = movielens\nratings = data/ratings.dat  # ML-1M\nmovies = data/movies.dat\n\
                    policy = epsilon_greedy\nepsilon = 0.2\nfeedback = rank_dependent\ntheta = 0.8\ndeltas = 0.05, 0.01, 0.1\n";
        let c = Config::parse(text).unwrap();
        assert_eq!(
            c.source,
            Source::MovieLens {
                ratings: "data/ratings.dat".into(),
                movies: "data/movies.dat".into()
            }
        );
        assert_eq!(c.simulation.policy.kind, PolicyKind::EpsilonGreedy);
        assert_eq!(c.simulation.feedback.kind, FeedbackKind::RankDependent { theta: 0.8 });
        assert_eq!(c.simulation.deltas, vec![0.05, 0.01, 0.1]);
        assert_eq!(Config::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(matches!(Config::parse("colour = red"), Err(Error::Config(m)) if m.contains("colour")));
        assert!(matches!(Config::parse("runs = 1\nruns = 2"), Err(Error::Config(_))));
        assert!(matches!(Config::parse("runs"), Err(Error::Config(_))));
        assert!(Config::parse("runs = 0").is_err());
        assert!(Config::parse("feedback = rank_dependent").is_err());
        assert!(Config::parse("source = movielens\nratings = r.dat").is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut c = Config::default();
        Overrides {
            seed: Some(7),
            runs: Some(2),
            policy: Some("epsilon_greedy".into()),
            epsilon: Some(0.3),
            feedback: Some("rank_dependent".into()),
            theta: Some(0.5),
            ..Overrides::default()
        }
        .apply(&mut c)
        .unwrap();
        assert_eq!(c.simulation.master_seed, 7);
        assert_eq!(c.simulation.runs, 2);
        assert_eq!(c.simulation.feedback.kind, FeedbackKind::RankDependent { theta: 0.5 });
        assert!(Overrides {
            feedback: Some("rank_dependent".into()),
            ..Overrides::default()
        }
        .apply(&mut Config::default())
        .is_err());
    }

    #[test]
    fn relative_paths_resolve_against_base() {
        let mut c = Config::parse("source = movielens\nratings = r.dat\nmovies = /abs/m.dat\nground_truth = gt.bin").unwrap();
        c.resolve_paths(Path::new("/cfg"));
        assert_eq!(
            c.source,
            Source::MovieLens {
                ratings: "/cfg/r.dat".into(),
                movies: "/abs/m.dat".into()
            }
        );
        assert_eq!(c.ground_truth, Some("/cfg/gt.bin".into()));
    }
}
