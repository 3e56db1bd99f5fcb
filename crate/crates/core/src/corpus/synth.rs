//! Synthetic multi-party regions for desk-scale experiments.
//!
//! Users of each party retweet members (and unlabeled "interacting" users)
//! of their own party with probability `homophily`. The remaining retweets go
//! to another party or, with probability `neutral_share`, to one of a few
//! unaffiliated accounts that every party retweets. Engagement tiers differ
//! in how much they retweet, how much they post and how party-specific their
//! vocabulary is. Follow edges are generated so that tier derivation from
//! follows recovers the generated Supporter and Sympathizer labels.

use std::collections::BTreeMap;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EngagementTier, FollowEdge, PartyLabel, RegionDataset, RetweetEdge, Tweet, UserRecord};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierActivity {
    /// Inclusive range of retweet events per user.
    pub retweets: (u32, u32),
    /// Tweets posted per user.
    pub tweets: usize,
    /// Multiplier applied to `vocab_specificity` for this tier.
    pub specificity_scale: f64,
    /// Overrides the region-wide `homophily` for this tier's retweets.
    pub homophily: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub region: String,
    pub n_parties: usize,
    pub members_per_party: usize,
    pub supporters_per_party: usize,
    pub sympathizers_per_party: usize,
    /// Unlabeled users that only contribute retweets.
    pub interacting_per_party: usize,
    /// Probability that a retweet stays within the author's party.
    pub homophily: f64,
    /// Zipf exponent of retweet-target popularity within a party's pool
    /// (members first, then interacting users). 0 gives uniform targets.
    pub popularity: f64,
    /// Unlabeled accounts outside every party (news outlets and the like).
    pub neutral_accounts: usize,
    /// Share of off-party retweets that target a neutral account.
    pub neutral_share: f64,
    pub member: TierActivity,
    pub supporter: TierActivity,
    pub sympathizer: TierActivity,
    pub interacting: TierActivity,
    /// Probability that a token comes from the party-specific vocabulary.
    pub vocab_specificity: f64,
    pub shared_vocab: usize,
    pub party_vocab: usize,
    /// Inclusive token-length range of regular tweets.
    pub tweet_tokens: (usize, usize),
    /// Fraction of tweets generated too short to survive filtering.
    pub short_tweet_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            region: "syn".into(),
            n_parties: 3,
            members_per_party: 60,
            supporters_per_party: 60,
            sympathizers_per_party: 60,
            interacting_per_party: 40,
            homophily: 0.95,
            popularity: 1.0,
            neutral_accounts: 10,
            neutral_share: 0.5,
            member: TierActivity {
                retweets: (20, 40),
                tweets: 30,
                specificity_scale: 1.0,
                homophily: None,
            },
            supporter: TierActivity {
                retweets: (3, 8),
                tweets: 15,
                specificity_scale: 0.8,
                homophily: Some(0.8),
            },
            sympathizer: TierActivity {
                retweets: (1, 2),
                tweets: 8,
                specificity_scale: 0.5,
                homophily: Some(0.5),
            },
            interacting: TierActivity {
                retweets: (5, 15),
                tweets: 0,
                specificity_scale: 0.0,
                homophily: None,
            },
            vocab_specificity: 0.3,
            shared_vocab: 400,
            party_vocab: 40,
            tweet_tokens: (12, 20),
            short_tweet_rate: 0.05,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn activity(&self, tier: Option<EngagementTier>) -> &TierActivity {
        match tier {
            Some(EngagementTier::Member) => &self.member,
            Some(EngagementTier::Supporter) => &self.supporter,
            Some(EngagementTier::Sympathizer) => &self.sympathizer,
            None => &self.interacting,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synth: {m}")));
        for (name, p) in [
            ("homophily", self.homophily),
            ("vocab_specificity", self.vocab_specificity),
            ("short_tweet_rate", self.short_tweet_rate),
            ("neutral_share", self.neutral_share),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.popularity >= 0.0 && self.popularity.is_finite()) {
            return bad("popularity must be finite and non-negative");
        }
        if self.n_parties == 0 || self.n_parties > 26 {
            return bad("n_parties must be between 1 and 26");
        }
        if self.members_per_party == 0 {
            return bad("members_per_party must be positive");
        }
        if self.shared_vocab == 0 || self.party_vocab == 0 {
            return bad("vocabulary sizes must be positive");
        }
        if self.tweet_tokens.0 == 0 || self.tweet_tokens.0 > self.tweet_tokens.1 {
            return bad("tweet_tokens must be a non-empty positive range");
        }
        for tier in [None, Some(EngagementTier::Member), Some(EngagementTier::Supporter), Some(EngagementTier::Sympathizer)] {
            let a = self.activity(tier);
            if a.retweets.0 > a.retweets.1 {
                return bad("retweet range is empty");
            }
            if !(a.specificity_scale >= 0.0 && a.specificity_scale.is_finite()) {
                return bad("specificity_scale must be finite and non-negative");
            }
            if a.homophily.is_some_and(|h| !(0.0..=1.0).contains(&h)) {
                return bad("tier homophily must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

fn party_code(p: usize) -> char {
    (b'a' + p as u8) as char
}

struct Synth<'a> {
    cfg: &'a SynthConfig,
    parties: Vec<PartyLabel>,
    /// (user_id, party index, tier); interacting users have no tier.
    roster: Vec<(String, usize, Option<EngagementTier>)>,
    members: Vec<Vec<usize>>,
    pools: Vec<Vec<usize>>,
    popularity: Vec<WeightedIndex<f64>>,
    /// Roster indices of neutral accounts (party index unused).
    neutral: Vec<usize>,
}

impl<'a> Synth<'a> {
    fn new(cfg: &'a SynthConfig) -> Self {
        let parties = (0..cfg.n_parties)
            .map(|p| PartyLabel::new(format!("party_{}", party_code(p))))
            .collect();
        let mut roster = Vec::new();
        let mut members = vec![Vec::new(); cfg.n_parties];
        let mut pools = vec![Vec::new(); cfg.n_parties];
        let tiers = [
            (Some(EngagementTier::Member), 'm', cfg.members_per_party),
            (Some(EngagementTier::Supporter), 's', cfg.supporters_per_party),
            (Some(EngagementTier::Sympathizer), 'y', cfg.sympathizers_per_party),
            (None, 'i', cfg.interacting_per_party),
        ];
        for (tier, code, count) in tiers {
            for p in 0..cfg.n_parties {
                for i in 0..count {
                    let idx = roster.len();
                    roster.push((format!("{}_{code}{}_{i:04}", cfg.region, party_code(p)), p, tier));
                    match tier {
                        Some(EngagementTier::Member) => {
                            members[p].push(idx);
                            pools[p].push(idx);
                        }
                        None => pools[p].push(idx),
                        _ => {}
                    }
                }
            }
        }
        let neutral: Vec<usize> = (0..cfg.neutral_accounts)
            .map(|i| {
                roster.push((format!("{}_n_{i:04}", cfg.region), 0, None));
                roster.len() - 1
            })
            .collect();
        let popularity = pools
            .iter()
            .chain(std::iter::once(&neutral))
            .map(|pool| {
                let weights = (0..pool.len().max(1)).map(|r| (r as f64 + 1.0).powf(-cfg.popularity));
                WeightedIndex::new(weights).expect("positive weights")
            })
            .collect();
        Synth {
            cfg,
            parties,
            roster,
            members,
            pools,
            popularity,
            neutral,
        }
    }

    /// Index into `pools`, where `n_parties` stands for the neutral pool.
    fn pick_pool(&self, own: usize, homophily: f64, rng: &mut rng::Rng) -> usize {
        let n = self.cfg.n_parties;
        if rng.gen_bool(homophily) {
            own
        } else if !self.neutral.is_empty() && rng.gen_bool(self.cfg.neutral_share) {
            n
        } else if n == 1 {
            own
        } else {
            let other = rng.gen_range(0..n - 1);
            if other >= own {
                other + 1
            } else {
                other
            }
        }
    }

    fn retweets(&self) -> Vec<RetweetEdge> {
        let mut rng = rng::seeded(self.cfg.seed, &[1]);
        let mut counts: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for (src, (_, party, tier)) in self.roster.iter().enumerate() {
            if self.neutral.contains(&src) {
                continue;
            }
            let activity = self.cfg.activity(*tier);
            let (lo, hi) = activity.retweets;
            let homophily = activity.homophily.unwrap_or(self.cfg.homophily);
            let events = rng.gen_range(lo..=hi);
            for _ in 0..events {
                let target_party = self.pick_pool(*party, homophily, &mut rng);
                let pool = self.pools.get(target_party).unwrap_or(&self.neutral);
                if pool.iter().all(|&t| t == src) {
                    continue;
                }
                let target = loop {
                    let t = pool[self.popularity[target_party].sample(&mut rng)];
                    if t != src {
                        break t;
                    }
                };
                *counts.entry((src, target)).or_default() += 1;
            }
        }
        counts
            .into_iter()
            .map(|((s, t), weight)| RetweetEdge {
                source: self.roster[s].0.clone(),
                target: self.roster[t].0.clone(),
                weight,
            })
            .collect()
    }

    fn follow_some(&self, out: &mut Vec<FollowEdge>, follower: usize, party: usize, k: usize, rng: &mut rng::Rng) {
        let candidates: Vec<usize> = self.members[party].iter().copied().filter(|&m| m != follower).collect();
        for &m in candidates.choose_multiple(rng, k.min(candidates.len())) {
            out.push(FollowEdge {
                follower: self.roster[follower].0.clone(),
                followee: self.roster[m].0.clone(),
            });
        }
    }

    fn other_party(&self, own: usize, rng: &mut rng::Rng) -> Option<usize> {
        let n = self.cfg.n_parties;
        (n > 1).then(|| (own + rng.gen_range(1..n)) % n)
    }

    fn follows(&self) -> Vec<FollowEdge> {
        let mut rng = rng::seeded(self.cfg.seed, &[2]);
        let mut out = Vec::new();
        for (idx, (_, party, tier)) in self.roster.iter().enumerate() {
            if self.neutral.contains(&idx) {
                continue;
            }
            let party = *party;
            match tier {
                Some(EngagementTier::Member) => self.follow_some(&mut out, idx, party, 3, &mut rng),
                Some(EngagementTier::Supporter) => {
                    let k = rng.gen_range(5..=9);
                    self.follow_some(&mut out, idx, party, k, &mut rng);
                    if rng.gen_bool(0.3) {
                        if let Some(other) = self.other_party(party, &mut rng) {
                            let j = rng.gen_range(1..=4);
                            self.follow_some(&mut out, idx, other, j, &mut rng);
                        }
                    }
                }
                Some(EngagementTier::Sympathizer) => {
                    let own = if rng.gen_bool(0.5) { 2 } else { 1 };
                    self.follow_some(&mut out, idx, party, own, &mut rng);
                    if own == 2 && rng.gen_bool(0.3) {
                        if let Some(other) = self.other_party(party, &mut rng) {
                            self.follow_some(&mut out, idx, other, 1, &mut rng);
                        }
                    }
                }
                None => {
                    self.follow_some(&mut out, idx, party, 3, &mut rng);
                    if let Some(other) = self.other_party(party, &mut rng) {
                        self.follow_some(&mut out, idx, other, 3, &mut rng);
                    }
                }
            }
        }
        out
    }

    fn tweets(&self) -> (Vec<Tweet>, Vec<Vec<String>>) {
        let cfg = self.cfg;
        let mut rng = rng::seeded(cfg.seed, &[3]);
        let zipf = WeightedIndex::new((1..=cfg.shared_vocab).map(|r| 1.0 / r as f64)).expect("non-empty vocabulary");
        let mut tweets = Vec::new();
        let mut owned = vec![Vec::new(); self.roster.len()];
        for (idx, (user_id, party, tier)) in self.roster.iter().enumerate() {
            let activity = cfg.activity(*tier);
            let specificity = (cfg.vocab_specificity * activity.specificity_scale).clamp(0.0, 1.0);
            for k in 0..activity.tweets {
                let len = if rng.gen_bool(cfg.short_tweet_rate) {
                    5
                } else {
                    rng.gen_range(cfg.tweet_tokens.0..=cfg.tweet_tokens.1)
                };
                let mut words: Vec<String> = Vec::with_capacity(len + 3);
                if rng.gen_bool(0.15) {
                    words.push("RT @someone:".into());
                }
                for _ in 0..len {
                    if rng.gen_bool(specificity) {
                        words.push(format!("p{}{:02}", party_code(*party), rng.gen_range(0..cfg.party_vocab)));
                    } else {
                        words.push(format!("w{}", zipf.sample(&mut rng)));
                    }
                }
                if rng.gen_bool(0.2) {
                    words.push(format!("https://t.co/{idx}x{k}"));
                }
                let tweet_id = format!("{user_id}_t{k:03}");
                owned[idx].push(tweet_id.clone());
                tweets.push(Tweet::new(tweet_id, user_id.clone(), words.join(" ")));
            }
        }
        (tweets, owned)
    }
}

/// Generates a region whose labeled users carry their ground-truth party.
/// Output is a pure function of the config.
pub fn synth_region(cfg: &SynthConfig) -> Result<RegionDataset> {
    cfg.validate()?;
    let synth = Synth::new(cfg);
    let retweets = synth.retweets();
    let follows = synth.follows();
    let (tweets, owned) = synth.tweets();
    let users = synth
        .roster
        .iter()
        .zip(owned)
        .map(|((user_id, party, tier), tweet_ids)| UserRecord {
            user_id: user_id.clone(),
            region: cfg.region.clone(),
            party: tier.map(|_| synth.parties[*party].clone()),
            tier: *tier,
            text_absent: tweet_ids.is_empty(),
            tweet_ids,
        })
        .collect();
    Ok(RegionDataset {
        region: cfg.region.clone(),
        users,
        tweets,
        retweets,
        follows,
        parties: synth.parties.clone(),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::corpus::apply_derived_tiers;

    /// Region-wide `homophily`, with the per-tier overrides cleared.
    fn small(homophily: f64) -> SynthConfig {
        let base = SynthConfig::default();
        SynthConfig {
            supporter: TierActivity { homophily: None, ..base.supporter.clone() },
            sympathizer: TierActivity { homophily: None, ..base.sympathizer.clone() },
            members_per_party: 10,
            supporters_per_party: 5,
            sympathizers_per_party: 5,
            interacting_per_party: 5,
            homophily,
            seed: 7,
            ..base
        }
    }

    fn party_of(ds: &RegionDataset) -> HashMap<&str, &str> {
        ds.users
            .iter()
            .filter_map(|u| Some((u.user_id.as_str(), u.party.as_ref()?.as_str())))
            .collect()
    }

    #[test]
    fn member_count_arithmetic() {
        let ds = synth_region(&small(0.9)).unwrap();
        let members = ds.tier_users(EngagementTier::Member);
        assert_eq!(members.len(), 30);
        assert!(members.iter().all(|u| u.party.is_some()));
        assert_eq!(ds.parties.len(), 3);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synth_region(&small(0.9)).unwrap();
        let b = synth_region(&small(0.9)).unwrap();
        assert_eq!(a, b);
        let c = synth_region(&SynthConfig { seed: 8, ..small(0.9) }).unwrap();
        assert_ne!(a.retweets, c.retweets);
    }

    #[test]
    fn full_homophily_keeps_edges_within_party() {
        // Interacting users carry no label, so leave them out to check every edge.
        let cfg = SynthConfig {
            interacting_per_party: 0,
            ..small(1.0)
        };
        let ds = synth_region(&cfg).unwrap();
        let party = party_of(&ds);
        assert!(!ds.retweets.is_empty());
        for e in &ds.retweets {
            assert_eq!(party[e.source.as_str()], party[e.target.as_str()]);
        }
    }

    #[test]
    fn homophily_fraction_concentrates() {
        // >= 10k retweet events at homophily 0.9. Binomial sd at n = 10^4 is
        // 0.003, so [0.88, 0.92] is a +-6.6 sd band.
        let cfg = SynthConfig {
            members_per_party: 100,
            supporters_per_party: 0,
            sympathizers_per_party: 0,
            interacting_per_party: 0,
            neutral_accounts: 0,
            homophily: 0.9,
            member: TierActivity {
                retweets: (40, 40),
                tweets: 0,
                specificity_scale: 1.0,
                homophily: None,
            },
            ..SynthConfig::default()
        };
        let ds = synth_region(&cfg).unwrap();
        let party = party_of(&ds);
        let total: u32 = ds.retweets.iter().map(|e| e.weight).sum();
        let within: u32 = ds
            .retweets
            .iter()
            .filter(|e| party[e.source.as_str()] == party[e.target.as_str()])
            .map(|e| e.weight)
            .sum();
        assert!(total >= 10_000, "{total}");
        let frac = f64::from(within) / f64::from(total);
        assert!((0.88..=0.92).contains(&frac), "{frac}");
    }

    #[test]
    fn neutral_accounts_take_the_off_party_share() {
        let cfg = SynthConfig {
            homophily: 0.0,
            neutral_share: 1.0,
            ..small(0.0)
        };
        let ds = synth_region(&cfg).unwrap();
        assert!(!ds.retweets.is_empty());
        assert!(ds.retweets.iter().all(|e| e.target.starts_with("syn_n_")));
        let neutral: Vec<_> = ds.users.iter().filter(|u| u.user_id.starts_with("syn_n_")).collect();
        assert_eq!(neutral.len(), 10);
        assert!(neutral.iter().all(|u| u.party.is_none() && u.tier.is_none() && u.tweet_ids.is_empty()));
        assert!(ds.follows.iter().all(|f| !f.follower.starts_with("syn_n_")));
    }

    #[test]
    fn sympathizers_retweet_sparsely() {
        let ds = synth_region(&small(0.9)).unwrap();
        for u in ds.tier_users(EngagementTier::Sympathizer) {
            let n: u32 = ds.retweets.iter().filter(|e| e.source == u.user_id).map(|e| e.weight).sum();
            assert!(n <= 2, "{} retweeted {n} times", u.user_id);
        }
    }

    #[test]
    fn follow_graph_recovers_tiers() {
        let ds = synth_region(&small(0.9)).unwrap();
        let derived = apply_derived_tiers(&ds, 5, 2);
        assert_eq!(derived.users, ds.users);
    }

    #[test]
    fn invalid_probability_rejected() {
        assert!(synth_region(&small(1.5)).is_err());
    }
}
