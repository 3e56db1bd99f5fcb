//! Labeled users, tweets and interaction edges for one region.

mod io;
mod synth;
mod tiers;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use io::{load_region, save_region, RegionPaths};
pub use synth::{synth_region, SynthConfig, TierActivity};
pub use tiers::{apply_derived_tiers, derive_supporters, derive_sympathizers};

/// Tweets with fewer tokens than this are discarded.
pub const MIN_TWEET_TOKENS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartyLabel(pub String);

impl PartyLabel {
    pub fn new(s: impl Into<String>) -> Self {
        PartyLabel(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PartyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Engagement level. Variants are declared from least to most engaged so the
/// derived ordering gives `Member > Supporter > Sympathizer`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngagementTier {
    Sympathizer,
    Supporter,
    Member,
}

impl EngagementTier {
    pub const ALL: [EngagementTier; 3] = [
        EngagementTier::Member,
        EngagementTier::Supporter,
        EngagementTier::Sympathizer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EngagementTier::Member => "member",
            EngagementTier::Supporter => "supporter",
            EngagementTier::Sympathizer => "sympathizer",
        }
    }
}

impl fmt::Display for EngagementTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngagementTier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "member" | "members" => Ok(EngagementTier::Member),
            "supporter" | "supporters" => Ok(EngagementTier::Supporter),
            "sympathizer" | "sympathizers" => Ok(EngagementTier::Sympathizer),
            other => Err(Error::Config(format!("unknown tier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub region: String,
    pub party: Option<PartyLabel>,
    pub tier: Option<EngagementTier>,
    /// Authored tweets in file order (earliest line = most recent).
    pub tweet_ids: Vec<String>,
    /// Set when the user has no retained tweets.
    pub text_absent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub tweet_id: String,
    pub user_id: String,
    pub text: String,
    pub token_count: usize,
}

impl Tweet {
    pub fn new(tweet_id: impl Into<String>, user_id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let token_count = crate::text_features::tokenize(&text).len();
        Tweet {
            tweet_id: tweet_id.into(),
            user_id: user_id.into(),
            text,
            token_count,
        }
    }
}

/// `source` retweeted `target`, `weight` times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetweetEdge {
    pub source: String,
    pub target: String,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FollowEdge {
    pub follower: String,
    pub followee: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionDataset {
    pub region: String,
    pub users: Vec<UserRecord>,
    /// Tweet store in file order.
    pub tweets: Vec<Tweet>,
    pub retweets: Vec<RetweetEdge>,
    pub follows: Vec<FollowEdge>,
    /// Sorted party labels present among labeled users.
    pub parties: Vec<PartyLabel>,
}

impl RegionDataset {
    pub fn user(&self, user_id: &str) -> Option<&UserRecord> {
        self.users.iter().find(|u| u.user_id == user_id)
    }

    /// Labeled users of one tier, in dataset order.
    pub fn tier_users(&self, tier: EngagementTier) -> Vec<&UserRecord> {
        self.users
            .iter()
            .filter(|u| u.tier == Some(tier) && u.party.is_some())
            .collect()
    }

    pub fn tweet_index(&self) -> HashMap<&str, &Tweet> {
        self.tweets.iter().map(|t| (t.tweet_id.as_str(), t)).collect()
    }

    /// Tweets of one user in stored order.
    pub fn tweets_of<'a>(&'a self, index: &HashMap<&str, &'a Tweet>, user: &UserRecord) -> Vec<&'a Tweet> {
        user.tweet_ids
            .iter()
            .filter_map(|id| index.get(id.as_str()).copied())
            .collect()
    }

    pub(crate) fn refresh_parties(&mut self) {
        let parties: BTreeSet<PartyLabel> = self.users.iter().filter_map(|u| u.party.clone()).collect();
        self.parties = parties.into_iter().collect();
    }
}

/// Maximum retained tweets per engagement tier. Users without a tier are not capped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quotas {
    pub member: usize,
    pub supporter: usize,
    pub sympathizer: usize,
}

impl Default for Quotas {
    fn default() -> Self {
        Quotas {
            member: 120,
            supporter: 60,
            sympathizer: 60,
        }
    }
}

impl Quotas {
    pub fn get(&self, tier: Option<EngagementTier>) -> Option<usize> {
        match tier? {
            EngagementTier::Member => Some(self.member),
            EngagementTier::Supporter => Some(self.supporter),
            EngagementTier::Sympathizer => Some(self.sympathizer),
        }
    }
}

/// Drops tweets shorter than [`MIN_TWEET_TOKENS`] and keeps, per user, at
/// most the tier quota of the most recent valid tweets. Users left without
/// tweets stay in the dataset with `text_absent` set.
pub fn filter_and_quota(dataset: &RegionDataset, quotas: &Quotas) -> RegionDataset {
    let valid: HashMap<&str, &Tweet> = dataset
        .tweets
        .iter()
        .filter(|t| t.token_count >= MIN_TWEET_TOKENS)
        .map(|t| (t.tweet_id.as_str(), t))
        .collect();

    let mut kept_ids: BTreeSet<&str> = BTreeSet::new();
    let mut owned: BTreeSet<&str> = BTreeSet::new();
    let mut users = Vec::with_capacity(dataset.users.len());
    for user in &dataset.users {
        let cap = quotas.get(user.tier).unwrap_or(usize::MAX);
        let tweet_ids: Vec<String> = user
            .tweet_ids
            .iter()
            .filter(|id| valid.get(id.as_str()).is_some_and(|t| t.user_id == user.user_id))
            .take(cap)
            .cloned()
            .collect();
        owned.insert(user.user_id.as_str());
        for id in &tweet_ids {
            kept_ids.insert(valid[id.as_str()].tweet_id.as_str());
        }
        users.push(UserRecord {
            text_absent: tweet_ids.is_empty(),
            tweet_ids,
            ..user.clone()
        });
    }

    // Tweets by authors outside the label file are kept uncapped.
    let tweets = dataset
        .tweets
        .iter()
        .filter(|t| {
            kept_ids.contains(t.tweet_id.as_str())
                || (!owned.contains(t.user_id.as_str()) && t.token_count >= MIN_TWEET_TOKENS)
        })
        .cloned()
        .collect();

    RegionDataset {
        region: dataset.region.clone(),
        users,
        tweets,
        retweets: dataset.retweets.clone(),
        follows: dataset.follows.clone(),
        parties: dataset.parties.clone(),
    }
}
