//! Automatic labeling of less engaged users from follow relations to Members.

use std::collections::{BTreeMap, BTreeSet};

use super::{EngagementTier, FollowEdge, PartyLabel, RegionDataset, UserRecord};

type FollowCounts = BTreeMap<String, BTreeMap<PartyLabel, usize>>;

/// Per non-member follower, how many distinct Members of each party it follows.
fn member_follow_counts(follows: &[FollowEdge], members: &BTreeMap<String, PartyLabel>) -> FollowCounts {
    let pairs: BTreeSet<(&str, &str)> = follows
        .iter()
        .map(|f| (f.follower.as_str(), f.followee.as_str()))
        .collect();
    let mut counts = FollowCounts::new();
    for (follower, followee) in pairs {
        if members.contains_key(follower) {
            continue;
        }
        if let Some(party) = members.get(followee) {
            *counts
                .entry(follower.to_string())
                .or_default()
                .entry(party.clone())
                .or_default() += 1;
        }
    }
    counts
}

/// Users following at least `threshold` Members of exactly one party.
/// Users that reach the threshold for two or more parties are left out.
pub fn derive_supporters(
    follows: &[FollowEdge],
    members: &BTreeMap<String, PartyLabel>,
    threshold: usize,
) -> BTreeMap<String, PartyLabel> {
    member_follow_counts(follows, members)
        .into_iter()
        .filter_map(|(user, per_party)| {
            let mut qualifying = per_party.into_iter().filter(|&(_, n)| n >= threshold);
            match (qualifying.next(), qualifying.next()) {
                (Some((party, _)), None) => Some((user, party)),
                _ => None,
            }
        })
        .collect()
}

/// Users following between 1 and `max_per_party` Members of every party they
/// follow, labeled with the party they follow most. Ties, Members and
/// supporters are left out.
pub fn derive_sympathizers(
    follows: &[FollowEdge],
    members: &BTreeMap<String, PartyLabel>,
    supporters: &BTreeSet<String>,
    max_per_party: usize,
) -> BTreeMap<String, PartyLabel> {
    member_follow_counts(follows, members)
        .into_iter()
        .filter(|(user, _)| !supporters.contains(user))
        .filter_map(|(user, per_party)| {
            if per_party.values().any(|&n| n > max_per_party) {
                return None;
            }
            let best = *per_party.values().max()?;
            let mut top = per_party.into_iter().filter(|&(_, n)| n == best);
            match (top.next(), top.next()) {
                (Some((party, _)), None) => Some((user, party)),
                _ => None,
            }
        })
        .collect()
}

/// Recomputes Supporter and Sympathizer tiers from the follow graph. Members
/// are kept as labeled; previously derived tiers are discarded first. Newly
/// labeled users missing from the dataset are appended in id order.
pub fn apply_derived_tiers(dataset: &RegionDataset, threshold: usize, max_per_party: usize) -> RegionDataset {
    let members: BTreeMap<String, PartyLabel> = dataset
        .users
        .iter()
        .filter(|u| u.tier == Some(EngagementTier::Member))
        .filter_map(|u| Some((u.user_id.clone(), u.party.clone()?)))
        .collect();
    let supporters = derive_supporters(&dataset.follows, &members, threshold);
    let supporter_ids: BTreeSet<String> = supporters.keys().cloned().collect();
    let sympathizers = derive_sympathizers(&dataset.follows, &members, &supporter_ids, max_per_party);

    let mut derived: BTreeMap<String, (PartyLabel, EngagementTier)> = BTreeMap::new();
    for (u, p) in supporters {
        derived.insert(u, (p, EngagementTier::Supporter));
    }
    for (u, p) in sympathizers {
        derived.insert(u, (p, EngagementTier::Sympathizer));
    }

    let mut out = dataset.clone();
    for user in &mut out.users {
        if user.tier == Some(EngagementTier::Member) {
            continue;
        }
        match derived.remove(&user.user_id) {
            Some((party, tier)) => {
                user.party = Some(party);
                user.tier = Some(tier);
            }
            None if user.tier.is_some() => {
                user.party = None;
                user.tier = None;
            }
            None => {}
        }
    }
    for (user_id, (party, tier)) in derived {
        out.users.push(UserRecord {
            user_id,
            region: dataset.region.clone(),
            party: Some(party),
            tier: Some(tier),
            tweet_ids: Vec::new(),
            text_absent: true,
        });
    }
    out.refresh_parties();
    out
}
