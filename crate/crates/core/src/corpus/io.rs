use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EngagementTier, FollowEdge, PartyLabel, RegionDataset, RetweetEdge, Tweet, UserRecord};
use crate::error::{Error, Result};

const LABELS_HEADER: [&str; 4] = ["user_id", "region", "party", "tier"];

/// Locations of the four files that make up a region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionPaths {
    pub labels: PathBuf,
    pub tweets: PathBuf,
    pub retweets: PathBuf,
    pub follows: PathBuf,
}

impl RegionPaths {
    /// Standard file names inside one directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        RegionPaths {
            labels: dir.join("labels.csv"),
            tweets: dir.join("tweets.jsonl"),
            retweets: dir.join("retweets.tsv"),
            follows: dir.join("follows.tsv"),
        }
    }

    pub fn missing(&self) -> Vec<&Path> {
        [&self.labels, &self.tweets, &self.retweets, &self.follows]
            .into_iter()
            .map(PathBuf::as_path)
            .filter(|p| !p.exists())
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct TweetRow {
    tweet_id: String,
    user_id: String,
    text: String,
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn load_region(paths: &RegionPaths) -> Result<RegionDataset> {
    let (region, mut users) = read_labels(&paths.labels)?;
    let tweets = read_tweets(&paths.tweets)?;
    let retweets = read_retweets(&paths.retweets)?;
    let follows = read_follows(&paths.follows)?;

    let slot: HashMap<String, usize> = users
        .iter()
        .enumerate()
        .map(|(i, u)| (u.user_id.clone(), i))
        .collect();
    for tweet in &tweets {
        if let Some(&i) = slot.get(&tweet.user_id) {
            users[i].tweet_ids.push(tweet.tweet_id.clone());
        }
    }
    for user in &mut users {
        user.text_absent = user.tweet_ids.is_empty();
    }

    let mut dataset = RegionDataset {
        region,
        users,
        tweets,
        retweets,
        follows,
        parties: Vec::new(),
    };
    dataset.refresh_parties();
    Ok(dataset)
}

fn read_labels(path: &Path) -> Result<(String, Vec<UserRecord>)> {
    let file = display(path);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(open(path)?);
    let header = reader
        .headers()
        .map_err(|e| Error::parse(&file, 1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != LABELS_HEADER {
        return Err(Error::parse(
            &file,
            1,
            format!("expected header `{}`", LABELS_HEADER.join(",")),
        ));
    }

    let mut region: Option<String> = None;
    let mut seen = HashSet::new();
    let mut users = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(&file, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(Error::parse(&file, line, "expected 4 fields"));
        }
        let user_id = record[0].to_string();
        if user_id.is_empty() {
            return Err(Error::parse(&file, line, "empty user_id"));
        }
        if !seen.insert(user_id.clone()) {
            return Err(Error::DuplicateUser(user_id));
        }
        match &region {
            None => region = Some(record[1].to_string()),
            Some(r) if r != &record[1] => {
                return Err(Error::parse(
                    &file,
                    line,
                    format!("region `{}` differs from `{r}`; regions are loaded one at a time", &record[1]),
                ))
            }
            Some(_) => {}
        }
        let party = (!record[2].is_empty()).then(|| PartyLabel::new(&record[2]));
        let tier = match &record[3] {
            "" => None,
            "member" => Some(EngagementTier::Member),
            "supporter" => Some(EngagementTier::Supporter),
            "sympathizer" => Some(EngagementTier::Sympathizer),
            other => return Err(Error::parse(&file, line, format!("unknown tier `{other}`"))),
        };
        if tier.is_some() && party.is_none() {
            return Err(Error::parse(&file, line, "tiered user has no party"));
        }
        users.push(UserRecord {
            user_id,
            region: record[1].to_string(),
            party,
            tier,
            tweet_ids: Vec::new(),
            text_absent: true,
        });
    }
    Ok((region.unwrap_or_default(), users))
}

fn lines(path: &Path) -> Result<impl Iterator<Item = Result<(usize, String)>>> {
    let owned = path.to_path_buf();
    Ok(open(path)?
        .lines()
        .enumerate()
        .map(move |(i, l)| l.map(|l| (i + 1, l)).map_err(|e| Error::io(&owned, e))))
}

fn read_tweets(path: &Path) -> Result<Vec<Tweet>> {
    let file = display(path);
    let mut seen = HashSet::new();
    let mut tweets = Vec::new();
    for item in lines(path)? {
        let (line, text) = item?;
        if text.trim().is_empty() {
            continue;
        }
        let row: TweetRow = serde_json::from_str(&text).map_err(|e| Error::parse(&file, line, e.to_string()))?;
        if !seen.insert(row.tweet_id.clone()) {
            return Err(Error::parse(&file, line, format!("duplicate tweet_id `{}`", row.tweet_id)));
        }
        tweets.push(Tweet::new(row.tweet_id, row.user_id, row.text));
    }
    Ok(tweets)
}

fn split_tsv<'a>(file: &str, line: usize, text: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = text.split('\t').collect();
    if fields.len() != n {
        return Err(Error::parse(file, line, format!("expected {n} tab-separated fields, found {}", fields.len())));
    }
    if fields.iter().any(|f| f.is_empty()) {
        return Err(Error::parse(file, line, "empty field"));
    }
    Ok(fields)
}

fn read_retweets(path: &Path) -> Result<Vec<RetweetEdge>> {
    let file = display(path);
    let mut edges = Vec::new();
    for item in lines(path)? {
        let (line, text) = item?;
        if text.is_empty() {
            continue;
        }
        let f = split_tsv(&file, line, &text, 3)?;
        if f[0] == f[1] {
            return Err(Error::parse(&file, line, format!("self-loop on `{}`", f[0])));
        }
        let weight: u32 = f[2]
            .parse()
            .ok()
            .filter(|&w| w >= 1)
            .ok_or_else(|| Error::parse(&file, line, format!("count `{}` is not a positive integer", f[2])))?;
        edges.push(RetweetEdge {
            source: f[0].to_string(),
            target: f[1].to_string(),
            weight,
        });
    }
    Ok(edges)
}

fn read_follows(path: &Path) -> Result<Vec<FollowEdge>> {
    let file = display(path);
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for item in lines(path)? {
        let (line, text) = item?;
        if text.is_empty() {
            continue;
        }
        let f = split_tsv(&file, line, &text, 2)?;
        if f[0] == f[1] {
            return Err(Error::parse(&file, line, format!("self-follow on `{}`", f[0])));
        }
        if !seen.insert((f[0].to_string(), f[1].to_string())) {
            return Err(Error::parse(&file, line, "duplicate follow pair"));
        }
        edges.push(FollowEdge {
            follower: f[0].to_string(),
            followee: f[1].to_string(),
        });
    }
    Ok(edges)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes the dataset in the canonical file formats. Reloading the output
/// yields an equal dataset.
pub fn save_region(dataset: &RegionDataset, paths: &RegionPaths) -> Result<()> {
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |e: std::io::Error| Error::io(&p, e)
    };

    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(create(&paths.labels)?);
        let csv_err = |e: csv::Error| Error::io(&paths.labels, e.into());
        w.write_record(LABELS_HEADER).map_err(csv_err)?;
        for u in &dataset.users {
            w.write_record([
                u.user_id.as_str(),
                u.region.as_str(),
                u.party.as_ref().map_or("", |p| p.as_str()),
                u.tier.map_or("", EngagementTier::as_str),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(io_err(&paths.labels))?;
    }

    {
        let mut w = create(&paths.tweets)?;
        for t in &dataset.tweets {
            let row = TweetRow {
                tweet_id: t.tweet_id.clone(),
                user_id: t.user_id.clone(),
                text: t.text.clone(),
            };
            let json = serde_json::to_string(&row).expect("tweet rows always serialize");
            writeln!(w, "{json}").map_err(io_err(&paths.tweets))?;
        }
        w.flush().map_err(io_err(&paths.tweets))?;
    }

    {
        let mut w = create(&paths.retweets)?;
        for e in &dataset.retweets {
            writeln!(w, "{}\t{}\t{}", e.source, e.target, e.weight).map_err(io_err(&paths.retweets))?;
        }
        w.flush().map_err(io_err(&paths.retweets))?;
    }

    {
        let mut w = create(&paths.follows)?;
        for e in &dataset.follows {
            writeln!(w, "{}\t{}", e.follower, e.followee).map_err(io_err(&paths.follows))?;
        }
        w.flush().map_err(io_err(&paths.follows))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_region(dir: &Path, labels: &str, tweets: &str, retweets: &str, follows: &str) -> RegionPaths {
        let paths = RegionPaths::in_dir(dir);
        fs::write(&paths.labels, labels).unwrap();
        fs::write(&paths.tweets, tweets).unwrap();
        fs::write(&paths.retweets, retweets).unwrap();
        fs::write(&paths.follows, follows).unwrap();
        paths
    }

    const LABELS: &str = "user_id,region,party,tier\nu1,sct,,\nu2,sct,,\nu3,sct,,\n";

    #[test]
    fn three_users_no_edges() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_region(dir.path(), LABELS, "", "", "");
        let ds = load_region(&paths).unwrap();
        assert_eq!(ds.users.len(), 3);
        assert!(ds.users.iter().all(|u| u.tier.is_none()));
        assert!(ds.retweets.is_empty());
        assert_eq!(ds.region, "sct");
    }

    #[test]
    fn self_loop_rejected_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_region(dir.path(), LABELS, "", "u1\tu2\t1\nu1\tu1\t2\n", "");
        match load_region(&paths) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("self-loop"));
            }
            other => panic!("expected self-loop error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_region(dir.path(), LABELS, "", "u1\tu2\t0\n", "");
        assert!(matches!(load_region(&paths), Err(Error::Parse { line: 1, .. })));

        let paths = write_region(dir.path(), LABELS, "{\"tweet_id\": 1}\n", "", "");
        assert!(matches!(load_region(&paths), Err(Error::Parse { line: 1, .. })));

        let paths = write_region(dir.path(), "user_id,region,party,tier\nu1,sct,A,leader\n", "", "", "");
        assert!(matches!(load_region(&paths), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn duplicate_user_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_region(dir.path(), "user_id,region,party,tier\nu1,sct,A,member\nu1,sct,B,member\n", "", "", "");
        assert!(matches!(load_region(&paths), Err(Error::DuplicateUser(u)) if u == "u1"));
    }

    #[test]
    fn unknown_users_in_edges_are_kept() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_region(dir.path(), LABELS, "", "u1\tstranger\t3\n", "x\tu1\n");
        let ds = load_region(&paths).unwrap();
        assert_eq!(ds.retweets[0].target, "stranger");
        assert_eq!(ds.retweets[0].weight, 3);
        assert_eq!(ds.follows.len(), 1);
    }

    #[test]
    fn member_tweet_store_scale() {
        // 358 members x 120 tweets, the Scottish member corpus shape.
        let dir = tempfile::tempdir().unwrap();
        let mut labels = String::from("user_id,region,party,tier\n");
        let mut tweets = String::new();
        for u in 0..358 {
            labels.push_str(&format!("m{u},sct,P{},member\n", u % 5));
            for t in 0..120 {
                tweets.push_str(&format!(
                    "{{\"tweet_id\":\"m{u}_{t}\",\"user_id\":\"m{u}\",\"text\":\"one two three four five six seven eight nine ten\"}}\n"
                ));
            }
        }
        let paths = write_region(dir.path(), &labels, &tweets, "", "");
        let ds = load_region(&paths).unwrap();
        assert_eq!(ds.tweets.len(), 42_960);
        assert_eq!(ds.parties.len(), 5);
        assert!(ds.users.iter().all(|u| u.tweet_ids.len() == 120));
    }

    #[test]
    fn save_then_load_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let labels = "user_id,region,party,tier\nu1,sct,A,member\n\"u,2\",sct,B,sympathizer\nu3,sct,,\n";
        let tweets = "{\"tweet_id\":\"t1\",\"user_id\":\"u1\",\"text\":\"Vote \\\"now\\\" ü\"}\n";
        let paths = write_region(dir.path(), labels, tweets, "u1\tu3\t2\n", "u3\tu1\n");
        let ds = load_region(&paths).unwrap();
        let out = RegionPaths::in_dir(dir.path().join("out"));
        save_region(&ds, &out).unwrap();
        for (a, b) in [
            (&paths.labels, &out.labels),
            (&paths.tweets, &out.tweets),
            (&paths.retweets, &out.retweets),
            (&paths.follows, &out.follows),
        ] {
            assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{}", b.display());
        }
        assert_eq!(load_region(&out).unwrap(), ds);
    }
}
