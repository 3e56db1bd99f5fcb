//! Hybrid text + interaction features.
//!
//! Tweet level: `[tweet text ‖ user text mean ‖ interaction]`, one feature
//! per tweet. User level: `[user text ‖ interaction]`. A missing modality
//! contributes zeros and sets its flag, so dimensions never change.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph_embeddings::Lookup;
use crate::text_features::TextVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModalityFlags {
    pub text_absent: bool,
    pub interaction_absent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FusionOptions {
    /// L2-normalise each segment before concatenation.
    pub normalize_segments: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridTweetFeature {
    pub tweet_id: String,
    pub user_id: String,
    pub vector: Vec<f64>,
    pub flags: ModalityFlags,
    pub tweet_text: Range<usize>,
    pub user_text: Range<usize>,
    pub interaction: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridUserFeature {
    pub user_id: String,
    pub vector: Vec<f64>,
    pub flags: ModalityFlags,
    pub user_text: Range<usize>,
    pub interaction: Range<usize>,
}

impl HybridTweetFeature {
    pub fn tweet_text(&self) -> &[f64] {
        &self.vector[self.tweet_text.clone()]
    }

    pub fn user_text(&self) -> &[f64] {
        &self.vector[self.user_text.clone()]
    }

    pub fn interaction(&self) -> &[f64] {
        &self.vector[self.interaction.clone()]
    }
}

impl HybridUserFeature {
    pub fn user_text(&self) -> &[f64] {
        &self.vector[self.user_text.clone()]
    }

    pub fn interaction(&self) -> &[f64] {
        &self.vector[self.interaction.clone()]
    }
}

fn check(got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

fn push_segment(out: &mut Vec<f64>, values: &[f64], normalize: bool) -> Range<usize> {
    let start = out.len();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if normalize && norm > 0.0 {
        out.extend(values.iter().map(|v| v / norm));
    } else {
        out.extend_from_slice(values);
    }
    start..out.len()
}

/// Text vectors of dimension 0 mean the configuration has no text modality.
pub fn fuse_tweet_level(
    tweet: &TextVector,
    user_text: &TextVector,
    interaction: &Lookup,
    user_id: &str,
    opts: FusionOptions,
) -> Result<HybridTweetFeature> {
    check(user_text.dim(), tweet.dim())?;
    let flags = ModalityFlags {
        text_absent: tweet.dim() == 0 || (tweet.absent && user_text.absent),
        interaction_absent: interaction.absent || interaction.vector.is_empty(),
    };
    if flags.text_absent && flags.interaction_absent {
        return Err(Error::Empty(format!("tweet `{}` has neither text nor interaction data", tweet.owner)));
    }
    let mut vector = Vec::with_capacity(tweet.dim() * 2 + interaction.vector.len());
    let tweet_text = push_segment(&mut vector, &tweet.vector, opts.normalize_segments);
    let user_text = push_segment(&mut vector, &user_text.vector, opts.normalize_segments);
    let interaction = push_segment(&mut vector, &interaction.vector, opts.normalize_segments);
    Ok(HybridTweetFeature {
        tweet_id: tweet.owner.clone(),
        user_id: user_id.to_string(),
        vector,
        flags,
        tweet_text,
        user_text,
        interaction,
    })
}

pub fn fuse_user_level(user_text: &TextVector, interaction: &Lookup, opts: FusionOptions) -> Result<HybridUserFeature> {
    let flags = ModalityFlags {
        text_absent: user_text.dim() == 0 || user_text.absent,
        interaction_absent: interaction.absent || interaction.vector.is_empty(),
    };
    if flags.text_absent && flags.interaction_absent {
        return Err(Error::Empty(format!("user `{}` has neither text nor interaction data", user_text.owner)));
    }
    let mut vector = Vec::with_capacity(user_text.dim() + interaction.vector.len());
    let text_range = push_segment(&mut vector, &user_text.vector, opts.normalize_segments);
    let inter_range = push_segment(&mut vector, &interaction.vector, opts.normalize_segments);
    Ok(HybridUserFeature {
        user_id: user_text.owner.clone(),
        vector,
        flags,
        user_text: text_range,
        interaction: inter_range,
    })
}

/// One line of the audit dump.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridRow {
    pub id: String,
    pub flags: ModalityFlags,
    pub vector: Vec<f64>,
}

impl From<&HybridTweetFeature> for HybridRow {
    fn from(f: &HybridTweetFeature) -> Self {
        HybridRow {
            id: f.tweet_id.clone(),
            flags: f.flags,
            vector: f.vector.clone(),
        }
    }
}

impl From<&HybridUserFeature> for HybridRow {
    fn from(f: &HybridUserFeature) -> Self {
        HybridRow {
            id: f.user_id.clone(),
            flags: f.flags,
            vector: f.vector.clone(),
        }
    }
}

/// Writes `id,flag_text,flag_inter,f1..fd` with a header line.
pub fn write_hybrid_csv(path: &Path, rows: &[HybridRow]) -> Result<()> {
    let dim = rows.first().map_or(0, |r| r.vector.len());
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(w, "id,flag_text,flag_inter").map_err(io)?;
    for i in 1..=dim {
        write!(w, ",f{i}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for row in rows {
        check(row.vector.len(), dim)?;
        if row.id.contains([',', '"', '\n']) {
            return Err(Error::Config(format!("id `{}` cannot be written to the hybrid dump", row.id)));
        }
        write!(
            w,
            "{},{},{}",
            row.id,
            u8::from(row.flags.text_absent),
            u8::from(row.flags.interaction_absent)
        )
        .map_err(io)?;
        for v in &row.vector {
            write!(w, ",{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_hybrid_csv(path: &Path) -> Result<Vec<HybridRow>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(&name, 1, "missing header"))?
        .map_err(|e| Error::io(path, e))?;
    if !header.starts_with("id,flag_text,flag_inter") {
        return Err(Error::parse(&name, 1, "expected `id,flag_text,flag_inter,...` header"));
    }
    let dim = header.split(',').count() - 3;
    let flag = |s: &str, line: usize| match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::parse(&name, line, format!("flag `{other}` is not 0 or 1"))),
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 3 {
            return Err(Error::parse(&name, line_no, format!("expected {} fields, found {}", dim + 3, fields.len())));
        }
        let vector = fields[3..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::parse(&name, line_no, format!("bad number `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(HybridRow {
            id: fields[0].to_string(),
            flags: ModalityFlags {
                text_absent: flag(fields[1], line_no)?,
                interaction_absent: flag(fields[2], line_no)?,
            },
            vector,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text_features::Provenance;

    fn text(owner: &str, v: Vec<f64>) -> TextVector {
        TextVector {
            owner: owner.into(),
            vector: v,
            provenance: Provenance::Static,
            absent: false,
        }
    }

    fn inter(v: Vec<f64>) -> Lookup {
        Lookup { vector: v, absent: false }
    }

    #[test]
    fn tweet_level_dimensions() {
        let f = fuse_tweet_level(
            &text("t", vec![0.1; 300]),
            &text("u", vec![0.2; 300]),
            &inter(vec![0.3; 20]),
            "u",
            FusionOptions::default(),
        )
        .unwrap();
        assert_eq!(f.vector.len(), 620);
        assert_eq!((f.tweet_text.clone(), f.user_text.clone(), f.interaction.clone()), (0..300, 300..600, 600..620));
    }

    #[test]
    fn absent_interaction_is_zero_filled() {
        let missing = Lookup { vector: vec![0.0; 20], absent: true };
        let f = fuse_tweet_level(&text("t", vec![1.0; 4]), &text("u", vec![1.0; 4]), &missing, "u", FusionOptions::default()).unwrap();
        assert!(f.flags.interaction_absent);
        assert!(f.interaction().iter().all(|&v| v == 0.0));
        assert_eq!(f.interaction().len(), 20);
    }

    #[test]
    fn segments_round_trip() {
        let (t, u, i) = (vec![1.5, -2.0], vec![0.25, 9.0], vec![3.0, 4.0, 5.0]);
        let f = fuse_tweet_level(&text("t", t.clone()), &text("u", u.clone()), &inter(i.clone()), "u", FusionOptions::default()).unwrap();
        assert_eq!((f.tweet_text(), f.user_text(), f.interaction()), (&t[..], &u[..], &i[..]));
        let g = fuse_user_level(&text("u", u.clone()), &inter(i.clone()), FusionOptions::default()).unwrap();
        assert_eq!((g.user_text(), g.interaction()), (&u[..], &i[..]));
    }

    #[test]
    fn user_level_dimensions_and_zero_text() {
        let f = fuse_user_level(&text("u", vec![0.0; 300]), &inter(vec![0.5; 20]), FusionOptions::default()).unwrap();
        assert_eq!(f.vector.len(), 320);
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm(&f.vector) - norm(f.interaction())).abs() < 1e-15);
    }

    #[test]
    fn all_absent_is_an_error() {
        let no_text = TextVector::absent("u", 3, Provenance::Tfidf);
        let no_inter = Lookup { vector: vec![0.0; 2], absent: true };
        assert!(fuse_user_level(&no_text, &no_inter, FusionOptions::default()).is_err());
        let no_tweet = TextVector::absent("t", 3, Provenance::Static);
        assert!(fuse_tweet_level(&no_tweet, &no_text, &no_inter, "u", FusionOptions::default()).is_err());
    }

    #[test]
    fn normalized_segments_have_unit_norm() {
        let f = fuse_user_level(&text("u", vec![3.0, 4.0]), &inter(vec![0.0, 2.0]), FusionOptions { normalize_segments: true }).unwrap();
        assert_eq!(f.vector, [0.6, 0.8, 0.0, 1.0]);
    }

    #[test]
    fn csv_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hybrid.csv");
        let rows = vec![
            HybridRow { id: "a".into(), flags: ModalityFlags { text_absent: true, interaction_absent: false }, vector: vec![0.0, 1.25] },
            HybridRow { id: "b".into(), flags: ModalityFlags::default(), vector: vec![-3.5, 1e-7] },
        ];
        write_hybrid_csv(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("id,flag_text,flag_inter,f1,f2\na,1,0,0,1.25\n"));
        assert_eq!(read_hybrid_csv(&path).unwrap(), rows);
    }
}
