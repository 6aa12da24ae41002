//! Ratings and item-group data.
//!
//! The loaders read the MovieLens `.dat` layout: `UserID::MovieID::Rating::Timestamp`
//! for ratings and `MovieID::Title::Genre1|Genre2|...` for movies. External IDs
//! are re-indexed densely in sorted order so that the same files always give
//! the same internal indices.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::ids::{GroupId, ItemId, UserId};

pub type GroupSet = BTreeSet<GroupId>;

const FIELD_SEP: &str = "::";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: UserId,
    pub item: ItemId,
    pub value: f64,
    pub timestamp: Option<i64>,
}

/// Sparse explicit-feedback observations.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingDataset {
    user_ids: Vec<u32>,
    item_ids: Vec<u32>,
    observations: Vec<Rating>,
}

impl RatingDataset {
    /// Build a dataset with external IDs `1..=num_users` and `1..=num_items`.
    pub fn new(num_users: usize, num_items: usize, observations: Vec<Rating>) -> Result<Self> {
        let user_ids = (1..=num_users as u32).collect();
        let item_ids = (1..=num_items as u32).collect();
        Self::with_external_ids(user_ids, item_ids, observations)
    }

    pub fn with_external_ids(
        user_ids: Vec<u32>,
        item_ids: Vec<u32>,
        observations: Vec<Rating>,
    ) -> Result<Self> {
        let mut pairs = std::collections::HashSet::with_capacity(observations.len());
        for (k, r) in observations.iter().enumerate() {
            if r.user.index() >= user_ids.len() || r.item.index() >= item_ids.len() {
                return Err(Error::Argument(format!(
                    "observation {k} references user {} / item {} outside {}x{}",
                    r.user,
                    r.item,
                    user_ids.len(),
                    item_ids.len()
                )));
            }
            if !(1.0..=5.0).contains(&r.value) {
                return Err(Error::RatingRange {
                    line: k + 1,
                    value: r.value,
                });
            }
            if !pairs.insert((r.user, r.item)) {
                return Err(Error::Argument(format!(
                    "duplicate observation for user {} item {}",
                    r.user, r.item
                )));
            }
        }
        Ok(RatingDataset {
            user_ids,
            item_ids,
            observations,
        })
    }

    pub fn num_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn observations(&self) -> &[Rating] {
        &self.observations
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// External ID of every internal user index.
    pub fn user_ids(&self) -> &[u32] {
        &self.user_ids
    }

    /// External ID of every internal item index. This is the item index map
    /// expected by [`parse_item_groups`].
    pub fn item_ids(&self) -> &[u32] {
        &self.item_ids
    }

    /// Rated items per user.
    pub fn items_by_user(&self) -> Vec<BTreeSet<ItemId>> {
        let mut out = vec![BTreeSet::new(); self.num_users()];
        for r in &self.observations {
            out[r.user.index()].insert(r.item);
        }
        out
    }

    /// Write the dataset back in the double-colon format.
    pub fn write_dat<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.observations {
            let u = self.user_ids[r.user.index()];
            let i = self.item_ids[r.item.index()];
            match r.timestamp {
                Some(ts) => writeln!(w, "{u}::{i}::{}::{ts}", r.value)?,
                None => writeln!(w, "{u}::{i}::{}", r.value)?,
            }
        }
        Ok(())
    }
}

/// Item to group membership (the mapping `M`).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMapping {
    names: Vec<String>,
    membership: Vec<Vec<GroupId>>,
}

impl GroupMapping {
    pub fn new(names: Vec<String>, membership: Vec<Vec<GroupId>>) -> Result<Self> {
        let membership = membership
            .into_iter()
            .enumerate()
            .map(|(item, mut groups)| {
                groups.sort_unstable();
                groups.dedup();
                if groups.is_empty() {
                    return Err(Error::Argument(format!("item {item} has no group")));
                }
                if let Some(g) = groups.iter().find(|g| g.index() >= names.len()) {
                    return Err(Error::Argument(format!(
                        "item {item} maps to group {g} but only {} groups exist",
                        names.len()
                    )));
                }
                Ok(groups)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GroupMapping { names, membership })
    }

    pub fn num_groups(&self) -> usize {
        self.names.len()
    }

    pub fn num_items(&self) -> usize {
        self.membership.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Groups of `item`, sorted ascending. Panics on an out-of-range item.
    pub fn groups_of(&self, item: ItemId) -> &[GroupId] {
        &self.membership[item.index()]
    }

    pub fn try_groups_of(&self, item: ItemId) -> Result<&[GroupId]> {
        self.membership
            .get(item.index())
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingMapping { items: vec![item] })
    }

    pub fn all_groups(&self) -> GroupSet {
        (0..self.num_groups()).map(GroupId::new).collect()
    }

    /// One `group_id<TAB>name` line per group.
    pub fn write_vocabulary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (id, name) in self.names.iter().enumerate() {
            writeln!(w, "{id}\t{name}")?;
        }
        Ok(())
    }
}

/// Union of the groups of `items`: the seen-group set of a user who rated them.
pub fn seen_groups<I>(mapping: &GroupMapping, items: I) -> Result<GroupSet>
where
    I: IntoIterator<Item = ItemId>,
{
    let mut seen = GroupSet::new();
    let mut missing = Vec::new();
    for item in items {
        match mapping.membership.get(item.index()) {
            Some(groups) => seen.extend(groups.iter().copied()),
            None => missing.push(item),
        }
    }
    if missing.is_empty() {
        Ok(seen)
    } else {
        Err(Error::MissingMapping { items: missing })
    }
}

/// Read lines with lossy UTF-8 decoding, skipping blank lines.
fn for_each_line<R, F>(mut reader: R, mut f: F) -> Result<()>
where
    R: BufRead,
    F: FnMut(usize, &str) -> Result<()>,
{
    let mut buf = Vec::new();
    let mut lineno = 0;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
        if n == 0 {
            return Ok(());
        }
        lineno += 1;
        let line = String::from_utf8_lossy(&buf);
        let line = line.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            continue;
        }
        f(lineno, line)?;
    }
}

fn parse_field<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} {s:?}"),
    })
}

struct RawRating {
    line: usize,
    user: u32,
    item: u32,
    value: f64,
    timestamp: Option<i64>,
}

/// Parse `UserID::MovieID::Rating[::Timestamp]` lines.
pub fn parse_ratings<R: BufRead>(reader: R) -> Result<RatingDataset> {
    let mut raw = Vec::new();
    for_each_line(reader, |line, text| {
        let fields: Vec<&str> = text.split(FIELD_SEP).collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let user = parse_field(line, "user id", fields[0])?;
        let item = parse_field(line, "item id", fields[1])?;
        let value: f64 = parse_field(line, "rating", fields[2])?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("invalid rating {:?}", fields[2]),
            });
        }
        if !(1.0..=5.0).contains(&value) {
            return Err(Error::RatingRange { line, value });
        }
        let timestamp = match fields.get(3) {
            Some(ts) => Some(parse_field(line, "timestamp", ts)?),
            None => None,
        };
        raw.push(RawRating {
            line,
            user,
            item,
            value,
            timestamp,
        });
        Ok(())
    })?;

    let user_ids = sorted_distinct(raw.iter().map(|r| r.user));
    let item_ids = sorted_distinct(raw.iter().map(|r| r.item));
    let user_index = index_of(&user_ids);
    let item_index = index_of(&item_ids);

    let mut pairs = std::collections::HashSet::with_capacity(raw.len());
    let mut observations = Vec::with_capacity(raw.len());
    for r in raw {
        let user = UserId::new(user_index[&r.user]);
        let item = ItemId::new(item_index[&r.item]);
        if !pairs.insert((user, item)) {
            return Err(Error::Parse {
                line: r.line,
                message: format!("duplicate rating for user {} movie {}", r.user, r.item),
            });
        }
        observations.push(Rating {
            user,
            item,
            value: r.value,
            timestamp: r.timestamp,
        });
    }
    Ok(RatingDataset {
        user_ids,
        item_ids,
        observations,
    })
}

fn sorted_distinct(ids: impl Iterator<Item = u32>) -> Vec<u32> {
    let set: BTreeSet<u32> = ids.collect();
    set.into_iter().collect()
}

fn index_of(ids: &[u32]) -> HashMap<u32, usize> {
    ids.iter().enumerate().map(|(i, &id)| (id, i)).collect()
}

/// Parse `MovieID::Title::Genre1|Genre2|...` lines into a mapping over the
/// items of `item_ids` (external ID per internal index).
///
/// Genres get group IDs in first-seen order over the whole file. Movies that
/// are not in `item_ids` still contribute to the vocabulary.
pub fn parse_item_groups<R: BufRead>(reader: R, item_ids: &[u32]) -> Result<GroupMapping> {
    let item_index = index_of(item_ids);
    let mut names: Vec<String> = Vec::new();
    let mut name_index: HashMap<String, GroupId> = HashMap::new();
    let mut membership: Vec<Option<Vec<GroupId>>> = vec![None; item_ids.len()];
    let mut seen_movies = std::collections::HashSet::new();

    for_each_line(reader, |line, text| {
        let (id, rest) = text.split_once(FIELD_SEP).ok_or_else(|| Error::Parse {
            line,
            message: "expected 3 fields".into(),
        })?;
        let (_title, genres) = rest.rsplit_once(FIELD_SEP).ok_or_else(|| Error::Parse {
            line,
            message: "expected 3 fields".into(),
        })?;
        let movie: u32 = parse_field(line, "movie id", id)?;
        if !seen_movies.insert(movie) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate movie {movie}"),
            });
        }
        let mut groups = Vec::new();
        for genre in genres.split('|').map(str::trim).filter(|g| !g.is_empty()) {
            let gid = *name_index.entry(genre.to_string()).or_insert_with(|| {
                names.push(genre.to_string());
                GroupId::new(names.len() - 1)
            });
            groups.push(gid);
        }
        if groups.is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("movie {movie} has no genre"),
            });
        }
        if let Some(&idx) = item_index.get(&movie) {
            membership[idx] = Some(groups);
        }
        Ok(())
    })?;

    let missing: Vec<ItemId> = membership
        .iter()
        .enumerate()
        .filter(|(_, m)| m.is_none())
        .map(|(i, _)| ItemId::new(i))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingMapping { items: missing });
    }
    GroupMapping::new(names, membership.into_iter().flatten().collect())
}
