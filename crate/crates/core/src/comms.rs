//! Inter-agent messaging: topology, per-message dropout and cached teammate views.
//!
//! A message carries the sender's belief and pose as one unit. The receiver
//! keeps the last message it got from each teammate; when a message is
//! dropped the cached copy simply ages.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{OccupancyGrid, Point};
use crate::rng::{self, StreamRng};
use crate::world::merge_into;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    Full,
    /// Each agent hears from its `k` nearest teammates.
    KNearest { k: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommsConfig {
    pub topology: Topology,
    /// Probability that any single message is lost.
    pub dropout_p: f64,
    /// Salt for the comms random stream.
    pub seed: u64,
}

impl Default for CommsConfig {
    fn default() -> Self {
        Self { topology: Topology::Full, dropout_p: 0.0, seed: 0 }
    }
}

impl CommsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.dropout_p) {
            return Err(Error::config(format!("comms.dropout_p must be in [0, 1], got {}", self.dropout_p)));
        }
        if let Topology::KNearest { k } = self.topology {
            if k == 0 {
                return Err(Error::config("comms.topology.k must be at least 1"));
            }
        }
        Ok(())
    }

    /// The dedicated comms stream of an episode.
    pub fn stream(&self, episode_seed: u64) -> StreamRng {
        rng::stream(episode_seed, "comms", self.seed)
    }
}

/// `adj[r]` lists the agents whose messages `r` receives, ascending by
/// distance with ties broken by index.
pub fn build_topology(positions: &[Point], topology: Topology) -> Vec<Vec<usize>> {
    let n = positions.len();
    (0..n)
        .map(|r| {
            let mut others: Vec<usize> = (0..n).filter(|&s| s != r).collect();
            match topology {
                Topology::Full => others,
                Topology::KNearest { k } => {
                    let d2 = |s: usize| {
                        let (a, b) = (positions[r], positions[s]);
                        (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y)
                    };
                    others.sort_by(|&a, &b| d2(a).total_cmp(&d2(b)).then(a.cmp(&b)));
                    others.truncate(k.min(n.saturating_sub(1)));
                    others
                }
            }
        })
        .collect()
}

/// What a receiver last heard from one sender.
#[derive(Clone, Debug, PartialEq)]
pub struct TeammateView {
    pub belief: Arc<OccupancyGrid>,
    pub pose: Point,
    /// Decision step at which the message arrived.
    pub stamp: usize,
}

/// One directed message attempt.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub receiver: usize,
    pub sender: usize,
    pub delivered: bool,
}

/// Per-receiver cache of teammate messages, indexed `[receiver][sender]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewTable {
    views: Vec<Vec<Option<TeammateView>>>,
}

impl ViewTable {
    /// Every agent starts out knowing every teammate's initial belief and pose,
    /// stamped at step 0.
    pub fn initial(beliefs: &[&OccupancyGrid], poses: &[Point]) -> Result<Self> {
        if beliefs.len() != poses.len() || beliefs.is_empty() {
            return Err(Error::domain("view table needs one belief and one pose per agent"));
        }
        let shared: Vec<Arc<OccupancyGrid>> = beliefs.iter().map(|b| Arc::new((*b).clone())).collect();
        let n = beliefs.len();
        let views = (0..n)
            .map(|r| {
                (0..n)
                    .map(|s| {
                        (s != r).then(|| TeammateView { belief: Arc::clone(&shared[s]), pose: poses[s], stamp: 0 })
                    })
                    .collect()
            })
            .collect();
        Ok(Self { views })
    }

    pub fn n_agents(&self) -> usize {
        self.views.len()
    }

    pub fn view(&self, receiver: usize, sender: usize) -> Option<&TeammateView> {
        self.views.get(receiver)?.get(sender)?.as_ref()
    }

    /// Teammate poses as `receiver` last heard them, in agent order without
    /// `receiver` itself.
    pub fn poses_for(&self, receiver: usize) -> Vec<Point> {
        self.views[receiver].iter().flatten().map(|v| v.pose).collect()
    }

    /// Join of the cached teammate maps as seen by `receiver`, or `None` for
    /// a team of one.
    pub fn teammates_merged(&self, receiver: usize) -> Result<Option<OccupancyGrid>> {
        let mut it = self.views[receiver].iter().flatten();
        let Some(first) = it.next() else { return Ok(None) };
        let mut acc = (*first.belief).clone();
        for v in it {
            merge_into(&mut acc, &v.belief)?;
        }
        Ok(Some(acc))
    }

    /// `own` joined with every cached teammate map of `receiver`.
    pub fn merged_for(&self, receiver: usize, own: &OccupancyGrid) -> Result<OccupancyGrid> {
        let mut acc = own.clone();
        for v in self.views[receiver].iter().flatten() {
            merge_into(&mut acc, &v.belief)?;
        }
        Ok(acc)
    }
}

/// One exchange round. Messages are attempted for every directed edge of the
/// topology built on the current positions, receivers ascending and senders
/// in adjacency order, with one uniform draw each; a message arrives when the
/// draw is at least `dropout_p`.
pub fn exchange(
    beliefs: &[&OccupancyGrid],
    poses: &[Point],
    views: &mut ViewTable,
    cfg: &CommsConfig,
    step: usize,
    rng: &mut StreamRng,
) -> Result<Vec<Delivery>> {
    let n = views.n_agents();
    if beliefs.len() != n || poses.len() != n {
        return Err(Error::domain(format!("exchange got {} beliefs and {} poses for {n} agents", beliefs.len(), poses.len())));
    }
    let adj = build_topology(poses, cfg.topology);
    let mut snapshots: Vec<Option<Arc<OccupancyGrid>>> = vec![None; n];
    let mut events = Vec::new();
    for (r, senders) in adj.iter().enumerate() {
        for &s in senders {
            let draw: f64 = rng.gen();
            let delivered = draw >= cfg.dropout_p;
            if delivered {
                let belief = snapshots[s].get_or_insert_with(|| Arc::new(beliefs[s].clone()));
                views.views[r][s] = Some(TeammateView { belief: Arc::clone(belief), pose: poses[s], stamp: step });
            }
            events.push(Delivery { receiver: r, sender: s, delivered });
        }
    }
    Ok(events)
}
