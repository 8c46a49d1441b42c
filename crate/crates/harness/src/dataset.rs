//! Pre-training dataset export.
//!
//! Each log is replayed with an observer; the replay must reproduce the log
//! exactly. Every (decision, agent) pair with a goal becomes one record. The
//! JSONL index holds a header line, one line per episode and one per record;
//! grids and tensors live in a binary sidecar and are referenced by byte
//! range.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use explore_core::planners::{encode_goal, BiLevelAction, PatchGrid};
use explore_core::sim::{run_episode_observed, DecisionSnapshot, EpisodeLog, EpisodeObserver};
use explore_core::vehicle::AgentState;
use explore_core::world::{build_world, merge_into};
use explore_core::{OccupancyGrid, Point};
use serde::{Deserialize, Serialize};

use crate::encode::{encode_agent_centric, AgentCentricMap, EncodeOptions, CHANNELS, SIDE};
use crate::error::{HarnessError, Result};

pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// Byte range in the sidecar file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blob {
    pub offset: u64,
    pub len: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema_version: u32,
    /// Sidecar file name, relative to the index file.
    pub sidecar: String,
    pub episodes: usize,
    pub records: usize,
    pub tensor_shape: [usize; 3],
    pub encoding: EncodeOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEntry {
    pub episode: usize,
    pub episode_seed: u64,
    pub n_agents: usize,
    pub patch_grid: PatchGrid,
    /// Ground-truth grid, shared by all records of the episode.
    pub map_gt: Blob,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTuple {
    pub episode: usize,
    pub decision: usize,
    pub agent: usize,
    pub state: AgentState,
    pub teammate_poses: Vec<Point>,
    /// Goal as logged.
    pub goal: Point,
    /// Patch index.
    pub a1: usize,
    /// Offset inside the patch.
    pub a2: [f64; 2],
    pub map_i: Blob,
    /// Join of the teammate maps the agent holds; absent for a team of one.
    pub map_minus_i: Option<Blob>,
    pub tensor: Blob,
}

impl DecisionTuple {
    pub fn action(&self) -> BiLevelAction {
        BiLevelAction { g: self.a1, x: self.a2[0], y: self.a2[1] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(DatasetHeader),
    Episode(EpisodeEntry),
    Record(DecisionTuple),
}

/// Sidecar path next to an index path: the extension becomes `bin`.
pub fn sidecar_path(index: &Path) -> PathBuf {
    index.with_extension("bin")
}

struct Sidecar {
    out: BufWriter<File>,
    offset: u64,
}

impl Sidecar {
    fn put(&mut self, bytes: &[u8]) -> explore_core::Result<Blob> {
        self.out.write_all(bytes)?;
        let blob = Blob { offset: self.offset, len: bytes.len() as u64 };
        self.offset += bytes.len() as u64;
        Ok(blob)
    }
}

struct Collector<'a> {
    episode: usize,
    pg: PatchGrid,
    opts: EncodeOptions,
    sidecar: &'a mut Sidecar,
    records: Vec<DecisionTuple>,
}

impl EpisodeObserver for Collector<'_> {
    fn on_decision(&mut self, s: &DecisionSnapshot<'_>) -> explore_core::Result<()> {
        let Some(goal) = s.goal else { return Ok(()) };
        let action = encode_goal(goal, &self.pg)?;
        let mut merged = s.own_belief.clone();
        if let Some(m) = s.teammates_merged {
            merge_into(&mut merged, m)?;
        }
        let tensor = encode_agent_centric(
            s.own_belief,
            &merged,
            s.state.position(),
            s.state.theta,
            s.teammate_poses,
            self.opts,
        );
        let map_i = self.sidecar.put(&s.own_belief.to_bytes())?;
        let map_minus_i = s.teammates_merged.map(|m| self.sidecar.put(&m.to_bytes())).transpose()?;
        let tensor = self.sidecar.put(&tensor.to_le_bytes())?;
        self.records.push(DecisionTuple {
            episode: self.episode,
            decision: s.decision,
            agent: s.agent,
            state: s.state,
            teammate_poses: s.teammate_poses.to_vec(),
            goal,
            a1: action.g,
            a2: [action.x, action.y],
            map_i,
            map_minus_i,
            tensor,
        });
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExportSummary {
    pub episodes: usize,
    pub records: usize,
}

/// Replay `logs` and write the dataset index to `out` with its sidecar.
pub fn export_dataset(logs: &[EpisodeLog], out: &Path, opts: EncodeOptions) -> Result<ExportSummary> {
    let bin_path = sidecar_path(out);
    let bin = File::create(&bin_path).map_err(|e| HarnessError::io(&bin_path, e))?;
    let mut sidecar = Sidecar { out: BufWriter::new(bin), offset: 0 };
    let mut lines = Vec::new();
    let mut records = 0;
    for (episode, log) in logs.iter().enumerate() {
        let cfg = &log.header.config;
        let truth = build_world(&cfg.scenario)?;
        let (w, h) = truth.extent();
        let pg = PatchGrid::for_map(w, h);
        let map_gt = sidecar.put(&truth.to_bytes())?;
        let mut collector = Collector { episode, pg, opts, sidecar: &mut sidecar, records: Vec::new() };
        let replayed = run_episode_observed(cfg, log.header.episode_seed, &mut collector)?;
        if replayed != *log {
            return Err(HarnessError::ReplayMismatch(format!("episode {episode} does not replay to its log")));
        }
        let tuples = collector.records;
        records += tuples.len();
        lines.push(Line::Episode(EpisodeEntry {
            episode,
            episode_seed: log.header.episode_seed,
            n_agents: log.n_agents(),
            patch_grid: pg,
            map_gt,
        }));
        lines.extend(tuples.into_iter().map(Line::Record));
    }
    sidecar.out.flush().map_err(|e| HarnessError::io(&bin_path, e))?;

    let header = Line::Header(DatasetHeader {
        schema_version: DATASET_SCHEMA_VERSION,
        sidecar: bin_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        episodes: logs.len(),
        records,
        tensor_shape: [SIDE, SIDE, CHANNELS],
        encoding: opts,
    });
    let file = File::create(out).map_err(|e| HarnessError::io(out, e))?;
    let mut w = BufWriter::new(file);
    for line in std::iter::once(&header).chain(&lines) {
        let text = serde_json::to_string(line).expect("dataset line serializes");
        writeln!(w, "{text}").map_err(|e| HarnessError::io(out, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(out, e))?;
    Ok(ExportSummary { episodes: logs.len(), records })
}

/// A dataset index read back from disk.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub episodes: Vec<EpisodeEntry>,
    pub records: Vec<DecisionTuple>,
    pub sidecar: PathBuf,
}

impl Dataset {
    pub fn open(index: &Path) -> Result<Self> {
        let file = File::open(index).map_err(|e| HarnessError::io(index, e))?;
        let bad = |n: usize, m: String| HarnessError::Core(explore_core::Error::Parse(format!("{}:{n}: {m}", index.display())));
        let mut header = None;
        let mut episodes = Vec::new();
        let mut records = Vec::new();
        for (k, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| HarnessError::io(index, e))?;
            match serde_json::from_str::<Line>(&line).map_err(|e| bad(k + 1, e.to_string()))? {
                Line::Header(h) if k == 0 => header = Some(h),
                Line::Header(_) => return Err(bad(k + 1, "header must be the first line".into())),
                _ if header.is_none() => return Err(bad(k + 1, "missing header".into())),
                Line::Episode(e) => episodes.push(e),
                Line::Record(r) => records.push(r),
            }
        }
        let header = header.ok_or_else(|| bad(1, "empty dataset index".into()))?;
        if header.records != records.len() || header.episodes != episodes.len() {
            return Err(bad(1, "header counts disagree with the file".into()));
        }
        let sidecar = index.with_file_name(&header.sidecar);
        Ok(Self { header, episodes, records, sidecar })
    }

    pub fn blob(&self, blob: Blob) -> Result<Vec<u8>> {
        let mut f = File::open(&self.sidecar).map_err(|e| HarnessError::io(&self.sidecar, e))?;
        f.seek(SeekFrom::Start(blob.offset)).map_err(|e| HarnessError::io(&self.sidecar, e))?;
        let mut buf = vec![0; blob.len as usize];
        f.read_exact(&mut buf).map_err(|e| HarnessError::io(&self.sidecar, e))?;
        Ok(buf)
    }

    pub fn grid(&self, blob: Blob) -> Result<OccupancyGrid> {
        Ok(OccupancyGrid::from_bytes(&self.blob(blob)?)?)
    }

    pub fn tensor(&self, blob: Blob) -> Result<AgentCentricMap> {
        AgentCentricMap::from_le_bytes(&self.blob(blob)?)
            .ok_or_else(|| HarnessError::Core(explore_core::Error::Parse("tensor blob has the wrong size".into())))
    }
}

/// Episode logs under `path`: the file itself, or every `.jsonl` file in the
/// directory (or its `logs/` subdirectory), sorted by name.
pub fn collect_log_paths(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let dir = if path.join(crate::runner::LOG_DIR).is_dir() { path.join(crate::runner::LOG_DIR) } else { path.to_path_buf() };
    let entries = std::fs::read_dir(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| HarnessError::io(&dir, e))?.path();
        if p.extension().is_some_and(|x| x == "jsonl") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub fn read_log(path: &Path) -> Result<EpisodeLog> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    EpisodeLog::read_jsonl(BufReader::new(file)).map_err(|e| match e {
        explore_core::Error::Parse(m) => HarnessError::Core(explore_core::Error::Parse(format!("{}: {m}", path.display()))),
        other => other.into(),
    })
}
