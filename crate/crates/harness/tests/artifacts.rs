use std::fs;

use explore_core::planners::decode_goal;
use explore_core::world::build_world;
use explore_core::CellState;
use explore_harness::config::ExperimentConfig;
use explore_harness::dataset::{collect_log_paths, export_dataset, read_log, sidecar_path, Dataset};
use explore_harness::encode::{encode_agent_centric, EncodeOptions, SIDE};
use explore_harness::plot::{coverage_band, coverage_svg, emit_plots, CurveFrame};
use explore_harness::runner::run_experiment;
use explore_harness::HarnessError;

fn small_run(extra: &str) -> (tempfile::TempDir, ExperimentConfig) {
    let text = format!(
        r#"name = "art"
master_seed = 3
episodes = 2

[scenario]
kind = "maze"
side_length = 48.0
corridor_width = 6
wall_thickness = 3
global_step_budget = 8
sets = [{{ name = "s", first_seed = 7, count = 2 }}]
{extra}"#
    );
    let cfg = ExperimentConfig::parse(&text, "art.toml").unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, dir.path(), 1).unwrap();
    (dir, cfg)
}

#[test]
fn dataset_round_trips_through_the_sidecar() {
    let (dir, _) = small_run("[matrix]\nplanners = [\"mmpf\"]\nteam_sizes = [1, 3]\n");
    let paths = collect_log_paths(dir.path()).unwrap();
    let logs: Vec<_> = paths.iter().map(|p| read_log(p).unwrap()).collect();
    let out = dir.path().join("data.jsonl");
    let summary = export_dataset(&logs, &out, EncodeOptions::default()).unwrap();
    assert!(sidecar_path(&out).exists());
    let ds = Dataset::open(&out).unwrap();
    assert_eq!((ds.header.episodes, ds.header.records), (summary.episodes, summary.records));
    assert_eq!(ds.header.tensor_shape, [128, 128, 3]);

    for (e, log) in logs.iter().enumerate() {
        let entry = &ds.episodes[e];
        assert_eq!(entry.episode_seed, log.header.episode_seed);
        let truth = ds.grid(entry.map_gt).unwrap();
        assert_eq!(truth, build_world(&log.header.config.scenario).unwrap());
        let n = log.n_agents();
        let recs: Vec<_> = ds.records.iter().filter(|r| r.episode == e).collect();
        assert!(recs.len() <= n * log.decisions.len());
        for r in recs {
            assert_eq!(Some(r.goal), log.decisions[r.decision - 1].goals[r.agent]);
            assert_eq!(decode_goal(r.action(), &entry.patch_grid), r.goal);
            r.action().validate(&entry.patch_grid).unwrap();
            assert_eq!(r.teammate_poses.len(), n - 1);
            assert_eq!(r.map_minus_i.is_some(), n > 1);

            let own = ds.grid(r.map_i).unwrap();
            assert!(own.same_geometry(&truth));
            // beliefs never contradict the truth
            for i in 0..own.len() {
                if own.get(i).is_known() {
                    assert_eq!(own.get(i), truth.get(i));
                }
            }
            let mut merged = own.clone();
            if let Some(b) = r.map_minus_i {
                explore_core::world::merge_into(&mut merged, &ds.grid(b).unwrap()).unwrap();
            }
            let tensor = ds.tensor(r.tensor).unwrap();
            let again = encode_agent_centric(&own, &merged, r.state.position(), r.state.theta, &r.teammate_poses, EncodeOptions::default());
            assert_eq!(tensor, again);
            assert_eq!(tensor.count_nonzero(2), n);
            assert_eq!(tensor.get(SIDE / 2, SIDE / 2, 2), 1.0, "own blip at the centre");
        }
    }
}

#[test]
fn empty_export_writes_only_a_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty.jsonl");
    let s = export_dataset(&[], &out, EncodeOptions::default()).unwrap();
    assert_eq!((s.episodes, s.records), (0, 0));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("{\"type\":\"header\""));
    assert_eq!(fs::metadata(sidecar_path(&out)).unwrap().len(), 0);
    let ds = Dataset::open(&out).unwrap();
    assert!(ds.records.is_empty() && ds.episodes.is_empty());
}

#[test]
fn export_rejects_logs_that_do_not_replay() {
    let (dir, _) = small_run("");
    let mut log = read_log(&collect_log_paths(dir.path()).unwrap()[0]).unwrap();
    log.decisions[0].er += 0.25;
    let err = export_dataset(&[log], &dir.path().join("x.jsonl"), EncodeOptions::default()).unwrap_err();
    assert!(matches!(err, HarnessError::ReplayMismatch(_)), "{err}");
}

#[test]
fn unwritable_export_path_is_an_io_error() {
    let err = export_dataset(&[], std::path::Path::new("/nonexistent-dir/sub/d.jsonl"), EncodeOptions::default())
        .unwrap_err();
    assert!(matches!(err, HarnessError::Io { .. }));
    assert_eq!(err.exit_code(), 1);
}

fn polyline(svg: &str, class: &str) -> Vec<(f64, f64)> {
    let tag = format!("class=\"{class}\" points=\"");
    let start = svg.find(&tag).unwrap() + tag.len();
    let body = &svg[start..start + svg[start..].find('"').unwrap()];
    body.split(' ')
        .map(|xy| {
            let (x, y) = xy.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect()
}

#[test]
fn coverage_polyline_matches_the_series() {
    let er = vec![0.1, 0.25, 0.25, 0.5, 0.875, 0.95];
    let svg = coverage_svg("fixture", &[er.clone()]);
    let pts = polyline(&svg, "mean");
    let f = CurveFrame::new(er.len() - 1);
    assert_eq!(pts.len(), er.len());
    for (k, ((x, y), want)) in pts.iter().zip(&er).enumerate() {
        assert!((x - f.x(k)).abs() <= 5e-4, "x at {k}");
        assert!((f.er(*y) - want).abs() <= 5e-4 / f.height, "ER at {k}: {} vs {want}", f.er(*y));
    }
    // evenly spaced from the left edge to the right edge
    assert_eq!(pts[0].0, f.left);
    assert_eq!(pts.last().unwrap().0, f.left + f.width);
}

#[test]
fn identical_episodes_have_a_zero_width_band() {
    let er = vec![0.2, 0.4, 0.9];
    for series in [vec![er.clone()], vec![er.clone(), er.clone()]] {
        let (_, std) = coverage_band(&series);
        assert!(std.iter().all(|&s| s == 0.0));
        let svg = coverage_svg("same", &series);
        let band = polyline(&svg, "band");
        let mean = polyline(&svg, "mean");
        // the band polygon runs along the mean and back again
        let back: Vec<_> = mean.iter().rev().copied().collect();
        assert_eq!(band, [mean.clone(), back].concat());
    }
}

#[test]
fn band_holds_last_values_of_short_series() {
    let (mean, std) = coverage_band(&[vec![0.2, 0.6], vec![0.2, 0.4, 0.8]]);
    assert_eq!(mean.len(), 3);
    assert!((mean[2] - 0.7).abs() < 1e-15);
    assert!((std[2] - 0.1).abs() < 1e-15);
}

#[test]
fn plots_are_written_for_a_result_directory() {
    let (dir, _) = small_run("[matrix]\nplanners = [\"rrt\", \"voronoi\"]\n");
    let written = emit_plots(dir.path()).unwrap();
    let names: Vec<String> = written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(
        names,
        vec![
            "coverage_c000.svg",
            "coverage_c001.svg",
            "trajectory_c000_e0000.svg",
            "trajectory_c000_e0001.svg",
            "trajectory_c001_e0000.svg",
            "trajectory_c001_e0001.svg",
        ]
    );
    let first: Vec<Vec<u8>> = written.iter().map(|p| fs::read(p).unwrap()).collect();
    emit_plots(dir.path()).unwrap();
    let second: Vec<Vec<u8>> = written.iter().map(|p| fs::read(p).unwrap()).collect();
    assert_eq!(first, second);

    // trajectory overlay: one rect per obstacle run, one path per agent
    let log = read_log(&collect_log_paths(dir.path()).unwrap()[0]).unwrap();
    let truth = build_world(&log.header.config.scenario).unwrap();
    let svg = fs::read_to_string(&written[2]).unwrap();
    let runs: usize = (0..truth.height())
        .map(|row| {
            (0..truth.width())
                .filter(|&c| {
                    truth.cell(c, row) == CellState::Obstacle && (c == 0 || truth.cell(c - 1, row) != CellState::Obstacle)
                })
                .count()
        })
        .sum();
    assert_eq!(svg.matches("<rect x=").count(), runs + 1);
    for agent in 0..log.n_agents() {
        assert_eq!(polyline(&svg, &format!("agent{agent}")).len(), log.steps.len() + 1);
    }
}

#[test]
fn plotting_without_results_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(emit_plots(dir.path()), Err(HarnessError::Io { .. })));
    assert!(matches!(emit_plots(&dir.path().join("missing")), Err(HarnessError::Io { .. })));
}
