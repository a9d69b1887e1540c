use std::fs;

use voxseg_core::kv::KeyValues;
use voxseg_core::metrics::seed_eval;
use voxseg_sim::benchmark::{labels_name, raw_name};
use voxseg_sim::*;

fn small(frames: u32, n: usize, mode: Mode) -> BenchmarkConfig {
    let sim = SimParams {
        n_initial: n,
        n_max: 2 * n.max(1),
        frames,
        dims: [48, 48, 16],
        spacing: [1.0, 1.0, 2.0],
        shell: Shell { center: [24.0, 24.0, 15.0], r_inner: 6.0, r_outer: 12.0, steepness: 1.0 },
        radius_range: (3.0, 3.5),
        cycle_range: (4, 6),
        relax_steps: 10,
        seed: 5,
        ..SimParams::default()
    };
    let acq = AcquisitionParams { mode, psf: Some(Psf::Gaussian { sigma_vox: [1.0; 3] }), ..AcquisitionParams::default() };
    BenchmarkConfig { sim, acq }
}

#[test]
fn simultaneous_multiview_writes_two_views_per_frame() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_benchmark(&small(10, 4, Mode::SiMv), dir.path()).unwrap();
    let names: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(names.iter().filter(|n| n.starts_with("raw_") && n.ends_with(".tif")).count(), 20);
    assert_eq!(names.iter().filter(|n| n.starts_with("labels_") && n.ends_with(".tif")).count(), 10);
    assert!(names.contains(&raw_name(9, 1)) && names.contains(&labels_name(9)));
    assert_eq!(ds.frames.len(), 10);
    let reopened = Dataset::open(dir.path()).unwrap();
    assert_eq!(reopened.frames, ds.frames);
    let manifest = KeyValues::read(&ds.manifest()).unwrap();
    assert!(manifest.get_f64("snr_t0009_v1").unwrap().unwrap() > 1.0);
}

#[test]
fn sequential_multiview_alternates_views() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_benchmark(&small(4, 3, Mode::SeMv), dir.path()).unwrap();
    let views: Vec<u8> = ds.frames.iter().map(|f| f.views[0].0).collect();
    assert_eq!(views, vec![0, 1, 0, 1]);
    assert!(ds.frames.iter().all(|f| f.views.len() == 1));
}

#[test]
fn one_object_dataset_scores_perfectly_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_benchmark(&small(1, 1, Mode::Sv), dir.path()).unwrap();
    let truth = ds.truth().unwrap();
    assert_eq!(truth.len(), 1);
    let labels = ds.labels(0).unwrap();
    let e = seed_eval(&[truth[0].pos], &labels);
    assert_eq!((e.tp, e.fp, e.fn_), (1, 0, 0));
    assert_eq!(e.f_score, 1.0);
    let img = ds.image(0, 0).unwrap();
    assert_eq!(img.dims(), [48, 48, 16]);
    assert_eq!(img.spacing(), [1.0, 1.0, 2.0]);
}

#[test]
fn same_seed_gives_identical_files() {
    let cfg = small(3, 4, Mode::SiMv);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_benchmark(&cfg, a.path()).unwrap();
    generate_benchmark(&cfg, b.path()).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 10);
    for n in &names {
        assert_eq!(fs::read(a.path().join(n)).unwrap(), fs::read(b.path().join(n)).unwrap(), "{n:?}");
    }
    let other = BenchmarkConfig { sim: SimParams { seed: 6, ..cfg.sim.clone() }, ..cfg };
    let c = tempfile::tempdir().unwrap();
    generate_benchmark(&other, c.path()).unwrap();
    assert_ne!(fs::read(a.path().join(raw_name(0, 0))).unwrap(), fs::read(c.path().join(raw_name(0, 0))).unwrap());
}

#[test]
fn manifest_round_trips() {
    let cfg = small(7, 3, Mode::SeMv);
    assert_eq!(BenchmarkConfig::from_kv(&cfg.to_kv()).unwrap(), cfg);
    let desk = BenchmarkConfig::desk(3, 2, Mode::SiMv, 0.004);
    assert_eq!(BenchmarkConfig::from_kv(&desk.to_kv()).unwrap(), desk);
    let sparse = KeyValues::parse("seed=11\nsigma_agn=0.002\nattenuation=off\npsf=none\n").unwrap();
    let c = BenchmarkConfig::from_kv(&sparse).unwrap();
    assert_eq!(c.sim.seed, 11);
    assert_eq!(c.acq.sigma_agn, 0.002);
    assert!(c.acq.attenuation.is_none() && c.acq.psf.is_none());
    assert!(BenchmarkConfig::from_kv(&KeyValues::parse("shell_r_inner=40\n").unwrap()).is_err());
    assert!(BenchmarkConfig::from_kv(&KeyValues::parse("mode=4D\n").unwrap()).is_err());
}

#[test]
fn unwritable_output_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("occupied");
    fs::write(&blocker, b"x").unwrap();
    let err = generate_benchmark(&small(1, 1, Mode::Sv), &blocker.join("sub")).unwrap_err();
    assert!(err.to_string().contains("occupied"), "{err}");
}

#[test]
fn truth_lineage_links_parents_to_children() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_benchmark(&small(8, 3, Mode::Sv), dir.path()).unwrap();
    let rows = ds.truth().unwrap();
    let g = truth_track_graph(&rows, ds.config.sim.spacing).unwrap();
    assert_eq!(g.nodes().len(), rows.len());
    let children: Vec<&TruthRow> = rows.iter().filter(|r| r.parent_id.is_some()).collect();
    assert!(!children.is_empty());
    let outs = g.out_degrees();
    assert!(outs.contains(&2), "a division shows as a branching node");
    for c in children {
        let first = rows.iter().filter(|r| r.id == c.id).map(|r| r.frame).min().unwrap();
        if c.frame == first {
            let to = g.node_index(first, c.id).unwrap();
            let from = g.node_index(first - 1, c.parent_id.unwrap()).unwrap();
            assert!(g.has_edge(from, to));
        }
    }
}
