//! End-to-end use of the public API: degrade, patch, batch, train, save.

use msce_core::data::{extract_patches, make_batches, PatchPair};
use msce_core::edge::{canny_hard, CannyConfig};
use msce_core::loss::{LossConfig, MuCandidates};
use msce_core::metrics::psnr;
use msce_core::nn::{checkpoint, Architecture, Model, ModelSpec};
use msce_core::optim::{Adam, AdamConfig};
use msce_core::resample::{bicubic_resize, synthesize_pair, DegradationSpec, PreBlur, Scale};
use msce_core::train::{dynamic_mu_epoch, train_epoch, validate, Replica};
use msce_core::PlaneImage;
use proptest::prelude::*;

fn scene(w: usize, h: usize, phase: usize) -> PlaneImage {
    PlaneImage::from_fn(w, h, |x, y| {
        let band = ((x + phase) / 6 + y / 9) % 3;
        let disk = (x as f32 - 20.0).powi(2) + (y as f32 - 18.0).powi(2) < 80.0;
        if disk {
            0.9
        } else {
            0.15 + 0.3 * band as f32
        }
    })
}

fn patches(phase: usize, spec: &DegradationSpec) -> Vec<PatchPair> {
    let pair = synthesize_pair(&scene(48, 48, phase), spec).unwrap();
    extract_patches(&pair, 16, 8).unwrap()
}

#[test]
fn both_architectures_learn_under_both_pipelines() {
    let scale = Scale::new(2).unwrap();
    for spec in [DegradationSpec::bicubic(scale), DegradationSpec::blurred(scale)] {
        for arch in [Architecture::Srcnn, Architecture::Espcn] {
            let train = patches(0, &spec);
            let val = make_batches(&patches(3, &spec), 8, 0, arch);
            let mut model = Model::new(&ModelSpec::small(arch, scale), 9);
            let mut opt = Adam::new(AdamConfig::conventional(), &model);
            let cfg = LossConfig::default();
            let before = validate(&model, &val, &cfg).unwrap();
            for epoch in 0..8 {
                train_epoch(&mut model, &mut opt, &make_batches(&train, 8, epoch, arch), &cfg).unwrap();
            }
            let after = validate(&model, &val, &cfg).unwrap();
            assert!(after.combined < before.combined, "{arch} {spec:?}: {before:?} -> {after:?}");
        }
    }
}

#[test]
fn trained_checkpoint_round_trips() {
    let scale = Scale::new(3).unwrap();
    let spec = DegradationSpec::bicubic(scale);
    let pair = synthesize_pair(&scene(48, 48, 1), &spec).unwrap();
    let train = extract_patches(&pair, 24, 12).unwrap();
    let mut model = Model::new(&ModelSpec::small(Architecture::Espcn, scale), 2);
    let mut opt = Adam::new(AdamConfig::default(), &model);
    train_epoch(&mut model, &mut opt, &make_batches(&train, 4, 1, Architecture::Espcn), &LossConfig::default()).unwrap();
    let back = checkpoint::decode(&checkpoint::encode(&model)).unwrap();
    assert_eq!(back, model);
    let lr = pair.lr.clone();
    assert_eq!(back.infer(&lr).unwrap(), model.infer(&lr).unwrap());
}

#[test]
fn dynamic_selection_over_default_grid() {
    let scale = Scale::new(2).unwrap();
    let spec = DegradationSpec::bicubic(scale);
    let train = make_batches(&patches(0, &spec), 8, 4, Architecture::Srcnn);
    let val = make_batches(&patches(5, &spec), 8, 0, Architecture::Srcnn);
    let base = Model::new(&ModelSpec::small(Architecture::Srcnn, scale), 4);
    let grid = MuCandidates::default();
    let mut replicas: Vec<Replica> = grid
        .values()
        .iter()
        .map(|&mu| Replica { mu, model: base.clone(), optim: Adam::new(AdamConfig::default(), &base) })
        .collect();
    for _ in 0..2 {
        let rec = dynamic_mu_epoch(&mut replicas, &train, &val, &LossConfig::default()).unwrap();
        assert!(grid.values().contains(&rec.chosen_mu()));
        let best = rec.outcomes[rec.chosen].breakdown().unwrap().combined;
        assert!(rec.outcomes.iter().all(|o| best <= o.breakdown().unwrap().combined));
        assert!(replicas.iter().all(|r| r.model == replicas[0].model));
    }
}

#[test]
fn blur_pipeline_loses_more_detail() {
    let hr = scene(64, 64, 2);
    let scale = Scale::new(4).unwrap();
    let plain = synthesize_pair(&hr, &DegradationSpec::bicubic(scale)).unwrap();
    let blurred = synthesize_pair(&hr, &DegradationSpec { scale, pre_blur: PreBlur::Gaussian { radius: 2.0 } }).unwrap();
    assert_ne!(plain.lr, blurred.lr);
    let up = |p: &PlaneImage| bicubic_resize(p, 64, 64);
    assert!(psnr(&up(&plain.lr), &hr, 4).unwrap() > psnr(&up(&blurred.lr), &hr, 4).unwrap());
}

#[test]
fn canny_finds_the_disk_rim() {
    let edges = canny_hard(&scene(48, 48, 0), &CannyConfig::default()).unwrap();
    // the rim crosses row 18 near x = 20 ± 9
    let row: Vec<usize> = (0..48).filter(|&x| edges.get(x, 18) == 1.0).collect();
    assert!(row.iter().any(|&x| (10..=12).contains(&x)), "{row:?}");
    assert!(row.iter().any(|&x| (28..=30).contains(&x)), "{row:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn batches_partition_the_patch_set(seed in any::<u64>(), batch in 1usize..12, stride in prop::sample::select(vec![4usize, 8, 16])) {
        let spec = DegradationSpec::bicubic(Scale::new(2).unwrap());
        let pair = synthesize_pair(&scene(40, 36, 1), &spec).unwrap();
        let ps = extract_patches(&pair, 16, stride).unwrap();
        let batches = make_batches(&ps, batch, seed, Architecture::Espcn);
        let mut seen: Vec<Vec<u32>> = batches
            .iter()
            .flat_map(|b| b.targets.data().chunks(16 * 16).map(|c| c.iter().map(|v| v.to_bits()).collect::<Vec<_>>()).collect::<Vec<_>>())
            .collect();
        let mut want: Vec<Vec<u32>> = ps.iter().map(|p| p.hr.data().iter().map(|v| v.to_bits()).collect()).collect();
        seen.sort();
        want.sort();
        prop_assert_eq!(seen, want);
        prop_assert!(batches.iter().all(|b| b.inputs.shape()[2..] == [8, 8]));
    }
}
