//! End-to-end flows across modules: sample, store, reload, cluster, explore.

use std::io::Cursor;

use loopsoup::exploration::{couple_gw, explore};
use loopsoup::graph_process::{evolve, state_at};
use loopsoup::loop_measure::{sample_fixed_length_soup, sample_soup};
use loopsoup::{LoopSoup, ModelParams};

#[test]
fn stored_soup_reproduces_clusters_and_explorations() {
    let params = ModelParams::new(200, 0.8).unwrap();
    let soup = sample_soup(&params, 150.0, 42).unwrap();
    let mut buf = Vec::new();
    soup.write_to(&mut buf).unwrap();
    let back = LoopSoup::read_from(Cursor::new(buf)).unwrap();
    assert_eq!(back.loops(), soup.loops());
    assert_eq!(back.seed(), 42);

    let checkpoints = [0.0, 50.0, 100.0, 150.0];
    assert_eq!(evolve(&soup, &checkpoints).unwrap(), evolve(&back, &checkpoints).unwrap());

    let mut st = state_at(&back, 150.0).unwrap();
    for x in [1, 17, 200] {
        let tr = explore(&back, 150.0, x).unwrap();
        assert_eq!(tr.component, st.component_of(x).unwrap());
        assert_eq!(tr.t_stop as usize, tr.component.len());
    }
}

#[test]
fn component_sizes_grow_monotonically_in_time() {
    let params = ModelParams::new(300, 1.0).unwrap();
    let soup = sample_soup(&params, 600.0, 7).unwrap();
    let snaps = evolve(&soup, &[0.0, 150.0, 300.0, 450.0, 600.0]).unwrap();
    assert_eq!(snaps[0].n_components, 300);
    for w in snaps.windows(2) {
        assert!(w[1].n_components <= w[0].n_components);
        assert!(w[1].top2.0 >= w[0].top2.0);
    }
    for s in &snaps {
        let mass: u64 = s.hist.iter().map(|&(k, c)| u64::from(k) * c).sum();
        assert_eq!(mass, 300);
    }
}

#[test]
fn dominating_walk_outlasts_the_exploration() {
    let params = ModelParams::new(150, 1.0).unwrap();
    for seed in 0..30 {
        let soup = sample_soup(&params, 60.0, seed).unwrap();
        let gw = couple_gw(&soup, 60.0, 1, 1000 + seed).unwrap();
        assert!(gw.t_bar >= gw.component_size || gw.censored);
        let tr = explore(&soup, 60.0, 1).unwrap();
        assert_eq!(gw.component_size, tr.t_stop);
    }
}

#[test]
fn fixed_length_soups_contain_one_length() {
    let params = ModelParams::new(100, 1.0).unwrap();
    let soup = sample_fixed_length_soup(&params, 3, 800.0, 5).unwrap();
    assert_eq!(soup.fixed_length(), Some(3));
    assert!(!soup.is_empty());
    assert!(soup.loops().iter().all(|tl| tl.lp.len() == 3));
    let mut buf = Vec::new();
    soup.write_to(&mut buf).unwrap();
    assert_eq!(LoopSoup::read_from(Cursor::new(buf)).unwrap().fixed_length(), Some(3));
}
