//! Prints the spectrum diagnostics of the reference down-conversion run.
//!
//! Usage: `cargo run --release -p modekit --example pdc_study [nodes] [n_signal] [grid_n]`

use std::time::Instant;

use modekit::modes::{decompose, schmidt_number};
use modekit::pdc::{g1_pdc, PdcParams, RhoQuadrature};
use modekit::{AxisUnit, PixelGrid};

fn main() {
    let mut args = std::env::args().skip(1);
    let nodes: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(192);
    let n_signal: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.66);
    let grid_n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(64);

    let params = PdcParams {
        n_signal,
        q_grid: PixelGrid::centered_span(grid_n, grid_n, 35e-3, AxisUnit::Radians).unwrap(),
        rho_quadrature: RhoQuadrature { extent_wp: 4.0, nodes_per_axis: nodes },
        ..PdcParams::default()
    };

    let t0 = Instant::now();
    let (g1, report) = g1_pdc(&params).unwrap();
    let t_assembly = t0.elapsed();
    let t0 = Instant::now();
    let dec = decompose(&g1).unwrap();
    let t_eigen = t0.elapsed();

    let modes = &dec.modes;
    let k200 = schmidt_number(modes, Some(200)).unwrap();
    let k_all = schmidt_number(modes, None).unwrap();

    // exponential fit of ln w_m over the first 50 modes
    let w = modes.weights();
    let m_count = 50.min(w.len());
    let xs: Vec<f64> = (0..m_count).map(|m| m as f64).collect();
    let ys: Vec<f64> = w[..m_count].iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m_count as f64;
    let my = ys.iter().sum::<f64>() / m_count as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);

    let total: f64 = w.iter().sum();
    let k_ceil = k200.ceil() as usize;
    let cap_at_k: f64 = w[..k_ceil.min(w.len())].iter().sum::<f64>() / total;
    let cap_at_200: f64 = w[..200.min(w.len())].iter().sum::<f64>() / total;

    println!("leading weights: {:?}", &modes.weights()[..14.min(modes.len())]);

    // sign-change counts of the leading profiles along the central axes
    let g = modes.grid();
    let thresh_rel: f64 = std::env::args().nth(4).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let mut lobes = Vec::new();
    for m in 0..10.min(modes.len()) {
        let p = modes.profile(m);
        let thresh = thresh_rel * p.max_abs();
        let mut sx = 0;
        let mut last = 0.0f64;
        for ix in 0..g.nx() {
            let v = p.get(ix, g.ny() / 2);
            if v.abs() > thresh {
                if last != 0.0 && v * last < 0.0 {
                    sx += 1;
                }
                last = v;
            }
        }
        let mut sy = 0;
        let mut last = 0.0f64;
        for iy in 0..g.ny() {
            let v = p.get(g.nx() / 2, iy);
            if v.abs() > thresh {
                if last != 0.0 && v * last < 0.0 {
                    sy += 1;
                }
                last = v;
            }
        }
        lobes.push((sx, sy));
    }

    println!("nodes={nodes} n_signal={n_signal} grid={grid_n}");
    println!("assembly: {t_assembly:?}  eigen: {t_eigen:?}");
    println!("negativity: {:.3e} (fraction {:.4})", report.min_over_max_pre_abs, report.negative_fraction);
    println!("K(200) = {k200:.3}   K(all) = {k_all:.3}");
    println!("exp fit over 50: slope = {slope:.5} (1/rate = {:.2}), R^2 = {r2:.5}", -1.0 / slope);
    println!("capture at ceil(K)={k_ceil}: {cap_at_k:.4}   capture at 200: {cap_at_200:.4}");
    println!("clamped mass fraction: {:.3e}", dec.clamped_mass_fraction);
    println!("lobe signature (sx, sy) of first modes: {lobes:?}");
    for w in report.warnings {
        println!("warning: {w}");
    }
}
