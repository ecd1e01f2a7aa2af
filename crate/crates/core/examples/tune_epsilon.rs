//! Picks, per method variant and dataset kind, the threshold multiple
//! (of the planted noise level) with the lowest errors on a tuning grid.
//!
//! Usage: `tune_epsilon [seed] [instances] [runs]`. A multiple's cost is the
//! mean over parameter, semiaxis and center error of error / best error.

use casfit::experiment::{run_grid, EpsilonRule, ExperimentGrid, Variant};
use casfit::{DatasetSpec, FitConfig};

const MULTIPLES: [f64; 6] = [0.5, 0.75, 1.0, 1.5, 2.0, 3.0];

fn main() {
    let arg = |i: usize, d: u64| std::env::args().nth(i).map_or(d, |s| s.parse().expect("integer"));
    let (seed, instances, runs) = (arg(1, 7), arg(2, 3) as usize, arg(3, 10) as usize);
    let variants = [
        ("proposed", FitConfig::default()),
        ("ransac", FitConfig::ransac(1.0)),
        ("cas_ransac", FitConfig::cas_ransac(1.0)),
        ("lambda_0", FitConfig::default().with_lambda(0.0)),
        ("lambda_0.25", FitConfig::default().with_lambda(0.25)),
        ("lambda_0.75", FitConfig::default().with_lambda(0.75)),
        ("lambda_1", FitConfig::default().with_lambda(1.0)),
    ];
    for kind in ["outlier", "gaussian"] {
        let datasets: Vec<DatasetSpec> = [0.1, 0.2, 0.3, 0.4]
            .iter()
            .map(|&x| DatasetSpec {
                instance_count: instances,
                ..if kind == "outlier" { DatasetSpec::outlier(x) } else { DatasetSpec::gaussian(x) }
            })
            .collect();
        // errors[variant][multiple] = [param, semiaxis, center]
        let mut errors = vec![vec![[0.0; 3]; MULTIPLES.len()]; variants.len()];
        for (ki, &k) in MULTIPLES.iter().enumerate() {
            let grid = ExperimentGrid {
                variants: variants
                    .iter()
                    .map(|(n, c)| Variant::new(*n, EpsilonRule::NoiseMultiple(k), c.clone()))
                    .collect(),
                datasets: datasets.clone(),
                runs_per_instance: runs,
                seed,
                output: None,
            };
            let t = std::time::Instant::now();
            let report = run_grid(&grid).expect("valid grid");
            eprintln!("{kind} k={k} {:.1?}", t.elapsed());
            for (vi, (name, _)) in variants.iter().enumerate() {
                let rows: Vec<_> = report.summary.iter().filter(|s| s.variant == *name).collect();
                for (j, col) in ["param_err", "semiaxis_err", "center_err"].iter().enumerate() {
                    errors[vi][ki][j] = rows.iter().map(|s| s.stat(col).mean).sum::<f64>() / rows.len() as f64;
                }
            }
        }
        for (vi, (name, _)) in variants.iter().enumerate() {
            let best: Vec<f64> = (0..3)
                .map(|j| errors[vi].iter().map(|e| e[j]).fold(f64::INFINITY, f64::min))
                .collect();
            let cost = |ki: usize| (0..3).map(|j| errors[vi][ki][j] / best[j]).sum::<f64>() / 3.0;
            for (ki, k) in MULTIPLES.iter().enumerate() {
                let e = errors[vi][ki];
                println!(
                    "{kind:8} {name:12} k={k:<4} param={:.4} semiaxis={:.4} center={:.4} cost={:.3}",
                    e[0], e[1], e[2], cost(ki)
                );
            }
            let ki = (0..MULTIPLES.len())
                .min_by(|&a, &b| cost(a).total_cmp(&cost(b)))
                .expect("nonempty");
            println!("{kind:8} {name:12} chosen k={}", MULTIPLES[ki]);
        }
    }
}
