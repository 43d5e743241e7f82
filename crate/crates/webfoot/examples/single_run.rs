//! Run one tendon configuration and print its per-cycle metrics.
//!
//! Usage: cargo run --release --example single_run [CONFIG]

use webfoot::dynamics::{run_sim, SimConfig};
use webfoot::metrics::{cycle_metrics, MetricParams};

fn main() {
    let config = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "GT-AE".to_string())
        .parse()
        .expect("valid configuration id");

    let mut cfg = SimConfig::default();
    cfg.tendon_config = config;
    cfg.cycles = 10;

    let log = run_sim(&cfg).expect("simulation runs");
    let params = MetricParams::default();
    println!(
        "{} ({} cycles at {} Hz)",
        config, cfg.cycles, cfg.cpg.f_gait
    );
    println!(
        "{:>5} {:>10} {:>10} {:>10} {:>9} {:>9}",
        "cycle", "F_net[N]", "W_in[J]", "eta[N/J]", "TP1[ms]", "TP2[ms]"
    );
    for c in 0..cfg.cycles {
        let m = cycle_metrics(&log, c, &params).expect("metrics");
        let fmt = |v: Option<f64>| v.map(|x| format!("{:8.1}", x * 1e3)).unwrap_or_else(|| "       -".into());
        println!(
            "{:>5} {:>10.4} {:>10.4} {:>10.4} {} {}",
            c,
            m.f_net_n,
            m.w_input_j,
            m.eta_mech,
            fmt(m.tp1_s),
            fmt(m.tp2_s)
        );
    }
}
