use coherent_qkd::channel::{key_summary, statistics_table, ChannelParams};
use coherent_qkd::moment::{build_constraints, build_layout};
use coherent_qkd::sdp::{real_embed, solve, SdpOptions};
use coherent_qkd::states::{build_state_set, ProtocolParams};

fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 { 0.0 } else { -x * x.log2() - (1.0 - x) * (1.0 - x).log2() }
}

fn run(loss: f64, mu: f64, mu4: f64) {
    let p = ProtocolParams::tied(mu, mu4).unwrap();
    let set = build_state_set(&p).unwrap();
    let params = ChannelParams::new(loss, 1e-7, 0.02).unwrap();
    let table = statistics_table(&set, &params);
    let summary = key_summary(&set, &params);
    let layout = build_layout(6, 1, true).unwrap();
    let cs = build_constraints(&layout, &table, &set.overlaps, &summary).unwrap();
    let problem = real_embed(&cs.to_hermitian_sdp()).unwrap();
    let sol = solve(&problem, &SdpOptions::default()).unwrap();
    let e_ph = (cs.objective.constant + sol.primal_value).clamp(0.0, 1.0);
    let e_clamp = e_ph.min(0.5);
    let rate = (summary.p_det * (1.0 - h2(summary.e_bit) - h2(e_clamp))).max(0.0);
    println!(
        "loss {loss:4.0} mu {mu:5.3} mu4 {mu4:5.3}: {:?} it {:3} e_ph {e_ph:.6} rate {rate:.4e} gap {:.1e}",
        sol.status, sol.iterations, sol.gap
    );
}

fn main() {
    for mu in [0.01, 0.03, 0.06, 0.1, 0.2] {
        for mu4 in [0.01, 0.03, 0.1] {
            run(10.0, mu, mu4);
        }
    }
}
