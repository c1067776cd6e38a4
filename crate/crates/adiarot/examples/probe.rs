use adiarot::models::{build_search, build_search_full};
use adiarot::schedule::linear_schedule;
use adiarot::opalg::{OperatorMatrix, State, C64};
use nalgebra::{DMatrix, DVector};

fn taylor_exp(h: &OperatorMatrix, dt: f64, psi: &State) -> State {
    let mut out = psi.clone();
    let mut term = psi.clone();
    for k in 1..60 {
        term = h.apply(&term).unwrap() * (C64::new(0.0, -dt) / C64::new(k as f64, 0.0));
        out += &term;
        if term.norm() < 1e-18 {
            break;
        }
    }
    out
}

fn main() {
    let n = 8usize;
    let full = build_search_full(n, 3).unwrap();
    let eff = build_search(1.0 / (n as f64).sqrt()).unwrap();
    let sched = linear_schedule(std::f64::consts::FRAC_PI_2, 0.0, 25.0).unwrap();
    let cap = 2e-4;
    let mut psi_f = full.psi0.clone();
    let mut psi_e = eff.psi0.clone();
    let mut step_count = 0usize;
    'outer: for w in sched.samples.windows(2) {
        let (t0, th0) = w[0];
        let (t1, th1) = w[1];
        let n_sub = ((th1 - th0).abs() / cap).ceil().max(1.0) as usize;
        for j in 0..n_sub {
            let ta = t0 + (t1 - t0) * j as f64 / n_sub as f64;
            let tb = t0 + (t1 - t0) * (j + 1) as f64 / n_sub as f64;
            let dt = tb - ta;
            let theta_mid = sched.theta_at(0.5 * (ta + tb));
            let hf = full.hamiltonian.evaluate(0, theta_mid).unwrap();
            let he = eff.hamiltonian.evaluate(0, theta_mid).unwrap();
            step_count += 1;
            if step_count == 557 {
                // replicate the dense real path by hand
                let real = adiarot::spectra::real_matrix(&hf).unwrap();
                eprintln!("is_real path taken: true");
                let eig = real.clone().symmetric_eigen();
                let v = &eig.eigenvectors;
                let gram_defect = {
                    let g = v.transpose() * v;
                    let mut worst = 0.0f64;
                    for a in 0..9 { for b in 0..9 {
                        let want = if a == b { 1.0 } else { 0.0 };
                        worst = worst.max((g[(a,b)] - want).abs());
                    }}
                    worst
                };
                let recon = {
                    let d = DMatrix::from_diagonal(&eig.eigenvalues);
                    let r = v * d * v.transpose();
                    (&r - &real).iter().map(|x| x.abs()).fold(0.0, f64::max)
                };
                eprintln!("gram defect {gram_defect:.3e}, reconstruction {recon:.3e}");
                // manual V e^{-iΛdt} Vᵀ ψ
                let mut coeffs = vec![C64::new(0.0, 0.0); 9];
                for q in 0..9 {
                    let mut acc = C64::new(0.0, 0.0);
                    for i in 0..9 {
                        acc += C64::new(v[(i, q)], 0.0) * psi_f[i];
                    }
                    coeffs[q] = acc * C64::from_polar(1.0, -eig.eigenvalues[q] * dt);
                }
                let mut manual: State = DVector::zeros(9);
                for q in 0..9 {
                    for i in 0..9 {
                        manual[i] += C64::new(v[(i, q)], 0.0) * coeffs[q];
                    }
                }
                let lib = adiarot::evolve::step(&hf, dt, &psi_f).unwrap();
                let tay = taylor_exp(&hf, dt, &psi_f);
                eprintln!("lib step vs manual: {:.3e}", (&lib - &manual).norm());
                eprintln!("manual vs taylor:   {:.3e}", (&manual - &tay).norm());
                // completeness on this state
                let mut vvt_psi: State = DVector::zeros(9);
                for q in 0..9 {
                    let mut acc = C64::new(0.0, 0.0);
                    for i in 0..9 {
                        acc += C64::new(v[(i, q)], 0.0) * psi_f[i];
                    }
                    for i in 0..9 {
                        vvt_psi[i] += C64::new(v[(i, q)], 0.0) * acc;
                    }
                }
                eprintln!("‖VVᵀψ − ψ‖ = {:.3e}", (&vvt_psi - &psi_f).norm());
                eprintln!("‖Hψ − VΛVᵀψ‖ = {:.3e}", {
                    let hpsi = hf.apply(&psi_f).unwrap();
                    let mut vlv: State = DVector::zeros(9);
                    for q in 0..9 {
                        let mut acc = C64::new(0.0, 0.0);
                        for i in 0..9 {
                            acc += C64::new(v[(i, q)], 0.0) * psi_f[i];
                        }
                        acc *= C64::new(eig.eigenvalues[q], 0.0);
                        for i in 0..9 {
                            vlv[i] += C64::new(v[(i, q)], 0.0) * acc;
                        }
                    }
                    (&hpsi - &vlv).norm()
                });
                break 'outer;
            }
            psi_f = adiarot::evolve::step(&hf, dt, &psi_f).unwrap();
            psi_e = adiarot::evolve::step(&he, dt, &psi_e).unwrap();
        }
    }
    let _ = &eff;
    let _ = &psi_e;
}
