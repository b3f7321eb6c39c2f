use quadsim_verify::explore::build;
use quadsim_verify::prism::{export, parse};
use quadsim_verify::scenario::AbstractScenario;
use quadsim_verify::solve::{expected_reward, reach_probability, Opt, SolveOptions};
use quadsim_verify::Mdp;

fn values(m: &Mdp) -> Vec<Vec<f64>> {
    let o = SolveOptions::default();
    let mut out = Vec::new();
    for label in ["MissionSuccessful", "fault"] {
        for opt in [Opt::Min, Opt::Max] {
            out.push(reach_probability(m, m.label(label).unwrap(), opt, &o).unwrap());
        }
    }
    for opt in [Opt::Min, Opt::Max] {
        out.push(expected_reward(m, m.reward("time").unwrap(), m.label("done").unwrap(), opt, &o).unwrap());
    }
    out
}

#[test]
fn mission_model_round_trips() {
    let sc = AbstractScenario {
        xcoord: 3,
        ycoord: 4,
        objects: vec![[2, 1], [1, 3]],
        depot: [2, 2],
        miss: 200,
        move_time: 1.0,
        ..Default::default()
    };
    let model = sc.to_model().unwrap();
    let text = export(&model).unwrap();
    assert!(text.contains("module UAV") && text.contains("endrewards"));
    assert!(text.contains("[srch] c = 0 & b > Blow & t + dt < Miss -> pow(1 - pf, dt):(t'=t + dt)&(b'=max(b - db * dt, 0)) + (1 - pow(1 - pf, dt)):(c'=1);"), "{text}");
    let back = parse(&text).unwrap();
    assert_eq!(back, model);
    assert_eq!(export(&back).unwrap(), text);

    let a = build(&model).unwrap();
    let b = build(&back).unwrap();
    assert_eq!(a.num_states(), b.num_states());
    for (x, y) in values(&a).iter().zip(values(&b)) {
        let worst = x.iter().zip(&y).map(|(p, q)| if p == q { 0.0 } else { (p - q).abs() }).fold(0.0, f64::max);
        assert!(worst <= 1e-12, "{worst}");
    }
}
