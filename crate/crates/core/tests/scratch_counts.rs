use std::time::Instant;

use grape2q::*;

#[test]
fn scratch_iteration_counts() {
    let params = presets::reference_params();
    let x0 = rho_to_x(&presets::scenario_a_initial());
    let xt = rho_to_x(&presets::mixed_target());
    let spec = ObjectiveSpec::assemble(&xt).unwrap();
    let guess = presets::reference_initial_guess().unwrap();
    let cfg = OptimizerConfig::default();

    for interaction in [Interaction::V2, Interaction::V1] {
        let gen = build_generators(&params, interaction).unwrap();
        let start = Instant::now();
        let trace = gradient_descent(&gen, &guess, &x0, &spec, &cfg, |_, _| {}).unwrap();
        println!(
            "{interaction}: {} iterations, final J = {:.3e}, {} ({:.1}s)",
            trace.iterations,
            trace.final_objective(),
            trace.termination,
            start.elapsed().as_secs_f64()
        );
        println!(
            "  first objectives: {:?}",
            &trace.objective_values[..6.min(trace.objective_values.len())]
        );
    }
    panic!("scratch");
}
