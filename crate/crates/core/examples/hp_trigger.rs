//! Decompose discrimination histories with the Hodrick-Prescott filter and
//! compare the three trigger policies on them.

use emosam::trend::{hp_filter, Trigger};
use emosam::{DiscriminationHistory, TriggerPolicy};

fn main() -> emosam::Result<()> {
    let histories: [(&str, &[f64]); 4] = [
        ("rising", &[0.05, 0.08, 0.12, 0.15, 0.19]),
        ("flat", &[0.12, 0.12, 0.12, 0.12, 0.12]),
        ("spike", &[0.02, 0.02, 0.02, 0.02, 0.30]),
        ("too short", &[0.2, 0.4]),
    ];
    for (name, values) in histories {
        let pd = DiscriminationHistory::from_values(values);
        let hp = hp_filter(&pd.values(), 100.0)?;
        let fmt = |xs: &[f64]| xs.iter().map(|v| format!("{v:+.3}")).collect::<Vec<_>>().join(" ");
        println!("{name}");
        println!("  trend {}", fmt(&hp.trend));
        println!("  cycle {}", fmt(&hp.cycle));
        for policy in [TriggerPolicy::Hp, TriggerPolicy::Previous, TriggerPolicy::Every] {
            let trigger = Trigger {
                policy,
                phi: 0.10,
                theta: 0.07,
                lambda: 100.0,
            };
            println!("  {:>8}: {}", policy.to_string(), trigger.fires(&pd)?);
        }
    }
    Ok(())
}
