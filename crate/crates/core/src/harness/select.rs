use crate::algorithms::Trace;

/// r-weighted coordinates spent when `f_gap` first drops to `eps`.
pub fn coords_to_eps(trace: &Trace, eps: f64) -> Option<f64> {
    trace.first_below(eps).map(|r| r.total_r)
}

/// Grid exponent of the trace that reaches `eps` with the fewest r-weighted
/// coordinates; ties go to the smaller exponent. `None` when no trace
/// reaches `eps`.
pub fn best_of<'a, I>(candidates: I, eps: f64) -> Option<i32>
where
    I: IntoIterator<Item = (i32, &'a Trace)>,
{
    let mut best: Option<(f64, i32)> = None;
    for (exp, trace) in candidates {
        let Some(cost) = coords_to_eps(trace, eps) else { continue };
        let better = match best {
            None => true,
            Some((c, e)) => cost < c || (cost == c && exp < e),
        };
        if better {
            best = Some((cost, exp));
        }
    }
    best.map(|(_, e)| e)
}
