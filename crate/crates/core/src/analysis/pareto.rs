use super::metrics::MetricPoint;

/// `true` for each point no other point dominates, where lower temperature
/// (first coordinate) and higher output (second) are better.
///
/// Sort-and-sweep in `O(n log n)`: a point is dominated exactly when some
/// cooler point has at least its output, or an equally warm point has more.
pub fn pareto_front(points: &[(f64, f64)]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0));
    let mut dominant = vec![true; points.len()];
    let mut best_cooler = f64::NEG_INFINITY;
    let mut start = 0;
    while start < order.len() {
        let t = points[order[start]].0;
        let end = start + order[start..].iter().take_while(|&&i| points[i].0 == t).count();
        let group = &order[start..end];
        let group_max = group.iter().map(|&i| points[i].1).fold(f64::NEG_INFINITY, f64::max);
        for &i in group {
            let y = points[i].1;
            dominant[i] = !(best_cooler >= y || group_max > y);
        }
        best_cooler = best_cooler.max(group_max);
        start = end;
    }
    dominant
}

pub fn pareto_points(points: &[MetricPoint]) -> Vec<bool> {
    let p: Vec<(f64, f64)> = points.iter().map(|m| (m.temperature_rise, m.gross_output_total)).collect();
    pareto_front(&p)
}
