/// Total degree tied to the sample count: `ceil(c N) + offset`, doubled on request.
pub fn degree_schedule(n_points: usize, c: f64, offset: u32, doubled: bool) -> u32 {
    assert!(n_points >= 1 && c > 0.0, "schedule needs N >= 1 and c > 0");
    let x = c * n_points as f64;
    // c N lands on an integer for some (c, N) pairs; absorb representation error
    let r = x.round();
    let ceil = if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    };
    let base = ceil as u32 + offset;
    if doubled {
        2 * base
    } else {
        base
    }
}
