use std::fmt::Write;

use super::Trajectory;

/// CSV with `# key = value` comment lines, a `t,x1,...,xn` header and every
/// `every`-th sample.
pub fn trajectory_csv(traj: &Trajectory, meta: &[(String, String)], every: usize) -> String {
    let every = every.max(1);
    let n = traj.states.first().map_or(0, Vec::len);
    let mut out = String::from("# format = 1\n");
    for (k, v) in meta {
        let _ = writeln!(out, "# {} = {}", k, v);
    }
    if traj.blew_up {
        out.push_str("# blew_up = true\n");
    }
    out.push('t');
    for i in 1..=n {
        let _ = write!(out, ",x{}", i);
    }
    out.push('\n');
    let last = traj.len().saturating_sub(1);
    for (k, (t, x)) in traj.times.iter().zip(&traj.states).enumerate() {
        if k % every != 0 && k != last {
            continue;
        }
        let _ = write!(out, "{}", t);
        for v in x {
            let _ = write!(out, ",{:e}", v);
        }
        out.push('\n');
    }
    out
}

/// Phase portrait of states `i` against `j` as a single polyline, preceded by
/// `<!-- key = value -->` metadata comments.
pub fn trajectory_svg(
    traj: &Trajectory,
    i: usize,
    j: usize,
    labels: (&str, &str),
    meta: &[(String, String)],
) -> String {
    const W: f64 = 480.0;
    const PAD: f64 = 40.0;
    let pts: Vec<(f64, f64)> = traj.states.iter().map(|s| (s[i], s[j])).collect();
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if !(x1 > x0) {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if !(y1 > y0) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| W - PAD - (y - y0) / (y1 - y0) * (W - 2.0 * PAD);

    let mut out = String::from("<!-- format = 1 -->\n");
    for (k, v) in meta {
        let _ = writeln!(out, "<!-- {} = {} -->", k, v.replace("--", "- -"));
    }
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{W}" viewBox="0 0 {W} {W}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="{PAD}" y="{PAD}" width="{s}" height="{s}" fill="none" stroke="gray"/>"#,
        s = W - 2.0 * PAD
    );
    if x0 < 0.0 && x1 > 0.0 {
        let _ = writeln!(out, r#"<line x1="{c}" y1="{PAD}" x2="{c}" y2="{e}" stroke="lightgray"/>"#, c = sx(0.0), e = W - PAD);
    }
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(out, r#"<line x1="{PAD}" y1="{c}" x2="{e}" y2="{c}" stroke="lightgray"/>"#, c = sy(0.0), e = W - PAD);
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        W - 10.0,
        labels.0
    );
    let _ = writeln!(
        out,
        r#"<text x="12" y="{}" text-anchor="middle" transform="rotate(-90 12 {})">{}</text>"#,
        W / 2.0,
        W / 2.0,
        labels.1
    );
    let _ = writeln!(out, r#"<text x="{PAD}" y="{}" font-size="10">[{x0:.3}, {x1:.3}] x [{y0:.3}, {y1:.3}]</text>"#, PAD - 6.0);
    // thin the path to at most a few thousand vertices
    let stride = (pts.len() / 4000).max(1);
    out.push_str(r#"<polyline fill="none" stroke="black" points=""#);
    for (k, &(x, y)) in pts.iter().enumerate() {
        if k % stride == 0 || k + 1 == pts.len() {
            let _ = write!(out, "{:.2},{:.2} ", sx(x), sy(y));
        }
    }
    out.push_str("\"/>\n</svg>\n");
    out
}
