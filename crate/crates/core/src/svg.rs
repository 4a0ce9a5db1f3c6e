//! Two-panel SVG rendering of a decomposition: the pullback disk with its
//! dyadic cells, arcs and geodesic cuts on the left, and their conformal
//! images on the right.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::decomposition::{arc_pair, Decomposition};
use crate::error::{Error, Result};
use crate::layer::Layer;
use crate::map::ConformalMap;
use crate::Point;

const PANEL: f64 = 460.0;
const MARGIN: f64 = 20.0;

struct Frame {
    /// world-coordinate bounding box
    x0: f64,
    y0: f64,
    scale: f64,
    /// panel offset in page coordinates
    px: f64,
    py: f64,
}

impl Frame {
    fn fit(points: &[Point], px: f64) -> Frame {
        let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo_x = lo_x.min(p.re);
            hi_x = hi_x.max(p.re);
            lo_y = lo_y.min(p.im);
            hi_y = hi_y.max(p.im);
        }
        let span = (hi_x - lo_x).max(hi_y - lo_y).max(1e-9);
        Frame {
            x0: (lo_x + hi_x) / 2.0 - span / 2.0,
            y0: (lo_y + hi_y) / 2.0 - span / 2.0,
            scale: PANEL / span,
            px,
            py: MARGIN,
        }
    }

    fn to_page(&self, p: Point) -> (f64, f64) {
        (
            self.px + (p.re - self.x0) * self.scale,
            // SVG y grows downward
            self.py + PANEL - (p.im - self.y0) * self.scale,
        )
    }
}

fn polyline_path(frame: &Frame, points: &[Point], close: bool) -> String {
    let mut d = String::new();
    for (i, &p) in points.iter().enumerate() {
        let (x, y) = frame.to_page(p);
        let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
    }
    if close {
        d.push('Z');
    }
    d
}

/// Pull a polyline back just inside the open disk so the map can be applied.
fn clamp_into_disk(points: &[Point]) -> Vec<Point> {
    points
        .iter()
        .map(|&z| {
            if z.norm() >= 1.0 {
                z / z.norm() * (1.0 - 1e-9)
            } else {
                z
            }
        })
        .collect()
}

fn map_polyline(map: &ConformalMap, points: &[Point]) -> Result<Vec<Point>> {
    clamp_into_disk(points).iter().map(|&z| map.apply(z)).collect()
}

/// Two-panel SVG 1.1 document for the decomposition and its boundary layer.
pub fn render(map: &ConformalMap, decomp: &Decomposition, layer: &Layer) -> Result<String> {
    if layer.cells.is_empty() || layer.cuts.is_empty() {
        return Err(Error::Degenerate("layer has no cells to render".into()));
    }
    if decomp.m != layer.m {
        return Err(Error::Config("decomposition and layer levels differ".into()));
    }
    let width = 2.0 * PANEL + 3.0 * MARGIN;
    let height = PANEL + 2.0 * MARGIN;

    let disk_pts: Vec<Point> = (0..=128)
        .map(|k| Complex64::from_polar(1.0, k as f64 * std::f64::consts::TAU / 128.0))
        .collect();
    let image_boundary = map.boundary_cloud(512)?;
    let left = Frame::fit(&disk_pts, MARGIN);
    let right = Frame::fit(&image_boundary, 2.0 * MARGIN + PANEL);

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );

    // shaded layer cells S_j (alternating tones), pullback and image
    for cell in &layer.cells {
        let fill = if cell.j % 2 == 0 { "#cfe8ff" } else { "#ffe3c9" };
        let d = polyline_path(&left, &cell.polygon, true);
        let _ = write!(svg, "<path d=\"{d}\" fill=\"{fill}\" fill-opacity=\"0.6\" stroke=\"none\"/>\n");
        let mapped = map_polyline(map, &cell.polygon)?;
        let d = polyline_path(&right, &mapped, true);
        let _ = write!(svg, "<path d=\"{d}\" fill=\"{fill}\" fill-opacity=\"0.6\" stroke=\"none\"/>\n");
    }

    // domain outlines
    let _ = write!(
        svg,
        "<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
        polyline_path(&left, &disk_pts, true)
    );
    let mut outline = image_boundary.clone();
    outline.push(image_boundary[0]);
    let _ = write!(
        svg,
        "<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
        polyline_path(&right, &outline, false)
    );

    // dyadic cell boundaries
    for cell in &decomp.cells {
        // walk the four sides in order (boundary_samples interleaves them)
        let loop_pts: Vec<Point> = {
            let mut v = Vec::new();
            let n = 16;
            for i in 0..=n {
                let t = i as f64 / n as f64;
                v.push(Complex64::from_polar(
                    cell.r_min,
                    cell.theta_min + t * (cell.theta_max - cell.theta_min),
                ));
            }
            for i in 0..=n {
                let t = i as f64 / n as f64;
                v.push(Complex64::from_polar(
                    cell.r_min + t * (cell.r_max - cell.r_min),
                    cell.theta_max,
                ));
            }
            for i in (0..=n).rev() {
                let t = i as f64 / n as f64;
                v.push(Complex64::from_polar(
                    cell.r_max,
                    cell.theta_min + t * (cell.theta_max - cell.theta_min),
                ));
            }
            for i in (0..=n).rev() {
                let t = i as f64 / n as f64;
                v.push(Complex64::from_polar(
                    cell.r_min + t * (cell.r_max - cell.r_min),
                    cell.theta_min,
                ));
            }
            v
        };
        let _ = write!(
            svg,
            "<path d=\"{}\" fill=\"none\" stroke=\"#666666\" stroke-width=\"0.6\"/>\n",
            polyline_path(&left, &loop_pts, true)
        );
        let mapped = map_polyline(map, &loop_pts)?;
        let _ = write!(
            svg,
            "<path d=\"{}\" fill=\"none\" stroke=\"#666666\" stroke-width=\"0.6\"/>\n",
            polyline_path(&right, &mapped, true)
        );
    }

    // β and δ arcs
    for j in 0..layer.cuts.len() as u32 {
        let pair = arc_pair(layer.m, j, layer.n_max)?;
        for (arc, color) in [
            (pair.beta_samples(24), "#007a33"),
            (pair.delta_samples(24), "#7a0033"),
        ] {
            let _ = write!(
                svg,
                "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>\n",
                polyline_path(&left, &arc, false)
            );
            let mapped = map_polyline(map, &arc)?;
            let _ = write!(
                svg,
                "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>\n",
                polyline_path(&right, &mapped, false)
            );
        }
    }

    // geodesic cuts γ_j
    for cut in &layer.cuts {
        let _ = write!(
            svg,
            "<path class=\"cut\" d=\"{}\" fill=\"none\" stroke=\"#c00000\" stroke-width=\"1.2\"/>\n",
            polyline_path(&left, &cut.polyline, false)
        );
        let mapped = map_polyline(map, &cut.polyline)?;
        let _ = write!(
            svg,
            "<path class=\"cut\" d=\"{}\" fill=\"none\" stroke=\"#c00000\" stroke-width=\"1.2\"/>\n",
            polyline_path(&right, &mapped, false)
        );
    }

    let _ = write!(
        svg,
        "<text x=\"{:.0}\" y=\"{:.0}\" font-size=\"14\">pullback (m = {})</text>\n\
         <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"14\">image: {}</text>\n</svg>\n",
        MARGIN,
        height - 4.0,
        decomp.m,
        2.0 * MARGIN + PANEL,
        height - 4.0,
        map.name
    );
    Ok(svg)
}

/// Render and write to disk.
pub fn render_to_file(
    map: &ConformalMap,
    decomp: &Decomposition,
    layer: &Layer,
    path: &Path,
) -> Result<()> {
    let doc = render(map, decomp, layer)?;
    std::fs::write(path, doc)?;
    Ok(())
}
