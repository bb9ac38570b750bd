//! Escape-time raster with polyline overlays, written as binary PPM.

use expdyn_core::par;

pub const ESCAPE_RADIUS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Palette {
    Gray,
    Fire,
    Bands,
}

impl std::str::FromStr for Palette {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gray" => Ok(Palette::Gray),
            "fire" => Ok(Palette::Fire),
            "bands" => Ok(Palette::Bands),
            _ => Err(format!("unknown palette {s:?} (gray, fire, bands)")),
        }
    }
}

impl Palette {
    fn color(self, step: Option<u32>, max_iter: u32) -> [u8; 3] {
        let Some(n) = step else { return [0, 0, 0] };
        let x = 1.0 - n as f64 / (max_iter.max(1) as f64 + 1.0);
        let c = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        match self {
            Palette::Gray => [c(x); 3],
            Palette::Fire => [c(3.0 * x), c(3.0 * x - 1.0), c(3.0 * x - 2.0)],
            Palette::Bands => {
                const TABLE: [[u8; 3]; 4] = [[230, 230, 250], [100, 149, 237], [25, 25, 112], [176, 196, 222]];
                TABLE[n as usize % 4]
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderSpec {
    /// `(re_min, re_max, im_min, im_max)`.
    pub window: (f64, f64, f64, f64),
    pub width: usize,
    pub height: usize,
    pub max_iter: u32,
    pub palette: Palette,
    pub overlays: Vec<Vec<(f64, f64)>>,
}

impl RenderSpec {
    pub fn validate(&self) -> Result<(), String> {
        let (a, b, c, d) = self.window;
        if !(a < b && c < d) || ![a, b, c, d].iter().all(|x| x.is_finite()) {
            return Err("window must satisfy re_min < re_max and im_min < im_max".into());
        }
        if self.width == 0 || self.height == 0 {
            return Err("resolution must be at least 1x1".into());
        }
        Ok(())
    }

    fn pixel_center(&self, i: usize, j: usize) -> (f64, f64) {
        let (a, b, c, d) = self.window;
        let x = a + (i as f64 + 0.5) / self.width as f64 * (b - a);
        let y = d - (j as f64 + 0.5) / self.height as f64 * (d - c);
        (x, y)
    }

    fn to_pixel(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let (a, b, c, d) = self.window;
        ((x - a) / (b - a) * self.width as f64 - 0.5, (d - y) / (d - c) * self.height as f64 - 0.5)
    }
}

/// First `n <= max_iter` with `|f^n(z)| > ESCAPE_RADIUS`, in double precision.
pub fn escape_step(lambda: (f64, f64), z: (f64, f64), max_iter: u32) -> Option<u32> {
    let (mut x, mut y) = z;
    for n in 0..=max_iter {
        if x.hypot(y) > ESCAPE_RADIUS {
            return Some(n);
        }
        let r = x.exp();
        let (ex, ey) = (r * y.cos(), r * y.sin());
        x = lambda.0 * ex - lambda.1 * ey;
        y = lambda.0 * ey + lambda.1 * ex;
    }
    None
}

pub struct Image {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl Image {
    fn put(&mut self, i: i64, j: i64, c: [u8; 3]) {
        if i >= 0 && j >= 0 && (i as usize) < self.width && (j as usize) < self.height {
            let k = 3 * (j as usize * self.width + i as usize);
            self.rgb[k..k + 3].copy_from_slice(&c);
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }
}

/// Clip the segment to `[lo, hi]²` (Liang-Barsky).
fn clip(p: (f64, f64), q: (f64, f64), lo: f64, hi: (f64, f64)) -> Option<((f64, f64), (f64, f64))> {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (den, num) in [(-dx, p.0 - lo), (dx, hi.0 - p.0), (-dy, p.1 - lo), (dy, hi.1 - p.1)] {
        if den == 0.0 {
            if num < 0.0 {
                return None;
            }
        } else {
            let r = num / den;
            if den < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if !(t0 <= t1) {
        return None;
    }
    Some(((p.0 + t0 * dx, p.1 + t0 * dy), (p.0 + t1 * dx, p.1 + t1 * dy)))
}

fn draw_line(img: &mut Image, p: (f64, f64), q: (f64, f64), c: [u8; 3]) {
    let hi = (img.width as f64 + 1.0, img.height as f64 + 1.0);
    let Some((p, q)) = clip(p, q, -1.0, hi) else { return };
    let (mut x0, mut y0) = (p.0.round() as i64, p.1.round() as i64);
    let (x1, y1) = (q.0.round() as i64, q.1.round() as i64);
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let mut err = dx + dy;
    loop {
        img.put(x0, y0, c);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

const OVERLAY: [u8; 3] = [255, 40, 40];

pub fn render(lambda: (f64, f64), spec: &RenderSpec) -> Image {
    let rows = par::map_range(spec.height, |j| {
        let mut row = Vec::with_capacity(3 * spec.width);
        for i in 0..spec.width {
            let step = escape_step(lambda, spec.pixel_center(i, j), spec.max_iter);
            row.extend_from_slice(&spec.palette.color(step, spec.max_iter));
        }
        row
    });
    let mut img = Image { width: spec.width, height: spec.height, rgb: rows.concat() };
    for line in &spec.overlays {
        for w in line.windows(2) {
            draw_line(&mut img, spec.to_pixel(w[0]), spec.to_pixel(w[1]), OVERLAY);
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(window: (f64, f64, f64, f64), w: usize, h: usize) -> RenderSpec {
        RenderSpec { window, width: w, height: h, max_iter: 3, palette: Palette::Gray, overlays: vec![] }
    }

    #[test]
    fn eleven_escapes_at_once() {
        assert_eq!(escape_step((1.0, 0.0), (11.0, 0.0), 3), Some(1));
        let img = render((1.0, 0.0), &spec((10.5, 11.5, -0.5, 0.5), 1, 1));
        assert_eq!(img.rgb, Palette::Gray.color(Some(1), 3).to_vec());
    }

    #[test]
    fn bounded_orbit_is_black() {
        // the attracting fixed point of e^z / e is 1
        assert_eq!(escape_step((1.0 / std::f64::consts::E, 0.0), (0.5, 0.0), 50), None);
    }

    #[test]
    fn horizontal_overlay_fills_a_row() {
        let mut s = spec((0.0, 4.0, -2.0, 2.0), 4, 4);
        s.max_iter = 0;
        s.overlays = vec![vec![(-10.0, 0.5), (10.0, 0.5)]];
        let img = render((1.0, 0.0), &s);
        // y = 0.5 falls on row 1 (centres at 1.5, 0.5, -0.5, -1.5)
        for i in 0..4 {
            let k = 3 * (4 + i);
            assert_eq!(&img.rgb[k..k + 3], &OVERLAY);
        }
        assert_eq!(img.rgb.chunks(3).filter(|c| *c == OVERLAY).count(), 4);
    }

    #[test]
    fn ppm_header() {
        let img = render((1.0, 0.0), &spec((0.0, 1.0, 0.0, 1.0), 2, 3));
        let ppm = img.to_ppm();
        assert!(ppm.starts_with(b"P6\n2 3\n255\n"));
        assert_eq!(ppm.len(), 11 + 18);
    }

    #[test]
    fn degenerate_window_is_rejected() {
        assert!(spec((1.0, 1.0, 0.0, 1.0), 1, 1).validate().is_err());
        assert!(spec((0.0, 1.0, 0.0, 1.0), 0, 1).validate().is_err());
    }
}
