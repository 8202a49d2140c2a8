//! Occupancy-grid maps and world/grid georeferencing.
//!
//! Maps are stored as PGM images (P2 or P5) with a key/value metadata file
//! in the style produced by common mapping toolchains:
//!
//! ```text
//! image: map.pgm
//! resolution: 0.05
//! origin: [-10.0, -10.0, 0.0]
//! negate: 0
//! occupied_thresh: 0.65
//! free_thresh: 0.196
//! ```
//!
//! The first raster row of the image is the top of the map; grid cell
//! `(0, 0)` sits at the world origin corner (bottom-left), so grid rows
//! count upward in world y.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from map parsing, validation or serialization.
#[derive(Debug, Error)]
pub enum MapError {
    #[error("malformed PGM: {0}")]
    Pgm(String),

    #[error("missing metadata key: {0}")]
    MissingKey(&'static str),

    #[error("invalid metadata value for {key}: {value}")]
    InvalidValue { key: &'static str, value: String },

    #[error("dimension mismatch: header declares {expected} pixels, raster holds {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// World-frame position in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Point2) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Grid cell address. Column 0 is the west edge, row 0 the south edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub col: usize,
    pub row: usize,
}

impl CellIndex {
    pub fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

/// Shared georeferencing for grids, cost maps and per-cell fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    /// Meters per cell.
    pub resolution: f64,
    /// World coordinates of the outer corner of cell (0, 0).
    pub origin: Point2,
}

impl GridGeometry {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point2,
    ) -> Result<Self, MapError> {
        if width == 0 || height == 0 {
            return Err(MapError::InvalidGrid(format!(
                "grid must be at least 1x1, got {width}x{height}"
            )));
        }
        if !resolution.is_finite() || resolution <= 0.0 {
            return Err(MapError::InvalidGrid(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        cell.col < self.width && cell.row < self.height
    }

    /// Flat row-major index of a cell.
    pub fn index(&self, cell: CellIndex) -> usize {
        debug_assert!(self.contains(cell));
        cell.row * self.width + cell.col
    }

    pub fn cell_at(&self, index: usize) -> CellIndex {
        CellIndex::new(index % self.width, index / self.width)
    }

    /// World coordinates of the cell center.
    pub fn cell_center(&self, cell: CellIndex) -> Point2 {
        Point2::new(
            self.origin.x + (cell.col as f64 + 0.5) * self.resolution,
            self.origin.y + (cell.row as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell containing a world point, if inside the map.
    pub fn world_to_cell(&self, p: Point2) -> Option<CellIndex> {
        let col = (p.x - self.origin.x) / self.resolution;
        let row = (p.y - self.origin.y) / self.resolution;
        if col < 0.0 || row < 0.0 {
            return None;
        }
        let cell = CellIndex::new(col.floor() as usize, row.floor() as usize);
        self.contains(cell).then_some(cell)
    }

    /// Row-major iterator over all cell addresses.
    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.height).flat_map(move |row| (0..self.width).map(move |col| CellIndex { col, row }))
    }
}

/// Per-cell occupancy state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

/// A discretized environment map with world georeferencing.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    pub geometry: GridGeometry,
    /// Row-major from the south row; length `width * height`.
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn new(geometry: GridGeometry, cells: Vec<CellState>) -> Result<Self, MapError> {
        if cells.len() != geometry.n_cells() {
            return Err(MapError::InvalidGrid(format!(
                "cell buffer length {} does not match {}x{}",
                cells.len(),
                geometry.width,
                geometry.height
            )));
        }
        Ok(Self { geometry, cells })
    }

    /// All-`Free` grid, handy for synthetic environments.
    pub fn filled(geometry: GridGeometry, state: CellState) -> Self {
        let cells = vec![state; geometry.n_cells()];
        Self { geometry, cells }
    }

    pub fn state(&self, cell: CellIndex) -> CellState {
        self.cells[self.geometry.index(cell)]
    }

    pub fn set_state(&mut self, cell: CellIndex, state: CellState) {
        let i = self.geometry.index(cell);
        self.cells[i] = state;
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }
}

/// Parsed map metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct MapMetadata {
    /// Image filename, used by callers to locate the PGM next to the
    /// metadata file. Not needed when both byte streams are supplied.
    pub image: Option<String>,
    pub resolution: f64,
    pub origin: Point2,
    pub occupied_thresh: f64,
    pub free_thresh: f64,
    pub negate: bool,
}

impl MapMetadata {
    /// Parse `key: value` metadata lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut image = None;
        let mut resolution = None;
        let mut origin = None;
        let mut occupied_thresh = None;
        let mut free_thresh = None;
        let mut negate = None;

        for raw in text.lines() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once(':') else {
                continue;
            };
            let key = key.trim();
            let value = value.trim();
            match key {
                "image" => image = Some(value.to_string()),
                "resolution" => resolution = Some(parse_f64("resolution", value)?),
                "origin" => origin = Some(parse_origin(value)?),
                "occupied_thresh" => occupied_thresh = Some(parse_f64("occupied_thresh", value)?),
                "free_thresh" => free_thresh = Some(parse_f64("free_thresh", value)?),
                "negate" => {
                    let n: i64 = value.parse().map_err(|_| MapError::InvalidValue {
                        key: "negate",
                        value: value.to_string(),
                    })?;
                    negate = Some(n != 0);
                }
                _ => {} // unknown keys tolerated
            }
        }

        Ok(Self {
            image,
            resolution: resolution.ok_or(MapError::MissingKey("resolution"))?,
            origin: origin.ok_or(MapError::MissingKey("origin"))?,
            occupied_thresh: occupied_thresh.ok_or(MapError::MissingKey("occupied_thresh"))?,
            free_thresh: free_thresh.ok_or(MapError::MissingKey("free_thresh"))?,
            negate: negate.ok_or(MapError::MissingKey("negate"))?,
        })
    }

    /// Render back to metadata text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(image) = &self.image {
            out.push_str(&format!("image: {image}\n"));
        }
        out.push_str(&format!("resolution: {}\n", self.resolution));
        out.push_str(&format!(
            "origin: [{}, {}, 0.0]\n",
            self.origin.x, self.origin.y
        ));
        out.push_str(&format!("negate: {}\n", u8::from(self.negate)));
        out.push_str(&format!("occupied_thresh: {}\n", self.occupied_thresh));
        out.push_str(&format!("free_thresh: {}\n", self.free_thresh));
        out
    }
}

fn parse_f64(key: &'static str, value: &str) -> Result<f64, MapError> {
    value.parse().map_err(|_| MapError::InvalidValue {
        key,
        value: value.to_string(),
    })
}

fn parse_origin(value: &str) -> Result<Point2, MapError> {
    let inner = value
        .trim()
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .ok_or_else(|| MapError::InvalidValue {
            key: "origin",
            value: value.to_string(),
        })?;
    let parts: Vec<f64> = inner
        .split(',')
        .map(|p| parse_f64("origin", p.trim()))
        .collect::<Result<_, _>>()?;
    if parts.len() < 2 || parts.len() > 3 {
        return Err(MapError::InvalidValue {
            key: "origin",
            value: value.to_string(),
        });
    }
    if parts.len() == 3 && parts[2].abs() > 1e-9 {
        return Err(MapError::InvalidValue {
            key: "origin",
            value: format!("rotated origins are unsupported (yaw {})", parts[2]),
        });
    }
    Ok(Point2::new(parts[0], parts[1]))
}

/// Decoded PGM raster, in image order (first row = top of the map).
#[derive(Debug)]
struct Pgm {
    width: usize,
    height: usize,
    maxval: u32,
    pixels: Vec<u32>,
}

fn parse_pgm(bytes: &[u8]) -> Result<Pgm, MapError> {
    let mut pos = 0usize;

    // Header tokens are ASCII separated by whitespace; '#' comments run to
    // end of line and may appear between tokens.
    let next_token = |bytes: &[u8], pos: &mut usize| -> Result<String, MapError> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
            *pos += 1;
        }
        if start == *pos {
            return Err(MapError::Pgm("unexpected end of header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(bytes, &mut pos)?;
    if magic != "P2" && magic != "P5" {
        return Err(MapError::Pgm(format!(
            "expected magic P2 or P5, got {magic:?}"
        )));
    }
    let parse_dim = |tok: String, what: &str| -> Result<usize, MapError> {
        tok.parse::<usize>()
            .map_err(|_| MapError::Pgm(format!("invalid {what}: {tok:?}")))
    };
    let width = parse_dim(next_token(bytes, &mut pos)?, "width")?;
    let height = parse_dim(next_token(bytes, &mut pos)?, "height")?;
    let maxval: u32 = {
        let tok = next_token(bytes, &mut pos)?;
        tok.parse()
            .map_err(|_| MapError::Pgm(format!("invalid maxval: {tok:?}")))?
    };
    if width == 0 || height == 0 {
        return Err(MapError::Pgm(format!("degenerate size {width}x{height}")));
    }
    if maxval == 0 || maxval > 65_535 {
        return Err(MapError::Pgm(format!(
            "maxval {maxval} out of range 1..=65535"
        )));
    }

    let expected = width * height;
    let pixels: Vec<u32> = if magic == "P5" {
        // exactly one whitespace byte terminates the header
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(MapError::Pgm("missing raster separator".into()));
        }
        pos += 1;
        let raster = &bytes[pos..];
        if maxval <= 255 {
            if raster.len() != expected {
                return Err(MapError::DimensionMismatch {
                    expected,
                    got: raster.len(),
                });
            }
            raster.iter().map(|&b| b as u32).collect()
        } else {
            // 16-bit samples are big-endian per the PGM specification
            if raster.len() != expected * 2 {
                return Err(MapError::DimensionMismatch {
                    expected,
                    got: raster.len() / 2,
                });
            }
            raster
                .chunks_exact(2)
                .map(|c| u32::from(u16::from_be_bytes([c[0], c[1]])))
                .collect()
        }
    } else {
        let mut vals = Vec::with_capacity(expected);
        for _ in 0..expected {
            let tok = match next_token(bytes, &mut pos) {
                Ok(t) => t,
                Err(_) => {
                    return Err(MapError::DimensionMismatch {
                        expected,
                        got: vals.len(),
                    })
                }
            };
            let v: u32 = tok
                .parse()
                .map_err(|_| MapError::Pgm(format!("invalid sample {tok:?}")))?;
            vals.push(v);
        }
        vals
    };

    for &p in &pixels {
        if p > maxval {
            return Err(MapError::Pgm(format!("sample {p} exceeds maxval {maxval}")));
        }
    }
    Ok(Pgm {
        width,
        height,
        maxval,
        pixels,
    })
}

/// Load an occupancy grid from a PGM image and its metadata.
///
/// Gray value `g` maps to an occupancy probability `(maxval - g) / maxval`
/// (`g / maxval` when `negate` is set); probabilities above
/// `occupied_thresh` become [`CellState::Occupied`], below `free_thresh`
/// [`CellState::Free`], anything else [`CellState::Unknown`].
pub fn load_map(map_image: &[u8], metadata: &[u8]) -> Result<OccupancyGrid, MapError> {
    let meta_text = std::str::from_utf8(metadata)
        .map_err(|_| MapError::InvalidGrid("metadata is not valid UTF-8".into()))?;
    let meta = MapMetadata::parse(meta_text)?;
    load_map_with_metadata(map_image, &meta)
}

/// Same as [`load_map`] with already-parsed metadata.
pub fn load_map_with_metadata(
    map_image: &[u8],
    meta: &MapMetadata,
) -> Result<OccupancyGrid, MapError> {
    let pgm = parse_pgm(map_image)?;
    let geometry = GridGeometry::new(pgm.width, pgm.height, meta.resolution, meta.origin)?;

    let maxval = pgm.maxval as f64;
    let mut cells = vec![CellState::Unknown; geometry.n_cells()];
    for (i, &g) in pgm.pixels.iter().enumerate() {
        let p_occ = if meta.negate {
            g as f64 / maxval
        } else {
            (maxval - g as f64) / maxval
        };
        let state = if p_occ > meta.occupied_thresh {
            CellState::Occupied
        } else if p_occ < meta.free_thresh {
            CellState::Free
        } else {
            CellState::Unknown
        };
        let image_row = i / pgm.width;
        let col = i % pgm.width;
        let row = pgm.height - 1 - image_row;
        cells[row * pgm.width + col] = state;
    }
    OccupancyGrid::new(geometry, cells)
}

/// Canonical gray levels used when writing maps.
const GRAY_FREE: u8 = 254;
const GRAY_OCCUPIED: u8 = 0;
const GRAY_UNKNOWN: u8 = 205;

/// Default thresholds written into saved metadata; chosen so that the
/// canonical gray levels round-trip through [`load_map`].
pub const DEFAULT_OCCUPIED_THRESH: f64 = 0.65;
pub const DEFAULT_FREE_THRESH: f64 = 0.196;

/// Serialize a grid to (P5 image bytes, metadata text).
pub fn save_map(grid: &OccupancyGrid, image_name: &str) -> (Vec<u8>, String) {
    let g = &grid.geometry;
    let mut out = format!("P5\n{} {}\n255\n", g.width, g.height).into_bytes();
    for image_row in 0..g.height {
        let row = g.height - 1 - image_row;
        for col in 0..g.width {
            out.push(match grid.state(CellIndex::new(col, row)) {
                CellState::Free => GRAY_FREE,
                CellState::Occupied => GRAY_OCCUPIED,
                CellState::Unknown => GRAY_UNKNOWN,
            });
        }
    }
    let meta = MapMetadata {
        image: Some(image_name.to_string()),
        resolution: g.resolution,
        origin: g.origin,
        occupied_thresh: DEFAULT_OCCUPIED_THRESH,
        free_thresh: DEFAULT_FREE_THRESH,
        negate: false,
    };
    (out, meta.to_text())
}
