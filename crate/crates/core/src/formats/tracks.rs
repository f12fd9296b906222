//! Track file carrier: 2D point trajectories with per-frame visibility.
//!
//! Line-oriented UTF-8. Header `T N` (frame count, track count), then one
//! line per track holding `T` triples `u v vis` with vis in {0, 1}.

use super::FormatError;
use crate::geom::Pixel;

/// N trajectories over T frames. Tracks are seeded in the first frame, so
/// frame-0 visibility is 1 for every track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSet {
    n_tracks: usize,
    n_frames: usize,
    positions: Vec<Pixel>,
    visibility: Vec<u8>,
}

impl TrackSet {
    pub fn new(
        n_tracks: usize,
        n_frames: usize,
        positions: Vec<Pixel>,
        visibility: Vec<u8>,
    ) -> Result<Self, FormatError> {
        let expected = n_tracks * n_frames;
        if positions.len() != expected || visibility.len() != expected {
            return Err(FormatError::InvalidRaster(format!(
                "track set needs {expected} samples, got {} positions / {} visibility",
                positions.len(),
                visibility.len()
            )));
        }
        for (i, vis) in visibility.iter().enumerate() {
            if *vis > 1 {
                return Err(FormatError::InvalidRaster(format!(
                    "visibility {vis} at track {} frame {} outside {{0, 1}}",
                    i / n_frames.max(1),
                    i % n_frames.max(1)
                )));
            }
            if *vis == 1 && !(positions[i].u.is_finite() && positions[i].v.is_finite()) {
                return Err(FormatError::InvalidRaster(format!(
                    "visible track {} frame {} has nonfinite position",
                    i / n_frames.max(1),
                    i % n_frames.max(1)
                )));
            }
        }
        if n_frames > 0 {
            for track in 0..n_tracks {
                if visibility[track * n_frames] != 1 {
                    return Err(FormatError::InvalidRaster(format!(
                        "track {track} is not visible in the first frame"
                    )));
                }
            }
        }
        Ok(Self { n_tracks, n_frames, positions, visibility })
    }

    pub fn empty(n_frames: usize) -> Self {
        Self { n_tracks: 0, n_frames, positions: Vec::new(), visibility: Vec::new() }
    }

    pub fn n_tracks(&self) -> usize {
        self.n_tracks
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn position(&self, track: usize, frame: usize) -> Pixel {
        self.positions[track * self.n_frames + frame]
    }

    pub fn visible(&self, track: usize, frame: usize) -> bool {
        self.visibility[track * self.n_frames + frame] == 1
    }
}

pub fn read_tracks(text: &str) -> Result<TrackSet, FormatError> {
    const FILE: &str = "tracks";
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (header_idx, header) = lines
        .next()
        .ok_or_else(|| FormatError::Parse { file: FILE, line: 1, msg: "missing header".into() })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 2 {
        return Err(FormatError::Parse {
            file: FILE,
            line: header_idx + 1,
            msg: "header must be `T N`".into(),
        });
    }
    let n_frames: usize = tokens[0].parse().map_err(|_| FormatError::Parse {
        file: FILE,
        line: header_idx + 1,
        msg: format!("bad frame count {:?}", tokens[0]),
    })?;
    let n_tracks: usize = tokens[1].parse().map_err(|_| FormatError::Parse {
        file: FILE,
        line: header_idx + 1,
        msg: format!("bad track count {:?}", tokens[1]),
    })?;

    let mut positions = Vec::with_capacity(n_tracks * n_frames);
    let mut visibility = Vec::with_capacity(n_tracks * n_frames);
    for track in 0..n_tracks {
        let (line_idx, line) = lines.next().ok_or_else(|| FormatError::Parse {
            file: FILE,
            line: header_idx + 2 + track,
            msg: format!("missing line for track {track}"),
        })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != n_frames * 3 {
            return Err(FormatError::Parse {
                file: FILE,
                line: line_idx + 1,
                msg: format!(
                    "track {track}: expected {} fields, found {}",
                    n_frames * 3,
                    fields.len()
                ),
            });
        }
        for frame in 0..n_frames {
            let u: f64 = fields[frame * 3].parse().map_err(|_| FormatError::Parse {
                file: FILE,
                line: line_idx + 1,
                msg: format!("track {track}: bad u {:?}", fields[frame * 3]),
            })?;
            let v: f64 = fields[frame * 3 + 1].parse().map_err(|_| FormatError::Parse {
                file: FILE,
                line: line_idx + 1,
                msg: format!("track {track}: bad v {:?}", fields[frame * 3 + 1]),
            })?;
            let vis: u8 = fields[frame * 3 + 2].parse().map_err(|_| FormatError::Parse {
                file: FILE,
                line: line_idx + 1,
                msg: format!("track {track}: bad visibility {:?}", fields[frame * 3 + 2]),
            })?;
            if vis > 1 {
                return Err(FormatError::Parse {
                    file: FILE,
                    line: line_idx + 1,
                    msg: format!("track {track}: visibility {vis} outside {{0, 1}}"),
                });
            }
            positions.push(Pixel::new(u, v));
            visibility.push(vis);
        }
    }
    TrackSet::new(n_tracks, n_frames, positions, visibility)
}

pub fn write_tracks(tracks: &TrackSet) -> String {
    let mut out = format!("{} {}\n", tracks.n_frames(), tracks.n_tracks());
    for track in 0..tracks.n_tracks() {
        let mut fields = Vec::with_capacity(tracks.n_frames() * 3);
        for frame in 0..tracks.n_frames() {
            let p = tracks.position(track, frame);
            fields.push(format!("{} {} {}", p.u, p.v, tracks.visible(track, frame) as u8));
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}
