//! 8-bit rasters and binary PGM/PPM (P5/P6) I/O.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    /// 1 (gray) or 3 (RGB).
    pub channels: u8,
    /// Row-major, interleaved channels.
    pub data: Vec<u8>,
}

impl Raster {
    pub fn new(width: u32, height: u32, channels: u8) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Format(format!("unsupported channel count {channels}")));
        }
        let len = width as usize * height as usize * channels as usize;
        Ok(Self { width, height, channels, data: vec![0; len] })
    }

    pub fn from_fn(width: u32, height: u32, channels: u8, mut f: impl FnMut(u32, u32, u8) -> u8) -> Result<Self> {
        let mut r = Self::new(width, height, channels)?;
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    let i = r.index(x, y, c);
                    r.data[i] = f(x, y, c);
                }
            }
        }
        Ok(r)
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32, c: u8) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize + c as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: u8) -> u8 {
        self.data[self.index(x, y, c)]
    }

    pub fn write_pnm<W: Write>(&self, mut w: W) -> Result<()> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        write!(w, "{magic}\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.data)?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_pnm(std::io::BufWriter::new(f))
    }

    pub fn read_pnm<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let magic = next_token(&mut r)?;
        let channels = match magic.as_str() {
            "P5" => 1,
            "P6" => 3,
            other => return Err(Error::Format(format!("expected P5 or P6, found {other:?}"))),
        };
        let width = parse_num(&next_token(&mut r)?)?;
        let height = parse_num(&next_token(&mut r)?)?;
        let maxval = parse_num(&next_token(&mut r)?)?;
        if maxval != 255 {
            return Err(Error::Format(format!("only maxval 255 is supported, found {maxval}")));
        }
        let mut img = Self::new(width, height, channels)?;
        r.read_exact(&mut img.data).map_err(|e| Error::Format(format!("truncated pixel data: {e}")))?;
        Ok(img)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_pnm(std::fs::File::open(path)?)
    }

    /// File extension matching the channel count.
    pub fn extension(&self) -> &'static str {
        if self.channels == 1 {
            "pgm"
        } else {
            "ppm"
        }
    }
}

/// Reads one header token, skipping whitespace and `#` comments, and consumes
/// exactly one whitespace byte after it.
fn next_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(Error::Format("unexpected end of header".into()));
        }
        match byte[0] {
            b'#' if tok.is_empty() => {
                let mut skip = Vec::new();
                r.read_until(b'\n', &mut skip)?;
            }
            b if b.is_ascii_whitespace() => {
                if !tok.is_empty() {
                    return Ok(tok);
                }
            }
            b => tok.push(b as char),
        }
    }
}

fn parse_num(s: &str) -> Result<u32> {
    s.parse().map_err(|_| Error::Format(format!("bad header number {s:?}")))
}
