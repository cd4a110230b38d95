//! RIFF/WAVE decoding for 16-bit integer and 32-bit float PCM.

use comfeat_core::audio::{check_duration, AudioClip, AudioError};
use thiserror::Error;

const WAVE_FORMAT_PCM: u16 = 0x0001;
const WAVE_FORMAT_IEEE_FLOAT: u16 = 0x0003;
const WAVE_FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WavError {
    #[error("malformed WAV file: {0}")]
    MalformedFile(&'static str),
    #[error("unsupported WAV encoding (format tag {format_tag:#06x}, {bits} bits); only 16-bit PCM and 32-bit float are accepted")]
    UnsupportedFormat { format_tag: u16, bits: u16 },
    #[error("audio longer than the 10 minute limit")]
    TooLong,
}

impl From<AudioError> for WavError {
    fn from(e: AudioError) -> Self {
        match e {
            AudioError::TooLong => WavError::TooLong,
            AudioError::BadSampleRate => WavError::MalformedFile("zero sample rate"),
            _ => WavError::MalformedFile("inconsistent sample data"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Format {
    tag: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<Format, WavError> {
    if body.len() < 16 {
        return Err(WavError::MalformedFile("fmt chunk shorter than 16 bytes"));
    }
    let mut tag = u16_at(body, 0);
    let bits = u16_at(body, 14);
    if tag == WAVE_FORMAT_EXTENSIBLE {
        if body.len() < 40 {
            return Err(WavError::MalformedFile("truncated WAVE_FORMAT_EXTENSIBLE header"));
        }
        // first two bytes of the sub-format GUID carry the plain format tag
        tag = u16_at(body, 24);
    }
    let fmt = Format {
        tag,
        channels: u16_at(body, 2),
        sample_rate: u32_at(body, 4),
        block_align: u16_at(body, 12),
        bits,
    };
    match (fmt.tag, fmt.bits) {
        (WAVE_FORMAT_PCM, 16) | (WAVE_FORMAT_IEEE_FLOAT, 32) => {}
        _ => {
            return Err(WavError::UnsupportedFormat {
                format_tag: fmt.tag,
                bits: fmt.bits,
            })
        }
    }
    if fmt.channels == 0 {
        return Err(WavError::MalformedFile("zero channels"));
    }
    if fmt.sample_rate == 0 {
        return Err(WavError::MalformedFile("zero sample rate"));
    }
    if usize::from(fmt.block_align) != usize::from(fmt.channels) * usize::from(fmt.bits / 8) {
        return Err(WavError::MalformedFile(
            "block_align disagrees with channels and bit depth",
        ));
    }
    Ok(fmt)
}

/// Decodes a little-endian RIFF/WAVE file.
///
/// 16-bit samples are scaled by 1/32768, so -32768 maps to exactly -1.0.
/// Float samples are clamped to [-1, 1]. Unknown chunks are skipped.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip, WavError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::MalformedFile("missing RIFF/WAVE header"));
    }
    let mut fmt = None;
    let mut data = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = u32_at(bytes, at + 4) as usize;
        let body_start = at + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&end| end <= bytes.len())
            .ok_or(WavError::MalformedFile("chunk runs past end of file"))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => {
                data = Some(body);
                if fmt.is_some() {
                    break;
                }
            }
            _ => {}
        }
        // chunks are word aligned
        at = body_end + (size & 1);
    }
    let fmt = fmt.ok_or(WavError::MalformedFile("no fmt chunk"))?;
    let data = data.ok_or(WavError::MalformedFile("no data chunk"))?;
    let block = usize::from(fmt.block_align);
    if data.len() % block != 0 {
        return Err(WavError::MalformedFile("data chunk holds a partial frame"));
    }
    let frames = data.len() / block;
    check_duration(frames as u64, fmt.sample_rate)?;

    let n_channels = usize::from(fmt.channels);
    let mut channels = vec![Vec::with_capacity(frames); n_channels];
    let width = usize::from(fmt.bits / 8);
    for frame in data.chunks_exact(block) {
        for (c, sample) in frame.chunks_exact(width).enumerate() {
            let v = if fmt.tag == WAVE_FORMAT_PCM {
                f64::from(i16::from_le_bytes([sample[0], sample[1]])) / 32768.0
            } else {
                let f = f32::from_le_bytes([sample[0], sample[1], sample[2], sample[3]]);
                if !f.is_finite() {
                    return Err(WavError::MalformedFile("non-finite float sample"));
                }
                f64::from(f).clamp(-1.0, 1.0)
            };
            channels[c].push(v);
        }
    }
    Ok(AudioClip::new(channels, fmt.sample_rate)?)
}

fn encode(channels: &[Vec<f64>], sample_rate: u32, tag: u16, bits: u16) -> Vec<u8> {
    let n_ch = channels.len() as u16;
    let frames = channels.first().map_or(0, Vec::len);
    let block_align = n_ch * bits / 8;
    let data_len = frames * usize::from(block_align);
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&n_ch.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * u32::from(block_align)).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for i in 0..frames {
        for ch in channels {
            if tag == WAVE_FORMAT_PCM {
                let q = (ch[i] * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&q.to_le_bytes());
            } else {
                out.extend_from_slice(&(ch[i] as f32).to_le_bytes());
            }
        }
    }
    out
}

/// Canonical 44-byte-header 16-bit PCM WAV. Samples are rounded to the
/// nearest step of 1/32768 and saturated at 32767.
pub fn encode_wav_pcm16(channels: &[Vec<f64>], sample_rate: u32) -> Vec<u8> {
    encode(channels, sample_rate, WAVE_FORMAT_PCM, 16)
}

pub fn encode_wav_f32(channels: &[Vec<f64>], sample_rate: u32) -> Vec<u8> {
    encode(channels, sample_rate, WAVE_FORMAT_IEEE_FLOAT, 32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcm16(samples: &[i16], channels: u16, rate: u32) -> Vec<u8> {
        let per_channel: Vec<Vec<f64>> = (0..channels as usize)
            .map(|c| {
                samples
                    .iter()
                    .skip(c)
                    .step_by(channels as usize)
                    .map(|&s| f64::from(s) / 32768.0)
                    .collect()
            })
            .collect();
        encode_wav_pcm16(&per_channel, rate)
    }

    #[test]
    fn scales_by_inverse_32768() {
        let clip = decode_wav(&pcm16(&[0, 16384, -32768], 1, 16000)).unwrap();
        assert_eq!(clip.channels(), &[vec![0.0, 0.5, -1.0]]);
        assert_eq!(clip.sample_rate(), 16000);
    }

    #[test]
    fn stereo_shape() {
        let clip = decode_wav(&pcm16(&[1, 2, 3, 4], 2, 44100)).unwrap();
        assert_eq!(clip.channel_count(), 2);
        assert_eq!(clip.len(), 2);
        assert_eq!(clip.channels()[1][1], 4.0 / 32768.0);
    }

    #[test]
    fn float_format() {
        let bytes = encode_wav_f32(&[vec![0.25, -0.5, 1.0]], 8000);
        let clip = decode_wav(&bytes).unwrap();
        assert_eq!(clip.channels(), &[vec![0.25, -0.5, 1.0]]);
    }

    #[test]
    fn float_overshoot_is_clamped() {
        let bytes = encode_wav_f32(&[vec![1.5, -2.0]], 8000);
        assert_eq!(decode_wav(&bytes).unwrap().channels(), &[vec![1.0, -1.0]]);
    }

    #[test]
    fn rifx_is_malformed() {
        let mut bytes = pcm16(&[0, 1], 1, 16000);
        bytes[..4].copy_from_slice(b"RIFX");
        assert!(matches!(decode_wav(&bytes), Err(WavError::MalformedFile(_))));
    }

    #[test]
    fn eight_bit_is_unsupported() {
        let mut bytes = pcm16(&[0, 1], 1, 16000);
        // bits per sample 8, block align 1
        bytes[34..36].copy_from_slice(&8u16.to_le_bytes());
        bytes[32..34].copy_from_slice(&1u16.to_le_bytes());
        assert_eq!(
            decode_wav(&bytes),
            Err(WavError::UnsupportedFormat {
                format_tag: 1,
                bits: 8
            })
        );
    }

    #[test]
    fn compressed_is_unsupported() {
        let mut bytes = pcm16(&[0, 1], 1, 16000);
        bytes[20..22].copy_from_slice(&0x0055u16.to_le_bytes());
        assert!(matches!(
            decode_wav(&bytes),
            Err(WavError::UnsupportedFormat { format_tag: 0x55, .. })
        ));
    }

    #[test]
    fn structural_errors() {
        let good = pcm16(&[0, 1, 2], 1, 16000);
        assert!(decode_wav(&good[..20]).is_err());
        // data chunk claims more bytes than present
        assert!(matches!(
            decode_wav(&good[..good.len() - 1]),
            Err(WavError::MalformedFile(_))
        ));
        assert!(decode_wav(b"").is_err());
        let mut zero_ch = good.clone();
        zero_ch[22..24].copy_from_slice(&0u16.to_le_bytes());
        assert!(matches!(decode_wav(&zero_ch), Err(WavError::MalformedFile(_))));
    }

    #[test]
    fn skips_unknown_chunks() {
        let good = pcm16(&[5, -5], 1, 16000);
        let mut bytes = good[..12].to_vec();
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&[1, 2, 3, 0]); // odd size plus pad byte
        bytes.extend_from_slice(&good[12..]);
        let riff_len = (bytes.len() - 8) as u32;
        bytes[4..8].copy_from_slice(&riff_len.to_le_bytes());
        let clip = decode_wav(&bytes).unwrap();
        assert_eq!(clip.len(), 2);
    }

    #[test]
    fn extensible_pcm() {
        let good = pcm16(&[7, 8], 1, 16000);
        let mut bytes = good[..12].to_vec();
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&40u32.to_le_bytes());
        let mut fmt = good[20..36].to_vec();
        fmt[0..2].copy_from_slice(&WAVE_FORMAT_EXTENSIBLE.to_le_bytes());
        fmt.extend_from_slice(&22u16.to_le_bytes()); // cbSize
        fmt.extend_from_slice(&16u16.to_le_bytes()); // valid bits
        fmt.extend_from_slice(&4u32.to_le_bytes()); // channel mask
        fmt.extend_from_slice(&1u16.to_le_bytes()); // sub-format tag
        fmt.extend_from_slice(&[0; 14]);
        bytes.extend_from_slice(&fmt);
        bytes.extend_from_slice(&good[36..]);
        let clip = decode_wav(&bytes).unwrap();
        assert_eq!(clip.channels()[0][1], 8.0 / 32768.0);
    }

    #[test]
    fn too_long() {
        // header only: 8000 Hz mono, data chunk declaring > 600 s
        let mut bytes = pcm16(&[], 1, 8000);
        let frames: u32 = 600 * 8000 + 1;
        bytes[40..44].copy_from_slice(&(frames * 2).to_le_bytes());
        bytes.resize(44 + frames as usize * 2, 0);
        assert_eq!(decode_wav(&bytes), Err(WavError::TooLong));
    }
}
