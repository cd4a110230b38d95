//! Decoded PCM audio, channel mixing and band-limited resampling.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

/// Rate every feature extractor expects.
pub const MODEL_SAMPLE_RATE: u32 = 16_000;

/// Longest clip accepted anywhere in the pipeline.
pub const MAX_DURATION_SECS: u64 = 600;

/// Kaiser shape parameter of the interpolation kernel.
pub const KAISER_BETA: f64 = 8.6;

/// Zero crossings of the sinc kernel on each side of its center.
pub const ZERO_CROSSINGS: usize = 32;

// Above this many phases the kernel is evaluated per output sample instead
// of being tabulated.
const MAX_TABULATED_PHASES: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AudioError {
    #[error("channels have unequal lengths")]
    RaggedChannels,
    #[error("clip has no channels")]
    NoChannels,
    #[error("sample rate must be positive")]
    BadSampleRate,
    #[error("sample outside [-1, 1] or not finite")]
    SampleOutOfRange,
    #[error("resampling requires a mono clip, got {0} channels")]
    NotMono(usize),
    #[error("clip lasts longer than {MAX_DURATION_SECS} seconds")]
    TooLong,
}

/// Decoded PCM audio. Every channel has the same length and every sample lies
/// in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::BadSampleRate);
        }
        let first = channels.first().ok_or(AudioError::NoChannels)?;
        if channels.iter().any(|c| c.len() != first.len()) {
            return Err(AudioError::RaggedChannels);
        }
        if channels.iter().flatten().any(|s| !(-1.0..=1.0).contains(s)) {
            return Err(AudioError::SampleOutOfRange);
        }
        Ok(Self {
            channels,
            sample_rate,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        Self::new(vec![samples], sample_rate)
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / f64::from(self.sample_rate)
    }

    /// The single channel of a mono clip.
    pub fn samples(&self) -> Result<&[f64], AudioError> {
        match self.channels.as_slice() {
            [only] => Ok(only),
            many => Err(AudioError::NotMono(many.len())),
        }
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }
}

/// Rejects clips longer than [`MAX_DURATION_SECS`] given only their header
/// shape, so callers can refuse before allocating.
pub fn check_duration(frames: u64, sample_rate: u32) -> Result<(), AudioError> {
    if sample_rate == 0 {
        return Err(AudioError::BadSampleRate);
    }
    if frames > MAX_DURATION_SECS * u64::from(sample_rate) {
        return Err(AudioError::TooLong);
    }
    Ok(())
}

/// Averages all channels into one. Mono input is returned unchanged.
pub fn to_mono(clip: AudioClip) -> AudioClip {
    if clip.channel_count() == 1 {
        return clip;
    }
    let n = clip.channel_count() as f64;
    let len = clip.len();
    let mut mixed = vec![0.0; len];
    for channel in &clip.channels {
        for (acc, s) in mixed.iter_mut().zip(channel) {
            *acc += s;
        }
    }
    for s in &mut mixed {
        *s /= n;
    }
    AudioClip {
        channels: vec![mixed],
        sample_rate: clip.sample_rate,
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// Kaiser-windowed low-pass sinc kernel in units of input samples.
struct SincKernel {
    cutoff: f64,
    half_width: f64,
    norm: f64,
}

impl SincKernel {
    fn new(cutoff: f64) -> Self {
        Self {
            cutoff,
            half_width: ZERO_CROSSINGS as f64 / cutoff,
            norm: 1.0 / bessel_i0(KAISER_BETA),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let r = t / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let x = self.cutoff * t;
        let sinc = if x == 0.0 {
            1.0
        } else {
            libm::sin(PI * x) / (PI * x)
        };
        let window = bessel_i0(KAISER_BETA * libm::sqrt(1.0 - r * r)) * self.norm;
        self.cutoff * sinc * window
    }
}

/// Rational-ratio polyphase resampler with a Kaiser-windowed sinc kernel.
///
/// The kernel cutoff sits at the lower of the two Nyquist frequencies. The
/// signal is treated as zero outside the clip. Output has
/// `round(len * target / source)` samples, clamped to `[-1, 1]`.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip, AudioError> {
    let input = clip.samples()?;
    if target_rate == 0 {
        return Err(AudioError::BadSampleRate);
    }
    if target_rate == clip.sample_rate {
        return Ok(clip.clone());
    }
    let source_rate = u64::from(clip.sample_rate);
    let g = gcd(source_rate, u64::from(target_rate));
    let up = u64::from(target_rate) / g;
    let down = source_rate / g;

    let n_in = input.len() as u64;
    let n_out = (2 * n_in * up + down) / (2 * down);

    let kernel = SincKernel::new((up as f64 / down as f64).min(1.0));
    let reach = libm::ceil(kernel.half_width) as i64;
    let taps = (2 * reach + 1) as usize;

    // tap k of phase p weights input sample (base + k - reach)
    let table: Option<Vec<f64>> = (up <= MAX_TABULATED_PHASES).then(|| {
        let mut table = Vec::with_capacity(up as usize * taps);
        for phase in 0..up {
            let frac = phase as f64 / up as f64;
            for k in 0..taps as i64 {
                table.push(kernel.eval(frac - (k - reach) as f64));
            }
        }
        table
    });

    let mut out = Vec::with_capacity(n_out as usize);
    for n in 0..n_out {
        let pos = n * down;
        let base = (pos / up) as i64;
        let phase = pos % up;
        let frac = phase as f64 / up as f64;
        let lo = (base - reach).max(0);
        let hi = (base + reach).min(n_in as i64 - 1);
        let mut acc = 0.0;
        match &table {
            Some(table) => {
                let row = &table[phase as usize * taps..(phase as usize + 1) * taps];
                for j in lo..=hi {
                    acc += input[j as usize] * row[(j - base + reach) as usize];
                }
            }
            None => {
                for j in lo..=hi {
                    acc += input[j as usize] * kernel.eval(frac - (j - base) as f64);
                }
            }
        }
        out.push(acc.clamp(-1.0, 1.0));
    }

    Ok(AudioClip {
        channels: vec![out],
        sample_rate: target_rate,
    })
}
