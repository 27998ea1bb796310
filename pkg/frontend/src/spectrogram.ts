// Incremental spectrogram analysis of the streamed audio. A Hann-windowed
// 1024-point FFT every 256 samples gives 62.5 frames/s at 16 kHz, well
// above the 20 fps display target; the UI just blits the latest columns.

export interface SpectrogramOptions {
  fftSize?: number; // power of two
  hop?: number;
  sampleRate?: number;
  floorDb?: number;
}

/** In-place iterative radix-2 FFT over interleaved re/im arrays. */
export function fftRadix2(re: Float64Array, im: Float64Array): void {
  const n = re.length;
  if (n !== im.length || (n & (n - 1)) !== 0 || n === 0) {
    throw new RangeError(`FFT length must be a power of two, got ${n}`);
  }
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      [re[i], re[j]] = [re[j]!, re[i]!];
      [im[i], im[j]] = [im[j]!, im[i]!];
    }
  }
  for (let len = 2; len <= n; len <<= 1) {
    const ang = (-2 * Math.PI) / len;
    const wr = Math.cos(ang);
    const wi = Math.sin(ang);
    for (let i = 0; i < n; i += len) {
      let cr = 1;
      let ci = 0;
      for (let k = 0; k < len / 2; k++) {
        const ar = re[i + k]!;
        const ai = im[i + k]!;
        const br = re[i + k + len / 2]! * cr - im[i + k + len / 2]! * ci;
        const bi = re[i + k + len / 2]! * ci + im[i + k + len / 2]! * cr;
        re[i + k] = ar + br;
        im[i + k] = ai + bi;
        re[i + k + len / 2] = ar - br;
        im[i + k + len / 2] = ai - bi;
        const nr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = nr;
      }
    }
  }
}

export class SpectrogramAnalyzer {
  readonly fftSize: number;
  readonly hop: number;
  readonly sampleRate: number;
  readonly floorDb: number;
  private window: Float64Array;
  private pending: number[] = [];
  // preallocated work buffers: no audio-path allocation in steady state
  private re: Float64Array;
  private im: Float64Array;
  private frame: Float32Array;

  constructor(opts: SpectrogramOptions = {}) {
    this.fftSize = opts.fftSize ?? 1024;
    this.hop = opts.hop ?? 256;
    this.sampleRate = opts.sampleRate ?? 16000;
    this.floorDb = opts.floorDb ?? -100;
    if ((this.fftSize & (this.fftSize - 1)) !== 0) {
      throw new RangeError(`fftSize must be a power of two, got ${this.fftSize}`);
    }
    if (this.hop <= 0 || this.hop > this.fftSize) {
      throw new RangeError(`hop must be in (0, fftSize], got ${this.hop}`);
    }
    this.window = new Float64Array(this.fftSize);
    for (let i = 0; i < this.fftSize; i++) {
      this.window[i] = 0.5 - 0.5 * Math.cos((2 * Math.PI * i) / this.fftSize);
    }
    this.re = new Float64Array(this.fftSize);
    this.im = new Float64Array(this.fftSize);
    this.frame = new Float32Array(this.fftSize / 2 + 1);
  }

  get binCount(): number {
    return this.fftSize / 2 + 1;
  }

  get framesPerSecond(): number {
    return this.sampleRate / this.hop;
  }

  binFrequency(bin: number): number {
    return (bin * this.sampleRate) / this.fftSize;
  }

  /** Feed samples; returns one dB magnitude frame per completed hop. */
  push(samples: Float32Array | number[]): Float32Array[] {
    for (let i = 0; i < samples.length; i++) this.pending.push(samples[i]!);
    const frames: Float32Array[] = [];
    while (this.pending.length >= this.fftSize) {
      for (let i = 0; i < this.fftSize; i++) {
        this.re[i] = this.pending[i]! * this.window[i]!;
        this.im[i] = 0;
      }
      fftRadix2(this.re, this.im);
      for (let k = 0; k < this.binCount; k++) {
        const mag = Math.hypot(this.re[k]!, this.im[k]!);
        this.frame[k] = Math.max(20 * Math.log10(mag + 1e-12), this.floorDb);
      }
      frames.push(this.frame.slice());
      this.pending.splice(0, this.hop);
    }
    return frames;
  }
}
