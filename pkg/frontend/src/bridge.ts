// Bridge to the synthesizer core over its stdin/stdout streaming
// protocol: control frames go down as `time,rpm,torque` lines, audio
// comes back as fixed-size little-endian float32 blocks. Latency is
// tracked per frame (send timestamp vs the block that covers it) and the
// bridge mutes itself if the core stalls.

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { SessionLog, type ControlFrame } from "./session.js";

export interface BridgeOptions {
  /** Command that speaks the stream protocol (default: `ptrsynth`). */
  command?: string;
  args?: string[];
  blockSize?: number;
  sampleRate?: number;
  /** No audio for this long while frames are outstanding => muted. */
  stallTimeoutMs?: number;
}

export interface EmittedBlock {
  samples: Float32Array;
  /** Absolute index of the first sample in the stream. */
  startSample: number;
  timestampMs: number;
}

interface LatencyProbe {
  coveredSample: number;
  sentAtMs: number;
}

export class StreamBridge {
  readonly command: string;
  readonly args: string[];
  readonly blockSize: number;
  readonly sampleRate: number;
  readonly stallTimeoutMs: number;

  /** Wall-clock latency of each resolved control frame, in ms. */
  readonly latenciesMs: number[] = [];
  /** Malformed frames the core reported dropping. */
  droppedFrames = 0;
  muted = false;

  private child: ChildProcessWithoutNullStreams | null = null;
  private residue: Buffer = Buffer.alloc(0);
  private emittedSamples = 0;
  private probes: LatencyProbe[] = [];
  private blockHandlers: ((block: EmittedBlock) => void)[] = [];
  private exitPromise: Promise<number> | null = null;
  private stallTimer: NodeJS.Timeout | null = null;

  constructor(opts: BridgeOptions = {}) {
    this.command = opts.command ?? "ptrsynth";
    this.args = opts.args ?? ["stream"];
    this.blockSize = opts.blockSize ?? 512;
    this.sampleRate = opts.sampleRate ?? 16000;
    this.stallTimeoutMs = opts.stallTimeoutMs ?? 250;
  }

  onBlock(handler: (block: EmittedBlock) => void): void {
    this.blockHandlers.push(handler);
  }

  start(): void {
    if (this.child) throw new Error("bridge already started");
    const child = spawn(this.command, [...this.args, "--block", String(this.blockSize)], {
      stdio: ["pipe", "pipe", "pipe"],
    });
    this.child = child;
    child.stdout.on("data", (chunk: Buffer) => this.ingest(chunk));
    child.stderr.on("data", (chunk: Buffer) => {
      const text = chunk.toString();
      this.droppedFrames += (text.match(/warning: dropped frame/g) ?? []).length;
    });
    this.exitPromise = new Promise((resolve) => {
      child.on("close", (code) => resolve(code ?? -1));
    });
  }

  get totalEmittedSamples(): number {
    return this.emittedSamples;
  }

  sendFrame(frame: ControlFrame): void {
    if (!this.child) throw new Error("bridge not started");
    this.probes.push({
      coveredSample: Math.floor(frame.time * this.sampleRate),
      sentAtMs: Date.now(),
    });
    this.child.stdin.write(SessionLog.toLine(frame));
    this.armStallTimer();
  }

  /** Close the control stream and wait for the core to flush and exit. */
  async stop(): Promise<number> {
    if (!this.child || !this.exitPromise) throw new Error("bridge not started");
    this.child.stdin.end();
    const code = await this.exitPromise;
    if (this.stallTimer) clearTimeout(this.stallTimer);
    this.child = null;
    return code;
  }

  private armStallTimer(): void {
    if (this.stallTimer) clearTimeout(this.stallTimer);
    this.stallTimer = setTimeout(() => {
      if (this.probes.length > 0) this.muted = true;
    }, this.stallTimeoutMs);
    this.stallTimer.unref?.();
  }

  private ingest(chunk: Buffer): void {
    this.muted = false;
    this.residue = this.residue.length === 0 ? chunk : Buffer.concat([this.residue, chunk]);
    const blockBytes = this.blockSize * 4;
    while (this.residue.length >= blockBytes) {
      const raw = this.residue.subarray(0, blockBytes);
      this.residue = this.residue.subarray(blockBytes);
      const samples = new Float32Array(this.blockSize);
      for (let i = 0; i < this.blockSize; i++) samples[i] = raw.readFloatLE(i * 4);
      const block: EmittedBlock = {
        samples,
        startSample: this.emittedSamples,
        timestampMs: Date.now(),
      };
      this.emittedSamples += this.blockSize;
      this.resolveProbes(block.timestampMs);
      for (const handler of this.blockHandlers) handler(block);
    }
    if (this.probes.length > 0) this.armStallTimer();
  }

  private resolveProbes(nowMs: number): void {
    while (this.probes.length > 0 && this.probes[0]!.coveredSample < this.emittedSamples) {
      const probe = this.probes.shift()!;
      this.latenciesMs.push(nowMs - probe.sentAtMs);
    }
  }
}
