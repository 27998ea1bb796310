// Driving console core: ties the vehicle model, session log, stream
// bridge and spectrogram together. Deliberately DOM-free so the whole
// interactive path is testable headless; `ui.ts` owns the rendering.

import { StreamBridge, type EmittedBlock } from "./bridge.js";
import { BoundedRing } from "./ring.js";
import { SessionLog, type ControlFrame } from "./session.js";
import { SpectrogramAnalyzer } from "./spectrogram.js";
import {
  initialVehicleState,
  stepVehicle,
  type PedalInputs,
  type VehicleState,
} from "./vehicle.js";

export const TICK_RATE_HZ = 125; // matches the synthesizer's model rate

export interface ConsoleOptions {
  bridge?: StreamBridge;
  spectrogram?: SpectrogramAnalyzer;
  /** Control-frame buffer between the tick and the stream writer. */
  queueCapacity?: number;
}

export interface Gauges {
  rpm: number;
  torque: number;
  gear: number;
  throttle: number;
  muted: boolean;
  droppedFrames: number;
}

export class DrivingConsole {
  readonly session = new SessionLog();
  readonly bridge: StreamBridge | null;
  readonly spectrogram: SpectrogramAnalyzer;
  /** Latest spectrogram frames, newest last (bounded). */
  readonly spectrogramFrames: Float32Array[] = [];

  private state: VehicleState = initialVehicleState();
  private pedals: PedalInputs = { throttle: 0, brake: 0, gear: 1, clutchEngaged: true };
  private queue: BoundedRing<ControlFrame>;
  private elapsed = 0;
  private ticks = 0;

  constructor(opts: ConsoleOptions = {}) {
    this.bridge = opts.bridge ?? null;
    this.spectrogram = opts.spectrogram ?? new SpectrogramAnalyzer();
    this.queue = new BoundedRing(opts.queueCapacity ?? 64);
    this.bridge?.onBlock((block) => this.onAudio(block));
  }

  setPedals(pedals: Partial<PedalInputs>): void {
    this.pedals = { ...this.pedals, ...pedals };
  }

  get vehicle(): VehicleState {
    return { ...this.state };
  }

  get gauges(): Gauges {
    return {
      rpm: this.state.rpm,
      torque: this.state.torque,
      gear: this.state.gear,
      throttle: this.state.throttle,
      muted: this.bridge?.muted ?? false,
      droppedFrames: this.bridge?.droppedFrames ?? 0,
    };
  }

  get droppedControlFrames(): number {
    return this.queue.dropped;
  }

  /** One 125 Hz step: advance the vehicle, log and forward the frame. */
  tick(): ControlFrame {
    const dt = 1 / TICK_RATE_HZ;
    this.state = stepVehicle(this.state, this.pedals, dt);
    const frame: ControlFrame = {
      time: this.ticks / TICK_RATE_HZ,
      rpm: this.state.rpm,
      torque: this.state.torque,
    };
    this.ticks += 1;
    this.elapsed = frame.time;
    this.session.push(frame);
    this.queue.push(frame);
    this.drainQueue();
    return frame;
  }

  /** Session duration in seconds. */
  get duration(): number {
    return this.elapsed;
  }

  exportCsv(): string {
    return this.session.toCsv();
  }

  private drainQueue(): void {
    if (!this.bridge) {
      // no audio sink attached; keep the buffer from backing up
      while (this.queue.shift() !== undefined) { /* discard */ }
      return;
    }
    for (let f = this.queue.shift(); f !== undefined; f = this.queue.shift()) {
      this.bridge.sendFrame(f);
    }
  }

  private onAudio(block: EmittedBlock): void {
    for (const frame of this.spectrogram.push(block.samples)) {
      this.spectrogramFrames.push(frame);
      // keep roughly two seconds of history for the display
      const keep = Math.ceil(2 * this.spectrogram.framesPerSecond);
      if (this.spectrogramFrames.length > keep) this.spectrogramFrames.shift();
    }
  }
}
