// Browser shell: gauges, pedal key bindings and the scrolling
// spectrogram. Pure rendering over the headless DrivingConsole core; all
// behavior that matters lives (and is tested) in console.ts.

import { DrivingConsole, TICK_RATE_HZ } from "./console.js";
import { IDLE_RPM, NEUTRAL, REDLINE_RPM } from "./vehicle.js";

export interface UiElements {
  rpmGauge: HTMLCanvasElement;
  torqueReadout: HTMLElement;
  gearReadout: HTMLElement;
  statusReadout: HTMLElement;
  spectrogram: HTMLCanvasElement;
}

export class ConsoleUi {
  private tickTimer: ReturnType<typeof setInterval> | null = null;
  private drawTimer: ReturnType<typeof setInterval> | null = null;
  private spectColumn = 0;

  constructor(
    private readonly console_: DrivingConsole,
    private readonly el: UiElements,
  ) {}

  /** Map keys to pedals: W throttle, S brake, 1-6 gears, N neutral, C clutch. */
  bindKeys(target: { addEventListener: Window["addEventListener"] }): void {
    const set = (down: boolean) => (ev: KeyboardEvent) => {
      const key = ev.key.toLowerCase();
      if (key === "w") this.console_.setPedals({ throttle: down ? 1 : 0 });
      else if (key === "s") this.console_.setPedals({ brake: down ? 1 : 0 });
      else if (down && key >= "1" && key <= "6") this.console_.setPedals({ gear: Number(key) });
      else if (down && key === "n") this.console_.setPedals({ gear: NEUTRAL });
      else if (key === "c") this.console_.setPedals({ clutchEngaged: !down });
    };
    target.addEventListener("keydown", set(true));
    target.addEventListener("keyup", set(false));
  }

  start(): void {
    this.tickTimer = setInterval(() => this.console_.tick(), 1000 / TICK_RATE_HZ);
    this.drawTimer = setInterval(() => this.draw(), 1000 / 30); // 30 fps display
  }

  stop(): void {
    if (this.tickTimer) clearInterval(this.tickTimer);
    if (this.drawTimer) clearInterval(this.drawTimer);
  }

  private draw(): void {
    const g = this.console_.gauges;
    this.drawRpmGauge(g.rpm);
    this.el.torqueReadout.textContent =
      `${g.torque >= 0 ? "+" : ""}${g.torque.toFixed(2)}` + (g.torque < 0 ? " (fuel cut)" : "");
    this.el.gearReadout.textContent = g.gear === NEUTRAL ? "N" : String(g.gear);
    this.el.statusReadout.textContent = g.muted
      ? "muted — audio stalled"
      : g.droppedFrames > 0
        ? `${g.droppedFrames} dropped`
        : "live";
    this.drawSpectrogram();
  }

  private drawRpmGauge(rpm: number): void {
    const ctx = this.el.rpmGauge.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.el.rpmGauge;
    const cx = width / 2;
    const cy = height * 0.9;
    const radius = Math.min(cx, cy) * 0.9;
    ctx.clearRect(0, 0, width, height);
    ctx.strokeStyle = "#888";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(cx, cy, radius, Math.PI, 2 * Math.PI);
    ctx.stroke();
    const frac = (rpm - IDLE_RPM) / (REDLINE_RPM - IDLE_RPM);
    const angle = Math.PI * (1 + Math.min(Math.max(frac, 0), 1));
    ctx.strokeStyle = frac > 0.85 ? "#d33" : "#3d3";
    ctx.lineWidth = 3;
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(cx + radius * Math.cos(angle), cy + radius * Math.sin(angle));
    ctx.stroke();
    ctx.fillStyle = "#ccc";
    ctx.font = "14px monospace";
    ctx.textAlign = "center";
    ctx.fillText(`${Math.round(rpm)} rpm`, cx, cy - radius * 0.3);
  }

  private drawSpectrogram(): void {
    const ctx = this.el.spectrogram.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.el.spectrogram;
    const frames = this.console_.spectrogramFrames;
    const latest = frames[frames.length - 1];
    if (!latest) return;
    // scroll one column per new frame, newest at the right edge
    ctx.drawImage(this.el.spectrogram, -1, 0);
    const floor = this.console_.spectrogram.floorDb;
    for (let y = 0; y < height; y++) {
      const bin = Math.floor(((height - 1 - y) / height) * latest.length);
      const v = Math.min(Math.max((latest[bin]! - floor) / -floor, 0), 1);
      ctx.fillStyle = `hsl(${260 - 260 * v}, 80%, ${10 + 45 * v}%)`;
      ctx.fillRect(width - 1, y, 1, 1);
    }
    this.spectColumn += 1;
  }
}
