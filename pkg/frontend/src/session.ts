// Session recording: every control frame sent to the synthesizer is
// logged and exportable as a control CSV (`time,rpm,torque`) that the
// offline renderer replays bit-for-bit. Deterministic replay through the
// CLI is the correctness oracle for the interactive path.

export interface ControlFrame {
  time: number;
  rpm: number;
  torque: number;
}

export class SessionLog {
  private frames: ControlFrame[] = [];

  push(frame: ControlFrame): void {
    const last = this.frames[this.frames.length - 1];
    if (last !== undefined && frame.time <= last.time) {
      throw new RangeError(
        `control frame time must increase: ${frame.time} after ${last.time}`,
      );
    }
    this.frames.push({ ...frame });
  }

  get length(): number {
    return this.frames.length;
  }

  at(index: number): ControlFrame {
    const f = this.frames[index];
    if (f === undefined) {
      throw new RangeError(`no frame at index ${index}`);
    }
    return { ...f };
  }

  /** Control CSV in the synthesizer's input format. */
  toCsv(): string {
    const lines = ["time,rpm,torque"];
    for (const f of this.frames) {
      lines.push(`${f.time},${f.rpm},${f.torque}`);
    }
    return lines.join("\n") + "\n";
  }

  /** One `time,rpm,torque` line for the streaming protocol. */
  static toLine(frame: ControlFrame): string {
    return `${frame.time},${frame.rpm},${frame.torque}\n`;
  }
}
