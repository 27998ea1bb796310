import { describe, expect, it } from "vitest";
import { SessionLog } from "../src/session.js";
import { BoundedRing } from "../src/ring.js";

describe("SessionLog", () => {
  it("exports the synthesizer's control CSV format", () => {
    const log = new SessionLog();
    log.push({ time: 0, rpm: 600, torque: 0.08 });
    log.push({ time: 0.008, rpm: 612.5, torque: 1 });
    const csv = log.toCsv();
    const lines = csv.split("\n");
    expect(lines[0]).toBe("time,rpm,torque");
    expect(lines[1]).toBe("0,600,0.08");
    expect(lines[2]).toBe("0.008,612.5,1");
    expect(csv.endsWith("\n")).toBe(true);
  });

  it("round-trips values at full float precision", () => {
    const log = new SessionLog();
    const frame = { time: 1 / 3, rpm: 1234.5678901234567, torque: -0.123456789 };
    log.push(frame);
    const row = log.toCsv().split("\n")[1]!.split(",");
    expect(Number(row[0])).toBe(frame.time);
    expect(Number(row[1])).toBe(frame.rpm);
    expect(Number(row[2])).toBe(frame.torque);
  });

  it("rejects non-increasing frame times", () => {
    const log = new SessionLog();
    log.push({ time: 0.5, rpm: 1000, torque: 0 });
    expect(() => log.push({ time: 0.5, rpm: 1000, torque: 0 })).toThrow(RangeError);
    expect(() => log.push({ time: 0.4, rpm: 1000, torque: 0 })).toThrow(RangeError);
  });

  it("formats one protocol line per frame", () => {
    expect(SessionLog.toLine({ time: 0.016, rpm: 650, torque: -1 })).toBe("0.016,650,-1\n");
  });
});

describe("BoundedRing", () => {
  it("is first-in first-out", () => {
    const ring = new BoundedRing<number>(4);
    ring.push(1);
    ring.push(2);
    ring.push(3);
    expect(ring.shift()).toBe(1);
    expect(ring.shift()).toBe(2);
    ring.push(4);
    expect(ring.shift()).toBe(3);
    expect(ring.shift()).toBe(4);
    expect(ring.shift()).toBeUndefined();
  });

  it("drops the oldest entry on overflow and counts it", () => {
    const ring = new BoundedRing<number>(2);
    ring.push(1);
    ring.push(2);
    ring.push(3);
    expect(ring.dropped).toBe(1);
    expect(ring.shift()).toBe(2);
    expect(ring.shift()).toBe(3);
  });

  it("rejects non-positive capacity", () => {
    expect(() => new BoundedRing(0)).toThrow(RangeError);
  });
});
