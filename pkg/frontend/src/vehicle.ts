// Toy longitudinal vehicle model: first-order RPM dynamics so pedal input
// yields plausible rpm/torque trajectories for the synthesizer. Gear
// ratios and inertia constants are fictional and tuned for feel, not
// physical accuracy.

export const IDLE_RPM = 600;
export const REDLINE_RPM = 8000;
export const NEUTRAL = 0;

/** Fraction of the rev range reachable at full throttle, per gear 1..6. */
const GEAR_TOP_FRACTION = [1.0, 0.92, 0.84, 0.76, 0.68, 0.6] as const;

/** RPM response time constant in seconds, per gear 1..6 (higher = lazier). */
const GEAR_TAU = [0.35, 0.5, 0.7, 0.95, 1.25, 1.6] as const;

const NEUTRAL_TAU = 0.25; // free-revving engine responds fast
const COAST_TAU = 1.1; // rpm decay when coasting in gear
const BRAKE_TAU = 0.45; // rpm decay under braking in gear
const IDLE_TORQUE = 0.08; // keeps combustion alive at idle
const OVERRUN_TORQUE = -0.6; // closed-throttle engine braking
const DFCO_MIN_RPM = 1100; // below this the injectors come back on

export interface VehicleState {
  rpm: number;
  /** 1..6, or NEUTRAL (0). */
  gear: number;
  /** Last applied throttle, [0, 1]. */
  throttle: number;
  /** Normalized load torque sent to the synthesizer, [-1, 1]. */
  torque: number;
  /** True when the engine is coupled to the driveline. */
  clutchEngaged: boolean;
}

export interface PedalInputs {
  /** Accelerator position, [0, 1]. */
  throttle: number;
  /** Brake position, [0, 1]; deepens engine braking in gear. */
  brake: number;
  gear: number;
  clutchEngaged: boolean;
}

export function initialVehicleState(): VehicleState {
  return { rpm: IDLE_RPM, gear: 1, throttle: 0, torque: IDLE_TORQUE, clutchEngaged: true };
}

function clamp(x: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, x));
}

/**
 * Advance the vehicle by `dt` seconds. RPM follows a first-order response
 * toward a gear-dependent target; torque is the throttle during
 * propulsion and goes negative during closed-throttle overrun, which
 * drives the synthesizer into its fuel-cut regime.
 */
export function stepVehicle(state: VehicleState, inputs: PedalInputs, dt: number): VehicleState {
  if (!(dt > 0)) {
    throw new RangeError(`dt must be positive, got ${dt}`);
  }
  const throttle = clamp(inputs.throttle, 0, 1);
  const brake = clamp(inputs.brake, 0, 1);
  const gear = inputs.gear === NEUTRAL ? NEUTRAL : clamp(Math.round(inputs.gear), 1, 6);
  const coupled = inputs.clutchEngaged && gear !== NEUTRAL;

  let target: number;
  let tau: number;
  if (!coupled) {
    // free engine: revs chase the pedal directly, fall to idle otherwise
    target = IDLE_RPM + throttle * (REDLINE_RPM - IDLE_RPM);
    tau = NEUTRAL_TAU;
  } else {
    const g = gear - 1;
    const top = IDLE_RPM + GEAR_TOP_FRACTION[g]! * (REDLINE_RPM - IDLE_RPM);
    target = IDLE_RPM + throttle * (top - IDLE_RPM);
    if (throttle > 0.02) {
      tau = GEAR_TAU[g]!;
    } else {
      target = IDLE_RPM;
      tau = brake > 0.02 ? BRAKE_TAU : COAST_TAU;
    }
  }

  const alpha = 1 - Math.exp(-dt / tau);
  const rpm = clamp(state.rpm + (target - state.rpm) * alpha, IDLE_RPM, REDLINE_RPM);

  let torque: number;
  if (throttle > 0.02) {
    torque = throttle; // propulsion: torque follows the pedal
  } else if (coupled && rpm > DFCO_MIN_RPM) {
    // closed-throttle overrun: fuel cut, driveline back-drives the engine
    torque = clamp(OVERRUN_TORQUE - 0.4 * brake, -1, 0);
  } else {
    torque = IDLE_TORQUE; // idling (or slow enough that injection resumes)
  }

  return { rpm, gear, throttle, torque, clutchEngaged: inputs.clutchEngaged };
}
