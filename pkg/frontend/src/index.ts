export * from "./vehicle.js";
export * from "./session.js";
export * from "./ring.js";
export * from "./spectrogram.js";
export * from "./bridge.js";
export * from "./console.js";
export * from "./ui.js";
