// Fixed render palette, one RGB triple per semantic class id. Byte-exact
// mirror of the service's float palette (each channel is round(v * 255)).

export const CLASS_NAMES = [
  "void",
  "road",
  "sidewalk",
  "building",
  "vegetation",
  "vehicle",
  "pedestrian",
  "traffic_light",
] as const;

export const NUM_CLASSES = CLASS_NAMES.length;

export type Rgb = readonly [number, number, number];

export const PALETTE: readonly Rgb[] = [
  [13, 13, 13],    // void        0.05 0.05 0.05
  [128, 64, 128],  // road        0.50 0.25 0.50
  [245, 36, 232],  // sidewalk    0.96 0.14 0.91
  [69, 69, 69],    // building    0.27 0.27 0.27
  [107, 143, 36],  // vegetation  0.42 0.56 0.14
  [0, 0, 143],     // vehicle     0.00 0.00 0.56
  [219, 20, 61],   // pedestrian  0.86 0.08 0.24
  [250, 171, 31],  // traffic_light 0.98 0.67 0.12
];

export function colorOf(classId: number): Rgb {
  const rgb = PALETTE[classId];
  if (!rgb) throw new RangeError(`class id ${classId} out of range`);
  return rgb;
}
