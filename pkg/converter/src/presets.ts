// Dataset presets: expected dimensions, class names, published RGB
// palettes, and per-class train/test counts.

export interface Preset {
  name: string;
  height: number;
  width: number;
  bands: number;
  classNames: string[];
  palette: number[][];
  trainCounts: number[];
  testCounts: number[];
}

export const INDIAN_PINES: Preset = {
  name: "indian_pines",
  height: 145,
  width: 145,
  bands: 200,
  classNames: [
    "Corn Notill",
    "Corn Mintill",
    "Corn",
    "Grass Pasture",
    "Grass Trees",
    "Hay Windrowed",
    "Soybean Notill",
    "Soybean Mintill",
    "Soybean Clean",
    "Wheat",
    "Woods",
    "Buildings Grass Trees Drives",
    "Stone Steel Towers",
    "Alfalfa",
    "Grass Pasture Mowed",
    "Oats",
  ],
  palette: [
    [83, 171, 72],
    [137, 186, 67],
    [66, 132, 91],
    [60, 131, 69],
    [144, 82, 54],
    [105, 188, 200],
    [255, 255, 255],
    [199, 176, 201],
    [218, 51, 44],
    [119, 35, 36],
    [55, 101, 166],
    [224, 219, 84],
    [217, 142, 52],
    [84, 48, 126],
    [227, 119, 91],
    [157, 87, 150],
  ],
  trainCounts: [50, 50, 50, 50, 50, 50, 50, 50, 50, 50, 50, 50, 50, 15, 15, 15],
  testCounts: [
    1384, 784, 184, 447, 697, 439, 918, 2418, 564, 162, 1244, 330, 45, 39, 11,
    5,
  ],
};

export const PAVIA_UNIVERSITY: Preset = {
  name: "pavia_university",
  height: 610,
  width: 340,
  bands: 103,
  classNames: [
    "Asphalt",
    "Meadows",
    "Gravel",
    "Trees",
    "Metal Sheets",
    "Bare Soil",
    "Bitumen",
    "Bricks",
    "Shadows",
  ],
  palette: [
    [83, 171, 72],
    [66, 132, 91],
    [144, 82, 54],
    [255, 255, 255],
    [218, 51, 44],
    [55, 101, 166],
    [217, 142, 52],
    [227, 119, 91],
    [157, 87, 150],
  ],
  trainCounts: [548, 540, 392, 524, 265, 532, 375, 514, 231],
  testCounts: [6304, 18146, 1815, 2912, 1113, 4572, 981, 3364, 795],
};

export const HOUSTON_2013: Preset = {
  name: "houston2013",
  height: 349,
  width: 1905,
  bands: 144,
  classNames: [
    "Healthy Grass",
    "Stressed Grass",
    "Synthetic Grass",
    "Tree",
    "Soil",
    "Water",
    "Residential",
    "Commercial",
    "Road",
    "Highway",
    "Railway",
    "Parking Lot1",
    "Parking Lot2",
    "Tennis Court",
    "Running Track",
  ],
  palette: [
    [83, 171, 72],
    [137, 186, 67],
    [66, 132, 91],
    [60, 131, 69],
    [144, 82, 54],
    [105, 188, 200],
    [255, 255, 255],
    [218, 51, 44],
    [119, 35, 36],
    [55, 101, 166],
    [224, 219, 84],
    [217, 142, 52],
    [84, 48, 126],
    [227, 119, 91],
    [157, 87, 150],
  ],
  trainCounts: [
    198, 190, 192, 188, 186, 182, 196, 191, 193, 191, 181, 192, 184, 181, 187,
  ],
  testCounts: [
    1053, 1064, 505, 1056, 1056, 143, 1072, 1053, 1059, 1036, 1054, 1041, 285,
    247, 473,
  ],
};

export const PRESETS: { [name: string]: Preset } = {
  indian_pines: INDIAN_PINES,
  pavia_university: PAVIA_UNIVERSITY,
  houston2013: HOUSTON_2013,
};
