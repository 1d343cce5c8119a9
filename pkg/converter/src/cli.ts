#!/usr/bin/env node
// convert --cube F --labels F [--labels-test F] --preset NAME --out DIR

import { parseArgs } from "util";
import { convert } from "./convert";

function usage(): never {
  console.error(
    "usage: hsi-convert --cube FILE --labels FILE [--labels-test FILE]\n" +
      "                   [--cube-var NAME] [--labels-var NAME]\n" +
      "                   --preset {indian_pines,pavia_university,houston2013,custom}\n" +
      "                   --out DIR"
  );
  process.exit(2);
}

export function main(argv: string[]): number {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        cube: { type: "string" },
        labels: { type: "string" },
        "labels-test": { type: "string" },
        "cube-var": { type: "string" },
        "labels-var": { type: "string" },
        preset: { type: "string" },
        out: { type: "string" },
      },
    }));
  } catch {
    usage();
  }
  if (!values.cube || !values.labels || !values.preset || !values.out) {
    usage();
  }
  try {
    const result = convert({
      cubePath: values.cube,
      labelsPath: values.labels,
      labelsTestPath: values["labels-test"],
      cubeVar: values["cube-var"],
      labelsVar: values["labels-var"],
      preset: values.preset,
      outDir: values.out,
    });
    console.log(
      `wrote ${result.scenePath} (${result.height}x${result.width}x${result.bands}), ` +
        `${result.labelsPath}, ${result.manifestPath}`
    );
    console.log(`label histogram: [${result.histogram.join(", ")}]`);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
