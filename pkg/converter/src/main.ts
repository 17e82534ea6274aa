#!/usr/bin/env node
/**
 * convert <input_dir> <cora|citeseer|pubmed> <output_dir>
 *
 * Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
 */

import { DATASETS, DataFormatError, DatasetName, convert } from './convert';

export function run(argv: string[]): number {
  if (argv.length !== 3) {
    console.error('usage: convert <input_dir> <cora|citeseer|pubmed> <output_dir>');
    return 1;
  }
  const [inputDir, dataset, outputDir] = argv;
  if (!(DATASETS as readonly string[]).includes(dataset)) {
    console.error(`unknown dataset '${dataset}' (expected ${DATASETS.join(', ')})`);
    return 1;
  }
  try {
    const summary = convert(inputDir, dataset as DatasetName, outputDir);
    console.log(JSON.stringify(summary, null, 2));
    return 0;
  } catch (err) {
    if (err instanceof DataFormatError) {
      console.error(`data error: ${err.message}`);
      return 2;
    }
    console.error(`failure: ${(err as Error).message}`);
    return 3;
  }
}

if (require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
