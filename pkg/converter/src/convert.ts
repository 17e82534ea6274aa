/**
 * Raw dataset -> portable graph bundle directory.
 *
 * Symmetrizes the directed citations, drops self-citations and duplicate
 * pairs, remaps paper ids to dense integers (code-unit sorted order), and
 * writes canonical tab-separated files so converting twice is
 * byte-identical. Isolated papers are kept so node counts match the
 * published statistics.
 */

import * as fs from 'fs';
import * as path from 'path';

import { DataFormatError, RawDataset, codeUnitCompare, parseContentFormat, parsePubmedFormat } from './formats';

export const DATASETS = ['cora', 'citeseer', 'pubmed'] as const;
export type DatasetName = (typeof DATASETS)[number];

/** published statistics; mismatches warn but do not fail the conversion */
const EXPECTED: Record<DatasetName, { nodes: number; features: number; classes: number }> = {
  cora: { nodes: 2708, features: 1433, classes: 7 },
  citeseer: { nodes: 3327, features: 3703, classes: 6 },
  pubmed: { nodes: 19717, features: 500, classes: 3 },
};

export interface ConvertSummary {
  name: string;
  num_nodes: number;
  num_edges: number;
  num_classes: number;
  num_features: number;
  dangling_citations: number;
  self_citations: number;
  duplicate_pairs: number;
  warnings: string[];
}

export function loadRaw(inputDir: string, dataset: DatasetName): RawDataset {
  if (dataset === 'pubmed') return parsePubmedFormat(inputDir);
  return parseContentFormat(inputDir, dataset);
}

export function convert(inputDir: string, dataset: DatasetName, outputDir: string): ConvertSummary {
  const raw = loadRaw(inputDir, dataset);
  const denseId = new Map<string, number>();
  raw.nodeIds.forEach((id, i) => denseId.set(id, i));

  let dangling = 0;
  let selfCites = 0;
  let duplicates = 0;
  const edgeKeys = new Set<number>();
  const edges: Array<[number, number]> = [];
  const n = raw.nodeIds.length;
  for (const [a, b] of raw.citations) {
    const u = denseId.get(a);
    const v = denseId.get(b);
    if (u === undefined || v === undefined) {
      dangling += 1;
      continue;
    }
    if (u === v) {
      selfCites += 1;
      continue;
    }
    const lo = Math.min(u, v);
    const hi = Math.max(u, v);
    const key = lo * n + hi;
    if (edgeKeys.has(key)) {
      duplicates += 1;
      continue;
    }
    edgeKeys.add(key);
    edges.push([lo, hi]);
  }
  edges.sort((x, y) => x[0] - y[0] || x[1] - y[1]);

  const classNames = [...new Set(raw.labels.values())].sort(codeUnitCompare);
  const classIndex = new Map(classNames.map((c, i) => [c, i]));

  const warnings: string[] = [];
  const expected = EXPECTED[dataset];
  if (n !== expected.nodes) {
    warnings.push(`node count ${n} differs from published ${expected.nodes}`);
  }
  if (raw.numFeatures !== expected.features) {
    warnings.push(`feature count ${raw.numFeatures} differs from published ${expected.features}`);
  }
  if (classNames.length !== expected.classes) {
    warnings.push(`class count ${classNames.length} differs from published ${expected.classes}`);
  }
  for (const w of warnings) {
    console.error(`warning: ${dataset}: ${w}`);
  }

  fs.mkdirSync(outputDir, { recursive: true });
  const meta = {
    num_nodes: n,
    num_classes: classNames.length,
    num_features: raw.numFeatures,
    name: dataset,
    node_names: raw.nodeIds,
    class_names: classNames,
  };
  writeFile(outputDir, 'meta.json', JSON.stringify(meta, null, 2) + '\n');
  writeFile(outputDir, 'edges.tsv', edges.map(([u, v]) => `${u}\t${v}\n`).join(''));

  const labelLines: string[] = [];
  raw.nodeIds.forEach((id, u) => {
    const label = raw.labels.get(id);
    if (label !== undefined) labelLines.push(`${u}\t${classIndex.get(label)}\n`);
  });
  writeFile(outputDir, 'labels.tsv', labelLines.join(''));

  const featLines: string[] = [];
  raw.nodeIds.forEach((id, u) => {
    for (const [dim, value] of raw.features.get(id) ?? []) {
      featLines.push(`${u}\t${dim}\t${String(value)}\n`);
    }
  });
  writeFile(outputDir, 'features.tsv', featLines.join(''));

  return {
    name: dataset,
    num_nodes: n,
    num_edges: edges.length,
    num_classes: classNames.length,
    num_features: raw.numFeatures,
    dangling_citations: dangling,
    self_citations: selfCites,
    duplicate_pairs: duplicates,
    warnings,
  };
}

function writeFile(dir: string, name: string, content: string): void {
  fs.writeFileSync(path.join(dir, name), content, 'utf-8');
}

export { DataFormatError };
