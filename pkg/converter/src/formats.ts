/**
 * Parsers for the two citation-dataset research distribution layouts.
 *
 * cora / citeseer ship as `<name>.content` (one row per paper: id, 0/1 word
 * features, class label) plus `<name>.cites` (directed pairs, cited first).
 * pubmed ships as a pair of `.tab` files with a schema line declaring the
 * label attribute and the sparse `w-*=value` feature attributes.
 */

import * as fs from 'fs';
import * as path from 'path';

export class DataFormatError extends Error {}

export interface RawDataset {
  name: string;
  /** original paper ids in deterministic (code-unit sorted) order */
  nodeIds: string[];
  /** original id -> label string */
  labels: Map<string, string>;
  /** original id -> sparse [featureIndex, value] pairs */
  features: Map<string, Array<[number, number]>>;
  numFeatures: number;
  /** directed citation pairs over original ids, as distributed */
  citations: Array<[string, string]>;
}

function readLines(file: string): string[] {
  let text: string;
  try {
    text = fs.readFileSync(file, 'utf-8');
  } catch (err) {
    throw new DataFormatError(`cannot read ${file}: ${(err as Error).message}`);
  }
  return text.split('\n').map((l) => l.replace(/\r$/, '')).filter((l) => l.length > 0);
}

export function parseContentFormat(inputDir: string, name: string): RawDataset {
  const contentPath = path.join(inputDir, `${name}.content`);
  const citesPath = path.join(inputDir, `${name}.cites`);
  const labels = new Map<string, string>();
  const features = new Map<string, Array<[number, number]>>();
  let numFeatures = -1;

  for (const [i, line] of readLines(contentPath).entries()) {
    const cols = line.split('\t');
    if (cols.length < 3) {
      throw new DataFormatError(`${contentPath}:${i + 1}: expected id, features, label`);
    }
    const id = cols[0];
    const label = cols[cols.length - 1];
    const feats = cols.slice(1, -1);
    if (numFeatures === -1) {
      numFeatures = feats.length;
    } else if (feats.length !== numFeatures) {
      throw new DataFormatError(
        `${contentPath}:${i + 1}: ${feats.length} feature columns, expected ${numFeatures}`);
    }
    if (labels.has(id)) {
      throw new DataFormatError(`${contentPath}:${i + 1}: duplicate paper id ${id}`);
    }
    labels.set(id, label);
    const sparse: Array<[number, number]> = [];
    feats.forEach((raw, dim) => {
      const value = Number(raw);
      if (Number.isNaN(value)) {
        throw new DataFormatError(`${contentPath}:${i + 1}: non-numeric feature ${raw}`);
      }
      if (value !== 0) sparse.push([dim, value]);
    });
    features.set(id, sparse);
  }

  const citations: Array<[string, string]> = [];
  for (const [i, line] of readLines(citesPath).entries()) {
    const cols = line.split('\t');
    if (cols.length !== 2) {
      throw new DataFormatError(`${citesPath}:${i + 1}: expected 'cited<TAB>citing'`);
    }
    citations.push([cols[0], cols[1]]);
  }

  const nodeIds = [...labels.keys()].sort(codeUnitCompare);
  return { name, nodeIds, labels, features, numFeatures, citations };
}

export function parsePubmedFormat(inputDir: string): RawDataset {
  const nodePath = path.join(inputDir, 'Pubmed-Diabetes.NODE.paper.tab');
  const citesPath = path.join(inputDir, 'Pubmed-Diabetes.DIRECTED.cites.tab');

  const nodeLines = readLines(nodePath);
  if (nodeLines.length < 2) {
    throw new DataFormatError(`${nodePath}: missing header/schema lines`);
  }
  // schema line: cat=label:label then numeric:w-...:0.0 entries in feature order
  const featureIndex = new Map<string, number>();
  for (const field of nodeLines[1].split('\t')) {
    const m = field.match(/^numeric:([^:]+):/);
    if (m) featureIndex.set(m[1], featureIndex.size);
  }
  if (featureIndex.size === 0) {
    throw new DataFormatError(`${nodePath}: schema line declares no numeric attributes`);
  }

  const labels = new Map<string, string>();
  const features = new Map<string, Array<[number, number]>>();
  for (const [i, line] of nodeLines.slice(2).entries()) {
    const cols = line.split('\t');
    if (cols.length < 2) {
      throw new DataFormatError(`${nodePath}:${i + 3}: expected id and attributes`);
    }
    const id = cols[0];
    let label: string | null = null;
    const sparse: Array<[number, number]> = [];
    for (const attr of cols.slice(1)) {
      const eq = attr.indexOf('=');
      if (eq < 0) continue;
      const key = attr.slice(0, eq);
      const raw = attr.slice(eq + 1);
      if (key === 'label') {
        label = raw;
      } else if (key === 'summary') {
        continue;
      } else {
        const dim = featureIndex.get(key);
        if (dim === undefined) {
          throw new DataFormatError(`${nodePath}:${i + 3}: undeclared attribute ${key}`);
        }
        const value = Number(raw);
        if (Number.isNaN(value)) {
          throw new DataFormatError(`${nodePath}:${i + 3}: non-numeric value ${raw}`);
        }
        if (value !== 0) sparse.push([dim, value]);
      }
    }
    if (label === null) {
      throw new DataFormatError(`${nodePath}:${i + 3}: row without a label attribute`);
    }
    labels.set(id, label);
    features.set(id, sparse.sort((a, b) => a[0] - b[0]));
  }

  const citations: Array<[string, string]> = [];
  for (const [i, line] of readLines(citesPath).slice(2).entries()) {
    const m = line.match(/paper:(\S+)\t\|\tpaper:(\S+)/);
    if (!m) {
      throw new DataFormatError(`${citesPath}:${i + 3}: expected 'paper:a<TAB>|<TAB>paper:b'`);
    }
    citations.push([m[1], m[2]]);
  }

  const nodeIds = [...labels.keys()].sort(codeUnitCompare);
  return { name: 'pubmed', nodeIds, labels, features, numFeatures: featureIndex.size, citations };
}

export function codeUnitCompare(a: string, b: string): number {
  return a < b ? -1 : a > b ? 1 : 0;
}
