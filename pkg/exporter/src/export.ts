/** The two export jobs: prompt banks and frame banks. */

import { readFileSync, writeFileSync } from "node:fs";

import { BankEntry, encodeBank, frameKey } from "./emb1.js";
import { Encoder } from "./encoder.js";
import { loadFrameRequests, loadManifest, loadPromptSets } from "./inputs.js";
import { parsePgm } from "./pgm.js";

export interface ExportSummary {
  section: "prompts" | "frames";
  dim: number;
  count: number;
  outPath: string;
}

/**
 * Encode every prompt of the prompt-set file into a prompts bank.
 *
 * Entries are named by the exact prompt text and hold the raw encoder
 * outputs; normalization is deliberately left to the consumer so the
 * averaging math lives in one place.
 */
export async function exportPromptBank(
  promptsPath: string,
  outPath: string,
  encoder: Encoder,
): Promise<ExportSummary> {
  const sets = loadPromptSets(promptsPath);
  const texts: string[] = [];
  const owner = new Map<string, string>();
  for (const set of sets) {
    for (const prompt of set.prompts) {
      const prior = owner.get(prompt);
      if (prior !== undefined) {
        throw new Error(
          `prompt "${prompt}" appears in both "${prior}" and "${set.className}"; ` +
            `bank entry names must be unique`,
        );
      }
      owner.set(prompt, set.className);
      texts.push(prompt);
    }
  }
  const vectors = await encoder.encodeTexts(texts);
  const entries: BankEntry[] = texts.map((name, i) => ({ name, vector: vectors[i] }));
  const blob = encodeBank("prompts", encoder.dim, entries);
  writeFileSync(outPath, blob);
  return { section: "prompts", dim: encoder.dim, count: entries.length, outPath };
}

/**
 * Encode the requested frames of each listed video into a frames bank.
 *
 * Entries are named "<video_id>#<frame_index>"; an index requested twice
 * in one run produces a single entry.
 */
export async function exportFrameBank(
  requestsPath: string,
  outPath: string,
  encoder: Encoder,
): Promise<ExportSummary> {
  const requests = loadFrameRequests(requestsPath);
  const entries: BankEntry[] = [];
  for (const req of requests) {
    const manifest = loadManifest(req.manifestPath);
    const indices: number[] = [];
    const seen = new Set<number>();
    for (const idx of req.frames) {
      if (idx >= manifest.framePaths.length) {
        throw new Error(
          `video "${req.videoId}": frame ${idx} not in manifest ` +
            `(${manifest.framePaths.length} frames)`,
        );
      }
      if (!seen.has(idx)) {
        seen.add(idx);
        indices.push(idx);
      }
    }
    const images = indices.map((idx) => {
      try {
        return parsePgm(readFileSync(manifest.framePaths[idx]));
      } catch (err) {
        throw new Error(`video "${req.videoId}": frame ${idx}: ${(err as Error).message}`);
      }
    });
    const vectors = await encoder.encodeImages(images);
    indices.forEach((idx, i) => {
      entries.push({ name: frameKey(req.videoId, idx), vector: vectors[i] });
    });
  }
  const blob = encodeBank("frames", encoder.dim, entries);
  writeFileSync(outPath, blob);
  return { section: "frames", dim: encoder.dim, count: entries.length, outPath };
}
