/** Loading and validation of the exporter's JSON inputs. */

import { readFileSync } from "node:fs";
import { dirname, isAbsolute, resolve } from "node:path";

export const CLASS_ORDER = ["head-on", "rear-end", "sideswipe", "single", "t-bone"] as const;

export interface PromptSet {
  className: string;
  prompts: string[];
}

/** Prompt-set JSON: {"<class>": ["<prompt>", ...]} covering exactly the five classes. */
export function loadPromptSets(path: string): PromptSet[] {
  const raw = JSON.parse(readFileSync(path, "utf-8"));
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error(`prompt set ${path} must be a JSON object`);
  }
  const byClass = new Map<string, string[]>();
  for (const [key, prompts] of Object.entries(raw)) {
    const canon = key.trim().toLowerCase();
    if (!(CLASS_ORDER as readonly string[]).includes(canon)) {
      throw new Error(`prompt set ${path}: unknown class "${key}"`);
    }
    if (byClass.has(canon)) throw new Error(`prompt set ${path}: class "${canon}" repeated`);
    if (!Array.isArray(prompts) || prompts.length === 0) {
      throw new Error(`prompt set ${path}: class "${canon}" must map to a non-empty list`);
    }
    for (const p of prompts) {
      if (typeof p !== "string" || p.length === 0) {
        throw new Error(`prompt set ${path}: class "${canon}" contains an empty prompt`);
      }
    }
    byClass.set(canon, prompts as string[]);
  }
  const missing = CLASS_ORDER.filter((c) => !byClass.has(c));
  if (missing.length > 0) {
    throw new Error(`prompt set ${path} is missing classes: ${missing.join(", ")}`);
  }
  return CLASS_ORDER.map((c) => ({ className: c, prompts: byClass.get(c)! }));
}

export interface Manifest {
  id: string;
  fps: number;
  framePaths: string[]; // resolved
}

export function loadManifest(path: string): Manifest {
  const raw = JSON.parse(readFileSync(path, "utf-8"));
  for (const key of ["id", "fps", "frames"]) {
    if (!(key in raw)) throw new Error(`manifest ${path} is missing key "${key}"`);
  }
  if (!Array.isArray(raw.frames) || raw.frames.length === 0) {
    throw new Error(`manifest ${path} lists no frames`);
  }
  const base = dirname(path);
  return {
    id: String(raw.id),
    fps: Number(raw.fps),
    framePaths: raw.frames.map((f: string) => (isAbsolute(f) ? f : resolve(base, f))),
  };
}

export interface FrameRequest {
  videoId: string;
  manifestPath: string; // resolved
  frames: number[];
}

/** Request JSON: {"<video_id>": {"manifest": "<path>", "frames": [ints]}}. */
export function loadFrameRequests(path: string): FrameRequest[] {
  const raw = JSON.parse(readFileSync(path, "utf-8"));
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error(`request file ${path} must be a JSON object`);
  }
  const base = dirname(path);
  const requests: FrameRequest[] = [];
  for (const videoId of Object.keys(raw).sort()) {
    const entry = raw[videoId];
    if (typeof entry?.manifest !== "string" || !Array.isArray(entry?.frames)) {
      throw new Error(`request for "${videoId}" needs "manifest" and "frames"`);
    }
    const frames = entry.frames.map((i: unknown) => {
      if (!Number.isInteger(i) || (i as number) < 0) {
        throw new Error(`request for "${videoId}" has an invalid frame index: ${i}`);
      }
      return i as number;
    });
    requests.push({
      videoId,
      manifestPath: isAbsolute(entry.manifest) ? entry.manifest : resolve(base, entry.manifest),
      frames,
    });
  }
  return requests;
}
