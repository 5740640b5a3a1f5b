/**
 * The contract here is parity: anything the bindings return must be
 * numerically identical to what the command line tool prints for the
 * same input, because the bindings are a thin shell over it. The
 * fixtures are built once by the global setup.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { CliError, load_model, type Prediction, type WordTagging } from "../src/index";
import { ARTIFACTS } from "./global-setup";

const EMBED = join(ARTIFACTS, "embed", "model.bin");
const NB = join(ARTIFACTS, "nb", "model.bin");
const PAIR = join(ARTIFACTS, "pair", "model.bin");

const TOLERANCE = 1e-9;

/** Deterministic PRNG so every run exercises the same 100 inputs. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function randomLines(seed: number, count: number): string[] {
  const rng = mulberry32(seed);
  const lines: string[] = [];
  for (let i = 0; i < count; i++) {
    const words: string[] = [];
    const nWords = 3 + Math.floor(rng() * 8);
    for (let w = 0; w < nWords; w++) {
      let word = "";
      const len = 2 + Math.floor(rng() * 7);
      for (let c = 0; c < len; c++) {
        word += String.fromCharCode(97 + Math.floor(rng() * 26));
      }
      words.push(word);
    }
    lines.push(words.join(" "));
  }
  return lines;
}

function cli(args: string[], input: string): string {
  const result = spawnSync("lid", ["--quiet", ...args], {
    input,
    encoding: "utf8",
    maxBuffer: 64 * 1024 * 1024,
  });
  expect(result.error).toBeUndefined();
  expect(result.status, result.stderr).toBe(0);
  return result.stdout;
}

function cliPredict(model: string, lines: string[], topk: number): Prediction[][] {
  const stdout = cli(
    ["predict", "--model", model, "--topk", String(topk)],
    lines.join("\n") + "\n",
  );
  return stdout
    .split("\n")
    .slice(0, lines.length)
    .map((line) => {
      const fields = line.split("\t");
      const out: Prediction[] = [];
      for (let i = 0; i < fields.length; i += 2) {
        out.push({ label: fields[i]!, prob: Number(fields[i + 1]!) });
      }
      return out;
    });
}

describe("load_model", () => {
  it("rejects a missing file", () => {
    expect(() => load_model(join(ARTIFACTS, "missing.bin"))).toThrow(/ENOENT/);
  });

  it("rejects a corrupt file with a data error", () => {
    const path = join(mkdtempSync(join(tmpdir(), "lidjs-")), "junk.bin");
    writeFileSync(path, "not a model");
    try {
      load_model(path);
      expect.unreachable("corrupt file must not load");
    } catch (err) {
      expect(err).toBeInstanceOf(CliError);
      expect((err as CliError).kind).toBe("data");
    }
  });

  it("returns a frozen handle", () => {
    const model = load_model(EMBED);
    expect(Object.isFrozen(model)).toBe(true);
    expect(model.path).toBe(EMBED);
    expect(model.closed).toBe(false);
  });
});

describe("predict", () => {
  const lines = randomLines(41, 100);

  it("matches the command line to 1e-9 on 100 inputs (embedding model)", () => {
    const model = load_model(EMBED);
    const got = model.predict_many(lines, 2);
    const want = cliPredict(EMBED, lines, 2);
    expect(got).toHaveLength(want.length);
    got.forEach((preds, i) => {
      expect(preds).not.toBeNull();
      expect(preds!).toHaveLength(want[i]!.length);
      preds!.forEach((p, j) => {
        expect(p.label).toBe(want[i]![j]!.label);
        expect(Math.abs(p.prob - want[i]![j]!.prob)).toBeLessThanOrEqual(TOLERANCE);
      });
    });
  });

  it("matches the command line to 1e-9 on 100 inputs (naive Bayes model)", () => {
    const model = load_model(NB);
    const got = model.predict_many(lines, 1);
    const want = cliPredict(NB, lines, 1);
    got.forEach((preds, i) => {
      expect(preds![0]!.label).toBe(want[i]![0]!.label);
      expect(Math.abs(preds![0]!.prob - want[i]![0]!.prob)).toBeLessThanOrEqual(TOLERANCE);
    });
  });

  it("returns topk labels in descending probability order", () => {
    const model = load_model(EMBED);
    const preds = model.predict("the quick brown fox jumps", 3);
    expect(preds).toHaveLength(3);
    for (const p of preds) {
      expect(p.prob).toBeGreaterThanOrEqual(0);
      expect(p.prob).toBeLessThanOrEqual(1);
    }
    for (let i = 1; i < preds.length; i++) {
      expect(preds[i]!.prob).toBeLessThanOrEqual(preds[i - 1]!.prob);
    }
    const single = model.predict("the quick brown fox jumps");
    expect(single).toHaveLength(1);
    expect(single[0]).toEqual(preds[0]);
  });

  it("rejects empty and multi-line text", () => {
    const model = load_model(EMBED);
    expect(() => model.predict("")).toThrow(RangeError);
    expect(() => model.predict("   ")).toThrow(RangeError);
    expect(() => model.predict("two\nlines")).toThrow(RangeError);
    expect(() => model.predict_many(["fine", "also\nbad"])).toThrow(RangeError);
  });

  it("rejects a non-positive topk", () => {
    const model = load_model(EMBED);
    expect(() => model.predict("abc def", 0)).toThrow(RangeError);
    expect(() => model.predict("abc def", 1.5)).toThrow(RangeError);
  });

  it("surfaces no-signal input as null in batches and an error singly", () => {
    const model = load_model(EMBED);
    const batch = model.predict_many(["good text here", "1234 5678 !!"], 1);
    expect(batch[0]).not.toBeNull();
    expect(batch[1]).toBeNull();
    expect(() => model.predict("1234 5678 !!")).toThrow(CliError);
  });

  it("refuses every call after close", () => {
    const model = load_model(EMBED);
    model.close();
    expect(model.closed).toBe(true);
    expect(() => model.predict("abc def")).toThrow(/closed/);
    expect(() => model.tag_codeswitch("abc def")).toThrow(/closed/);
  });
});

describe("tag_codeswitch", () => {
  const lines = randomLines(77, 20);

  function cliTag(algorithm: string, input: string[]): WordTagging[] {
    const stdout = cli(
      ["codeswitch", "--model", PAIR, "--algorithm", algorithm],
      input.join("\n") + "\n",
    );
    return stdout
      .split("\n")
      .slice(0, input.length)
      .map((line) => JSON.parse(line) as WordTagging);
  }

  it.each([
    ["2", "alg2"],
    ["1", "alg1"],
    ["baseline", "baseline"],
  ] as const)("matches the command line JSON for algorithm %s", (flag, name) => {
    const model = load_model(PAIR);
    const want = cliTag(flag, lines);
    lines.forEach((line, i) => {
      const got = model.tag_codeswitch(line, flag);
      expect(got.algorithm).toBe(name);
      expect(got.words).toEqual(want[i]!.words);
      expect(got.labels).toEqual(want[i]!.labels);
      expect(got.p_english).toHaveLength(want[i]!.p_english.length);
      got.p_english.forEach((p, j) => {
        expect(Math.abs(p - want[i]!.p_english[j]!)).toBeLessThanOrEqual(TOLERANCE);
      });
      expect(got.phrases).toEqual(want[i]!.phrases);
    });
  });

  it("returns aligned word, probability, and label sequences", () => {
    const model = load_model(PAIR);
    const tag = model.tag_codeswitch("kotahi rua the big house toru");
    expect(tag.words.length).toBeGreaterThan(0);
    expect(tag.p_english).toHaveLength(tag.words.length);
    expect(tag.labels).toHaveLength(tag.words.length);
    for (const phrase of tag.phrases) {
      expect(phrase.end - phrase.start).toBeGreaterThanOrEqual(3);
      expect(typeof phrase.text).toBe("string");
      expect(typeof phrase.verified).toBe("boolean");
    }
  });

  it("rejects a model without a two-label English inventory", () => {
    const model = load_model(EMBED);
    try {
      model.tag_codeswitch("some words here");
      expect.unreachable("multiclass model must be rejected");
    } catch (err) {
      expect(err).toBeInstanceOf(CliError);
      expect((err as CliError).kind).toBe("data");
    }
  });
});
