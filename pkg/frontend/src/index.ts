/**
 * Bindings for the `lid` language-identification command line tool.
 *
 * Everything here shells out to the CLI and speaks its stream
 * protocols; no inference is reimplemented, so results are bit
 * identical to what the tool prints. A loaded model is an immutable
 * handle around a model file path: it holds no child process and no
 * mutable state beyond its closed flag, which makes it safe to share
 * across concurrent callers.
 */

import { spawnSync } from "node:child_process";
import { statSync } from "node:fs";

/** One ranked label with its probability. */
export interface Prediction {
  label: string;
  prob: number;
}

/** A verified run of three or more consecutive English words. */
export interface PhraseSpan {
  /** Index of the first word in the phrase. */
  start: number;
  /** Index one past the last word. */
  end: number;
  /** The phrase text, words joined by single spaces. */
  text: string;
  /** Whether the phrase survived verification. */
  verified: boolean;
}

/** Word-level English tagging of one line of text. */
export interface WordTagging {
  algorithm: string;
  words: string[];
  p_english: number[];
  labels: string[];
  phrases: PhraseSpan[];
}

/** Tagging algorithm: span averaging, context reconciliation, or the whole-word baseline. */
export type CodeswitchAlgorithm = "1" | "2" | "baseline";

export interface LoadOptions {
  /**
   * Command used to invoke the tool, first element plus leading
   * arguments. Defaults to ["lid"] resolved from PATH.
   */
  command?: string[];
}

/** Raised when the tool exits with an error. */
export class CliError extends Error {
  /** Error family reported by the tool: "usage", "data", or "training". */
  readonly kind: string;
  readonly exitCode: number;
  readonly stderr: string;

  constructor(kind: string, message: string, exitCode: number, stderr: string) {
    super(message);
    this.name = "CliError";
    this.kind = kind;
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}

const ERROR_LINE = /^error: ([a-z]+): (.*)$/m;
const MAX_BUFFER = 64 * 1024 * 1024;

function run(command: string[], args: string[], input: string): string {
  const [exe, ...lead] = command;
  if (!exe) {
    throw new RangeError("command must not be empty");
  }
  const result = spawnSync(exe, [...lead, ...args], {
    input,
    encoding: "utf8",
    maxBuffer: MAX_BUFFER,
  });
  if (result.error) {
    throw result.error;
  }
  if (result.status !== 0) {
    const stderr = result.stderr ?? "";
    const match = ERROR_LINE.exec(stderr);
    const kind = match?.[1] ?? "unknown";
    const message = match?.[2] ?? `exited with code ${result.status}`;
    throw new CliError(kind, message, result.status ?? -1, stderr);
  }
  return result.stdout;
}

function checkLine(text: string, what: string): void {
  if (text.length === 0 || text.trim().length === 0) {
    throw new RangeError(`${what} is empty`);
  }
  if (text.includes("\n") || text.includes("\r")) {
    throw new RangeError(`${what} must be a single line`);
  }
}

function parsePredictionLine(line: string, source: string): Prediction[] {
  if (line.length === 0) {
    throw new CliError("data", `no usable text signal in: ${source}`, 0, "");
  }
  const fields = line.split("\t");
  if (fields.length % 2 !== 0) {
    throw new Error(`malformed prediction line: ${JSON.stringify(line)}`);
  }
  const out: Prediction[] = [];
  for (let i = 0; i < fields.length; i += 2) {
    const label = fields[i];
    const probText = fields[i + 1];
    if (label === undefined || probText === undefined) {
      throw new Error(`malformed prediction line: ${JSON.stringify(line)}`);
    }
    const prob = Number(probText);
    if (!Number.isFinite(prob)) {
      throw new Error(`malformed probability ${JSON.stringify(probText)}`);
    }
    out.push({ label, prob });
  }
  return out;
}

/**
 * Handle to a model file usable for prediction and word tagging.
 *
 * Instances are frozen at construction. `close()` only invalidates
 * the handle; it releases no resources because none are held between
 * calls. Training is out of scope for the bindings; use the tool
 * directly for that.
 */
export class Model {
  readonly path: string;
  readonly #command: string[];
  #closed = false;

  /** @internal use {@link load_model} */
  constructor(path: string, command: string[]) {
    this.path = path;
    this.#command = [...command];
    Object.freeze(this);
  }

  get closed(): boolean {
    return this.#closed;
  }

  /** Invalidate the handle; every later call throws. */
  close(): void {
    this.#closed = true;
  }

  #ensureOpen(): void {
    if (this.#closed) {
      throw new Error("model is closed");
    }
  }

  /**
   * Classify one line of text, returning the top `topk` labels in
   * descending probability order. Throws RangeError on empty or
   * multi-line input and CliError when the text carries no usable
   * signal after cleaning.
   */
  predict(text: string, topk = 1): Prediction[] {
    const [result] = this.predict_many([text], topk);
    if (result === undefined || result === null) {
      throw new CliError("data", `no usable text signal in: ${text}`, 0, "");
    }
    return result;
  }

  /**
   * Classify many lines in one tool invocation. Output order matches
   * input order; an entry is null when that line carried no usable
   * signal. Every text must be a non-empty single line.
   */
  predict_many(texts: readonly string[], topk = 1): (Prediction[] | null)[] {
    this.#ensureOpen();
    if (!Number.isInteger(topk) || topk < 1) {
      throw new RangeError(`topk must be a positive integer, got ${topk}`);
    }
    texts.forEach((t, i) => checkLine(t, `text ${i}`));
    if (texts.length === 0) {
      return [];
    }
    const stdout = run(
      this.#command,
      ["--quiet", "predict", "--model", this.path, "--topk", String(topk)],
      texts.join("\n") + "\n",
    );
    const lines = stdout.split("\n");
    if (lines[lines.length - 1] === "") {
      lines.pop();
    }
    if (lines.length !== texts.length) {
      throw new Error(`expected ${texts.length} output lines, got ${lines.length}`);
    }
    return lines.map((line, i) =>
      line.length === 0 ? null : parsePredictionLine(line, texts[i] ?? ""),
    );
  }

  /**
   * Tag each word of one line with its probability of being English
   * and extract verified phrases. The model must be a two-label
   * classifier whose inventory includes English.
   */
  tag_codeswitch(text: string, algorithm: CodeswitchAlgorithm = "2"): WordTagging {
    this.#ensureOpen();
    checkLine(text, "text");
    const stdout = run(
      this.#command,
      ["--quiet", "codeswitch", "--model", this.path, "--algorithm", algorithm],
      text + "\n",
    );
    const line = stdout.split("\n", 1)[0] ?? "";
    if (line.length === 0) {
      throw new CliError("data", `no usable text signal in: ${text}`, 0, "");
    }
    return JSON.parse(line) as WordTagging;
  }
}

/**
 * Open a model file and return an immutable handle to it.
 *
 * The file is probed once through the tool so that a missing or
 * corrupt model fails here rather than on first use.
 */
export function load_model(path: string, options: LoadOptions = {}): Model {
  const command = options.command ?? ["lid"];
  statSync(path);
  run(command, ["--quiet", "predict", "--model", path], "");
  return new Model(path, command);
}
