// Scenario state machine: an ordered list of fixed facet choices plus the
// latest service responses. All numbers rendered downstream come verbatim
// from /profile and /shift; this module never computes probabilities.

import {
  ApiClient,
  ProfileResponse,
  SchemaResponse,
  ServiceError,
  ShiftEntry,
} from "./api";

export const DEFAULT_SHIFT_THRESHOLD = 0.05;
export const DEBOUNCE_MS = 250;

export interface FacetShift extends ShiftEntry {
  flagged: boolean;
}

export interface ScenarioComparison {
  left: ProfileResponse;
  right: ProfileResponse;
  badges: Record<string, ShiftEntry>;
}

function isSubset(
  small: Record<string, string>,
  big: Record<string, string>,
): boolean {
  return Object.entries(small).every(([k, v]) => big[k] === v);
}

function difference(
  big: Record<string, string>,
  small: Record<string, string>,
): Record<string, string> {
  return Object.fromEntries(
    Object.entries(big).filter(([k, v]) => small[k] !== v),
  );
}

export class ScenarioController {
  readonly fixed: Array<[string, string]> = [];
  current: ProfileResponse | null = null;
  previous: ProfileResponse | null = null;
  shifts: Record<string, FacetShift> = {};
  shiftThreshold: number;

  private seq = 0;
  private lastRenderedKnown: Record<string, string> | null = null;
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;
  private pendingRefresh = false;

  constructor(
    private readonly api: ApiClient,
    private readonly schema: SchemaResponse,
    private readonly options: {
      debounceMs?: number;
      shiftThreshold?: number;
      onRender?: () => void;
      onError?: (message: string) => void;
    } = {},
  ) {
    this.shiftThreshold = options.shiftThreshold ?? DEFAULT_SHIFT_THRESHOLD;
  }

  known(): Record<string, string> {
    return Object.fromEntries(this.fixed);
  }

  fixFacet(facet: string, value: string): void {
    const entry = this.schema.facets.find((f) => f.name === facet);
    if (!entry) {
      throw new Error(`unknown facet ${facet}`);
    }
    if (!entry.values.includes(value)) {
      throw new Error(`unknown value ${value} for facet ${facet}`);
    }
    const existing = this.fixed.findIndex(([name]) => name === facet);
    if (existing >= 0) {
      this.fixed[existing] = [facet, value];
    } else {
      this.fixed.push([facet, value]);
    }
    this.scheduleRefresh();
  }

  unfixFacet(facet: string): void {
    const index = this.fixed.findIndex(([name]) => name === facet);
    if (index < 0) {
      return;
    }
    this.fixed.splice(index, 1);
    this.scheduleRefresh();
  }

  setShiftThreshold(threshold: number): void {
    this.shiftThreshold = threshold;
    for (const entry of Object.values(this.shifts)) {
      entry.flagged = entry.js_divergence > threshold;
    }
    this.options.onRender?.();
  }

  private scheduleRefresh(): void {
    this.pendingRefresh = true;
    if (this.debounceTimer !== null) {
      clearTimeout(this.debounceTimer);
    }
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      void this.refresh();
    }, this.options.debounceMs ?? DEBOUNCE_MS);
  }

  /** Run any pending (debounced) refresh immediately. */
  async flush(): Promise<void> {
    if (this.debounceTimer !== null) {
      clearTimeout(this.debounceTimer);
      this.debounceTimer = null;
    }
    if (this.pendingRefresh || this.current === null) {
      await this.refresh();
    }
  }

  async refresh(): Promise<void> {
    this.pendingRefresh = false;
    const seq = ++this.seq;
    const known = this.known();
    const before = this.lastRenderedKnown;

    try {
      const profilePromise = this.api.profile(known);
      let shiftPromise: Promise<{
        shifts: Record<string, ShiftEntry>;
        swap: boolean;
      } | null>;
      if (before === null) {
        shiftPromise = Promise.resolve(null);
      } else if (isSubset(before, known)) {
        shiftPromise = this.api
          .shift(before, difference(known, before))
          .then((r) => ({ shifts: r.shifts, swap: false }));
      } else if (isSubset(known, before)) {
        // unfixing: the service only extends groups, so measure the same
        // divergence in reverse and swap the before/after labels
        shiftPromise = this.api
          .shift(known, difference(before, known))
          .then((r) => ({ shifts: r.shifts, swap: true }));
      } else {
        shiftPromise = Promise.resolve(null);
      }
      const [profile, shift] = await Promise.all([profilePromise, shiftPromise]);
      if (seq !== this.seq) {
        return; // a newer request superseded this one
      }
      this.previous = this.current;
      this.current = profile;
      this.lastRenderedKnown = known;
      this.shifts = {};
      if (shift !== null) {
        for (const [facet, entry] of Object.entries(shift.shifts)) {
          this.shifts[facet] = {
            js_divergence: entry.js_divergence,
            top_before: shift.swap ? entry.top_after : entry.top_before,
            top_after: shift.swap ? entry.top_before : entry.top_after,
            argmax_changed: entry.argmax_changed,
            flagged: entry.js_divergence > this.shiftThreshold,
          };
        }
      }
      this.options.onRender?.();
    } catch (err) {
      if (seq !== this.seq) {
        return;
      }
      const message =
        err instanceof ServiceError ? err.message : `request failed: ${err}`;
      this.options.onError?.(message);
    }
  }
}

/**
 * Side-by-side comparison of two known-facet sets. One scenario must extend
 * the other (/shift only measures added evidence); divergence badges are the
 * service's numbers verbatim.
 */
export async function compareScenarios(
  api: ApiClient,
  a: Record<string, string>,
  b: Record<string, string>,
): Promise<ScenarioComparison> {
  let base: Record<string, string>;
  let added: Record<string, string>;
  if (isSubset(a, b)) {
    base = a;
    added = difference(b, a);
  } else if (isSubset(b, a)) {
    base = b;
    added = difference(a, b);
  } else {
    throw new Error("scenarios must extend one another to be compared");
  }
  const [left, right, shift] = await Promise.all([
    api.profile(a),
    api.profile(b),
    api.shift(base, added),
  ]);
  if (left.model.checkpoint_hash !== right.model.checkpoint_hash) {
    throw new Error("scenarios come from different model versions");
  }
  return { left, right, badges: shift.shifts };
}
