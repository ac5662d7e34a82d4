import { describe, expect, it } from "vitest";

import { FacetDistribution, ProfileResponse } from "../src/api";
import { renderComparison, renderDistribution, renderProfile } from "../src/render";
import { canon, fixtures } from "./replay";

const flipProfile = fixtures.profiles[
  canon({ [fixtures.scenario.flip_facet]: fixtures.scenario.flip_value })
] as ProfileResponse;

describe("distribution rendering", () => {
  it("orders values by descending probability with other last", () => {
    const dist: FacetDistribution = {
      values: [
        { value: "low", probability: 0.1 },
        { value: "high", probability: 0.6 },
        { value: "mid", probability: 0.25 },
      ],
      other: 0.05,
    };
    const html = renderDistribution(dist);
    const order = [...html.matchAll(/<span class="label">([^<]+)<\/span>/g)].map(
      (m) => m[1],
    );
    expect(order).toEqual(["high", "mid", "low", "other"]);
  });

  it("prints service probabilities verbatim, no rounding of the numbers", () => {
    const target = fixtures.scenario.flipped_target;
    const html = renderDistribution(flipProfile.expectations[target]);
    for (const entry of flipProfile.expectations[target].values) {
      expect(html).toContain(`>${entry.probability}<`);
    }
    expect(html).toContain(`>${flipProfile.expectations[target].other}<`);
  });

  it("escapes markup in value labels", () => {
    const html = renderDistribution({
      values: [{ value: "<b>bold</b>", probability: 1 }],
      other: 0,
    });
    expect(html).not.toContain("<b>bold</b>");
    expect(html).toContain("&lt;b&gt;");
  });
});

describe("profile rendering", () => {
  it("marks flagged facets and shows before/after top values", () => {
    const shift = (
      fixtures.shifts[
        `${canon({})}|${canon({
          [fixtures.scenario.flip_facet]: fixtures.scenario.flip_value,
        })}`
      ] as {
        shifts: Record<
          string,
          {
            js_divergence: number;
            top_before: string;
            top_after: string;
            argmax_changed: boolean;
          }
        >;
      }
    ).shifts[fixtures.scenario.flipped_target];
    const html = renderProfile(flipProfile, {
      [fixtures.scenario.flipped_target]: { ...shift, flagged: true },
    });
    expect(html).toContain("facet-shifted");
    expect(html).toContain(`${shift.top_before} → ${shift.top_after}`);
    expect(html).toContain(`${shift.js_divergence}`);
    expect(html).toMatchSnapshot();
  });

  it("renders fixed choices as removable chips", () => {
    const html = renderProfile(flipProfile, {});
    expect(html).toContain(
      `${fixtures.scenario.flip_facet}=${fixtures.scenario.flip_value}`,
    );
  });
});

describe("comparison rendering", () => {
  it("shows one badge per shifted facet, verbatim", () => {
    const key = `${canon({})}|${canon({
      [fixtures.scenario.flip_facet]: fixtures.scenario.flip_value,
    })}`;
    const shift = fixtures.shifts[key] as {
      shifts: Record<string, { js_divergence: number }>;
    };
    const html = renderComparison({
      left: fixtures.profiles[canon({})] as ProfileResponse,
      right: flipProfile,
      badges: shift.shifts as never,
    });
    for (const entry of Object.values(shift.shifts)) {
      expect(html).toContain(`${entry.js_divergence}`);
    }
  });
});
