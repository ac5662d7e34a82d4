// HTML string rendering. Display-only: values are ordered by descending
// probability with the residual "other" row last; every number is printed
// exactly as the service sent it (rounded for the bar width only).

import { FacetDistribution, ProfileResponse, ShiftEntry } from "./api";
import { FacetShift, ScenarioComparison } from "./state";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function bar(label: string, probability: number, muted = false): string {
  const pct = Math.round(probability * 100);
  return `
    <div class="row${muted ? " row-other" : ""}">
      <span class="label">${escapeHtml(label)}</span>
      <span class="track"><span class="fill" style="width:${pct}%"></span></span>
      <span class="prob">${probability}</span>
    </div>`;
}

export function renderDistribution(dist: FacetDistribution): string {
  const ordered = [...dist.values].sort(
    (a, b) => b.probability - a.probability,
  );
  const rows = ordered.map((v) => bar(v.value, v.probability));
  rows.push(bar("other", dist.other, true));
  return rows.join("");
}

export function shiftBadge(shift: FacetShift | undefined): string {
  if (!shift || !shift.flagged) {
    return "";
  }
  const flip = shift.argmax_changed
    ? ` <span class="flip">${escapeHtml(shift.top_before)} → ${escapeHtml(shift.top_after)}</span>`
    : "";
  return `<span class="badge shifted" title="JS divergence">${shift.js_divergence}${flip}</span>`;
}

export function renderFacetCard(
  name: string,
  dist: FacetDistribution,
  shift?: FacetShift,
): string {
  return `
  <section class="facet${shift?.flagged ? " facet-shifted" : ""}" data-facet="${escapeHtml(name)}">
    <header>${escapeHtml(name)}${shiftBadge(shift)}</header>
    ${renderDistribution(dist)}
  </section>`;
}

export function renderProfile(
  profile: ProfileResponse,
  shifts: Record<string, FacetShift>,
): string {
  const fixed = Object.entries(profile.fixed)
    .map(
      ([facet, value]) =>
        `<span class="chip" data-facet="${escapeHtml(facet)}">${escapeHtml(facet)}=${escapeHtml(value)}</span>`,
    )
    .join("");
  const cards = Object.keys(profile.expectations)
    .sort()
    .map((name) =>
      renderFacetCard(name, profile.expectations[name], shifts[name]),
    )
    .join("");
  return `<div class="fixed">${fixed}</div><div class="facets">${cards}</div>`;
}

export function renderComparison(cmp: ScenarioComparison): string {
  const names = new Set([
    ...Object.keys(cmp.left.expectations),
    ...Object.keys(cmp.right.expectations),
  ]);
  const rows = [...names]
    .sort()
    .map((name) => {
      const badge: ShiftEntry | undefined = cmp.badges[name];
      const badgeHtml =
        badge === undefined
          ? ""
          : `<span class="badge">${badge.js_divergence}</span>`;
      const left = cmp.left.expectations[name];
      const right = cmp.right.expectations[name];
      return `
      <div class="compare-row" data-facet="${escapeHtml(name)}">
        <header>${escapeHtml(name)}${badgeHtml}</header>
        <div class="pane">${left ? renderDistribution(left) : "<em>fixed</em>"}</div>
        <div class="pane">${right ? renderDistribution(right) : "<em>fixed</em>"}</div>
      </div>`;
    })
    .join("");
  return `<div class="compare">${rows}</div>`;
}

export function renderErrorBanner(message: string): string {
  return `<div class="banner error">${escapeHtml(message)}</div>`;
}
