import { describe, expect, it } from "vitest";

import { galleryCards, renderGallery } from "../src/gallery.js";
import { baseSummary } from "./mockServer.js";

describe("gallery", () => {
  it("renders one card per plan in score order", () => {
    const summary = baseSummary();
    const cards = galleryCards(summary);
    expect(cards).toHaveLength(summary.plans.length);
    const scores = cards.map((c) => c.score);
    expect(scores).toEqual([...scores].sort((a, b) => b - a));
    expect(cards[0]!.title).toBe("area-0 × group-0");

    const html = renderGallery(summary);
    expect(html.match(/class="card/g)).toHaveLength(summary.plans.length);
    expect(html.indexOf("area-0")).toBeLessThan(html.indexOf("bar-0"));
    expect(html.indexOf("bar-0")).toBeLessThan(html.indexOf("line-0"));
  });

  it("badges only the selected plan when a conflict is flagged", () => {
    const summary = baseSummary();
    const cards = galleryCards(summary);
    expect(cards.filter((c) => c.conflict)).toHaveLength(1);
    expect(cards.find((c) => c.conflict)!.index).toBe(0);

    summary.evaluation!.data_accuracy.conflict_detected = false;
    expect(galleryCards(summary).some((c) => c.conflict)).toBe(false);
  });

  it("escapes markup in plan titles", () => {
    const summary = baseSummary();
    summary.plans[0]!.chartId = '<img src="x">';
    expect(renderGallery(summary)).not.toContain("<img");
  });
});
