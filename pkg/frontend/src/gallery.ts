/** Alternative-plan gallery: one card per plan, highest score first. */

import { Plan, Summary } from "./types.js";

export interface GalleryCard {
  index: number;
  title: string;
  score: number;
  selected: boolean;
  conflict: boolean;
}

export function galleryCards(summary: Summary): GalleryCard[] {
  const conflict = summary.evaluation?.data_accuracy.conflict_detected ?? false;
  return summary.plans
    .slice()
    .sort((a: Plan, b: Plan) => b.scores.total - a.scores.total || a.index - b.index)
    .map((plan) => ({
      index: plan.index,
      title: `${plan.chartId} × ${plan.elementId}`,
      score: plan.scores.total,
      selected: plan.selected,
      conflict: plan.selected && conflict,
    }));
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderGallery(summary: Summary): string {
  const cards = galleryCards(summary).map((card) => {
    const classes = card.selected ? "card selected" : "card";
    const badge = card.conflict ? '<span class="badge">conflict</span>' : "";
    return (
      `<div class="${classes}" data-plan-index="${card.index}">` +
      `<span class="title">${escapeHtml(card.title)}</span>` +
      `<span class="score">score ${card.score.toFixed(3)}</span>${badge}</div>`
    );
  });
  return `<div class="gallery">${cards.join("")}</div>`;
}
