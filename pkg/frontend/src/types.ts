/** Wire schemas for the orchestrator HTTP API. */

import { z } from "zod";

export const BBoxSchema = z.object({
  xmin: z.number(),
  ymin: z.number(),
  xmax: z.number(),
  ymax: z.number(),
});
export type BBox = z.infer<typeof BBoxSchema>;

export const PlanSchema = z.object({
  index: z.number().int(),
  chartId: z.string(),
  elementId: z.string(),
  overview: z.string(),
  scores: z.object({
    spatial: z.number(),
    shape: z.number(),
    layout: z.number(),
    semantic: z.number(),
    total: z.number(),
  }),
  selected: z.boolean(),
});
export type Plan = z.infer<typeof PlanSchema>;

export const ToolCallSchema = z.object({
  name: z.string(),
  args: z.array(z.unknown()),
});
export type ToolCall = z.infer<typeof ToolCallSchema>;

export const EvaluationSchema = z.object({
  data_accuracy: z.object({
    score: z.number().int(),
    explanation: z.string(),
    conflict_detected: z.boolean(),
  }).loose(),
  readability: z.object({
    score: z.number().int(),
    explanation: z.string(),
  }),
});
export type Evaluation = z.infer<typeof EvaluationSchema>;

export const SummarySchema = z.object({
  projectId: z.string(),
  outcome: z.string(),
  selection: z.number().int().nullable(),
  completedStages: z.array(z.string()),
  errors: z.record(z.string(), z.string()),
  plans: z.array(PlanSchema),
  toolCalls: z.array(ToolCallSchema),
  telemetryTotals: z.object({
    elapsed_seconds: z.number(),
    input_tokens: z.number(),
    output_tokens: z.number(),
  }),
  evaluation: EvaluationSchema.optional(),
  markBounds: z.record(z.string(), BBoxSchema).optional(),
});
export type Summary = z.infer<typeof SummarySchema>;
