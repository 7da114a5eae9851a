// API payload shapes, mirrored from the service's JSON responses.

export interface OverviewPayload {
  window_start: number;
  window_end: number;
  active_count: number;
  newcomer_count: number;
  departed_count: number;
  total_count: number;
  turnover_rate: number;
  avg_tenure_days: number | null;
  demographics?: Record<string, DistributionPayload>;
}

export type DistributionPayload = Record<string, { count: number; share: number }>;

export interface KMCurvePayload {
  group_label: string | null;
  times: number[];
  survival: number[];
  at_risk: number[];
}

export interface SurvivalPayload {
  group_by: string | null;
  curves: KMCurvePayload[];
  logrank?: { chi_square: number; p_value: number };
}

export interface ModelPayload {
  version: number;
  model_id: string;
  kind: string;
  feature_names: string[];
  parameters: unknown;
  c_index: number | null;
  train_fraction: number;
  converged: boolean;
  iterations: number;
  split_seed: number;
}

export interface RiskRow {
  contributor_id: string;
  score: number;
  rank: number;
}

export interface TagProfilePayload {
  tag: string;
  total_tagged_contributions: number;
  per_contributor: Record<string, number>;
  top_contributor: string;
}

export interface NewcomerRow {
  contributor_id: string;
  display_name: string;
  first_event: number;
  last_event: number;
}

export interface InactiveRow {
  contributor_id: string;
  display_name: string;
  gap_days: number;
  last_event: number;
}

export interface ContributorDetail {
  contributor_id: string;
  display_name: string;
  aliases: string[];
  first_event: number;
  last_event: number;
  status: string;
  tenure_days: number;
  affiliation: string;
  activity: { event_id: string; timestamp: number; kind: string; tags: string[] }[];
  attrition_impact: {
    contributor_id: string;
    affected_tags: { tag: string; share: number; is_top: boolean }[];
    severity: string;
  };
  emails?: string[];
  demographics?: { gender: string; region: string; confidence: number; source: string };
}

export interface ApiErrorBody {
  code: string;
  message: string;
}

export const DEMOGRAPHIC_LENSES = [
  "affiliation",
  "gender",
  "region",
  "newcomer_status",
] as const;

export type Lens = (typeof DEMOGRAPHIC_LENSES)[number];

export const MODEL_KINDS = ["cox", "rsf", "nncox"] as const;

export const FEATURE_NAMES = [
  "commits",
  "prs_opened",
  "pr_reviews",
  "issues_opened",
  "issue_comments",
  "total_events",
  "active_weeks",
  "mean_gap_days",
] as const;
