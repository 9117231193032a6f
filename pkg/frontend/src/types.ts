export type Tab = 'pending' | 'kept' | 'rejected';
export type Decision = 'keep' | 'reject';

export interface Suggestion {
  verdict: Decision;
  fired_rules: string[];
  reason: string;
}

export interface SampleFact {
  subject: string;
  property: string;
  object: string;
}

export interface PropertyCard {
  property_id: string;
  label: string;
  triplet_count: number;
  suggestion: Suggestion;
  samples: SampleFact[];
  preview_questions: string[];
  effective_verdict: Decision | null;
  status: Tab;
}

export interface PageResponse {
  status: Tab;
  page: number;
  page_count: number;
  page_size: number;
  total: number;
  items: PropertyCard[];
}

export interface Stats {
  pending: number;
  kept: number;
  rejected: number;
  total: number;
  triplets: { pending: number; kept: number; rejected: number };
}
