/**
 * Typed client for the triage service. All requests go through an injectable
 * Http so tests can replay recorded traffic without a server.
 */

export interface ActionDoc {
  kind: string;
  followups: string[];
}

export interface NextDescriptor {
  assessment_id: string;
  state: string;
  step: number | null;
  required_factors: string[];
  questions: Record<string, string>;
  category: string | null;
  action: ActionDoc | null;
}

export interface AssessmentDoc {
  id: string;
  subject: { kind: string; id: string };
  state: string;
  category: string | null;
  action: ActionDoc | null;
  verdict: string | null;
  answers: unknown[];
  journal: { timestamp: string; actor: string; event: string }[];
}

export interface AssessmentResponse {
  assessment: AssessmentDoc;
  next: NextDescriptor;
}

export interface DeviationDoc {
  id: string;
  case_id: string;
  pattern: string;
  skipped: string[];
  inserted: string[];
  context_before: string | null;
  context_after: string | null;
  sequence_signature: string[];
}

export interface DeviationSetDoc {
  id: string;
  mode: { kind: string };
  fingerprint: string;
  members: string[];
  frequency: number;
  sample_cases: string[];
}

export interface ReportDoc {
  workspace_id: string;
  snapshot: Record<string, number>;
  category_counts: Record<string, number>;
  sets: {
    set_id: string;
    frequency: number;
    category: string | null;
    action: string | null;
    rationales: string[];
    chosen_reaction: string | null;
  }[];
}

export interface Http {
  request(method: string, path: string, body?: unknown): Promise<{ status: number; body: any }>;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly errorName: string,
    public readonly detail: string,
  ) {
    super(`${errorName}: ${detail}`);
  }
}

export class FetchHttp implements Http {
  constructor(private readonly baseUrl: string = "") {}

  async request(method: string, path: string, body?: unknown) {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    return { status: response.status, body: await response.json() };
  }
}

async function unwrap(promise: Promise<{ status: number; body: any }>) {
  const { status, body } = await promise;
  if (status >= 400) {
    throw new ApiError(status, body?.error ?? "Error", body?.detail ?? JSON.stringify(body));
  }
  return body;
}

export class TriageApi {
  constructor(private readonly http: Http) {}

  listDeviations(): Promise<{ deviations: DeviationDoc[] }> {
    return unwrap(this.http.request("GET", "/deviations"));
  }

  createSets(mode: string): Promise<{ sets: DeviationSetDoc[] }> {
    return unwrap(this.http.request("POST", "/sets", { mode }));
  }

  startAssessment(kind: "instance" | "set", id: string): Promise<AssessmentResponse> {
    return unwrap(this.http.request("POST", "/assessments", { subject: { kind, id } }));
  }

  getNext(assessmentId: string): Promise<NextDescriptor> {
    return unwrap(this.http.request("GET", `/assessments/${assessmentId}/next`));
  }

  submitStep(assessmentId: string, step: number, answer: unknown): Promise<AssessmentResponse> {
    return unwrap(this.http.request("POST", `/assessments/${assessmentId}/steps/${step}`, answer));
  }

  getReport(workspaceId: string): Promise<ReportDoc> {
    return unwrap(this.http.request("GET", `/reports/${workspaceId}`));
  }

  getDecisionTable(): Promise<{ paths: unknown[]; categories: string[] }> {
    return unwrap(this.http.request("GET", "/decision-table"));
  }
}
