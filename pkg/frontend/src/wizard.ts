/**
 * Client-side mirror of one assessment's progress.
 *
 * The wizard holds only what the API handed it: the current step descriptor
 * (which factors to ask about, with their question texts) and, once reached,
 * the conclusion. It never anticipates later steps and never categorizes —
 * category and action always come from the server response.
 */

import { ApiError, AssessmentResponse, NextDescriptor, TriageApi } from "./api.js";

export type WizardPhase = "idle" | "asking" | "done";

export interface Conclusion {
  state: string;
  category: string | null;
  actionKind: string | null;
  followups: string[];
}

const TERMINAL_STATES = new Set(["concluded", "true-deviation-pending"]);

export class Wizard {
  phase: WizardPhase = "idle";
  descriptor: NextDescriptor | null = null;
  conclusion: Conclusion | null = null;
  error: string | null = null;
  enteredAnswers: { step: number; answer: unknown }[] = [];

  constructor(private readonly api: TriageApi) {}

  get assessmentId(): string | null {
    return this.descriptor?.assessment_id ?? null;
  }

  async begin(kind: "instance" | "set", subjectId: string): Promise<void> {
    const response = await this.api.startAssessment(kind, subjectId);
    this.enteredAnswers = [];
    this.error = null;
    this.apply(response.next);
  }

  /** Submit the answer for the step the API says is current. */
  async submitCurrentStep(answer: unknown): Promise<void> {
    if (this.descriptor?.step == null) {
      this.error = "no step awaiting input";
      return;
    }
    await this.submitStep(this.descriptor.step, answer);
  }

  async submitStep(step: number, answer: unknown): Promise<void> {
    if (!this.assessmentId) {
      this.error = "no running assessment";
      return;
    }
    try {
      const response: AssessmentResponse = await this.api.submitStep(
        this.assessmentId,
        step,
        answer,
      );
      this.enteredAnswers.push({ step, answer });
      this.error = null;
      this.apply(response.next);
    } catch (err) {
      // API rejections (wrong step, missing rationale, bad ratings) surface
      // inline; the wizard state stays where it was.
      if (err instanceof ApiError) {
        this.error = `${err.errorName}: ${err.detail}`;
        return;
      }
      throw err;
    }
  }

  private apply(next: NextDescriptor): void {
    this.descriptor = next;
    if (TERMINAL_STATES.has(next.state)) {
      this.phase = "done";
      this.conclusion = {
        state: next.state,
        category: next.category,
        actionKind: next.action?.kind ?? null,
        followups: next.action?.followups ?? [],
      };
    } else {
      this.phase = "asking";
      this.conclusion = null;
    }
  }
}
