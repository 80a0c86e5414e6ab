import { describe, expect, it } from "vitest";

import { NextDescriptor } from "../src/api.js";
import {
  renderDeviationPanel,
  renderInlineError,
  renderReport,
  renderSetBrowser,
  renderStepScreen,
} from "../src/render.js";
import { loadWalkthrough } from "./replay.js";

const walkthrough = loadWalkthrough();

function descriptorForStep(step: number): NextDescriptor {
  for (const exchange of walkthrough) {
    const next = (exchange.response as any)?.next as NextDescriptor | undefined;
    if (next?.step === step) return next;
  }
  throw new Error(`no descriptor for step ${step}`);
}

describe("step screens", () => {
  it("step 4 renders a 4x2 rating grid", () => {
    const html = renderStepScreen(descriptorForStep(4));
    const selects = html.match(/<select class="rating"/g) ?? [];
    expect(selects).toHaveLength(8);
    for (const factor of ["compliance", "outcome", "performance", "standardization"]) {
      expect(html).toContain(`data-factor="${factor}" data-perspective="direct"`);
      expect(html).toContain(`data-factor="${factor}" data-perspective="risk-opportunity"`);
    }
  });

  it("step 5 renders effectiveness and cost inputs", () => {
    const html = renderStepScreen(descriptorForStep(5));
    expect(html).toContain('name="effectiveness"');
    expect(html).toContain('name="cost"');
    expect(html).toContain('name="chosen-reaction"');
  });

  it("knockout options are marked so rationale can be required", () => {
    const step1 = renderStepScreen(descriptorForStep(1));
    expect(step1).toContain('data-knockout="true"');
    expect(step1).toContain('name="rationale"');
    const step3 = renderStepScreen(descriptorForStep(3));
    expect(step3).toContain('value="out-of-control-external" data-knockout="true"');
  });

  it("question text comes from the API prompts", () => {
    const descriptor = descriptorForStep(1);
    const html = renderStepScreen(descriptor);
    expect(html).toContain(descriptor.questions["data-quality"].slice(0, 40));
  });
});

describe("browser, panel, report, errors", () => {
  it("set browser lists frequencies and the active mode", () => {
    const sets = (walkthrough.find((e) => e.path === "/sets")!.response as any).sets;
    const html = renderSetBrowser(sets, "same-seq");
    expect(html).toContain(`data-set-id="${sets[0].id}"`);
    expect(html).toContain(`<td class="frequency">${sets[0].frequency}</td>`);
    expect(html).toContain('data-mode="similar"');
    expect(html).toContain('class="mode active" data-mode="same-seq"');
  });

  it("deviation panel shows the trace and the pattern", () => {
    const deviations = (walkthrough.find((e) => e.path === "/deviations")!.response as any)
      .deviations;
    const html = renderDeviationPanel(deviations[0]);
    expect(html).toContain('class="pattern">skip');
    expect(html).toContain("Receive Order → Send Invoice → Clear Invoice");
  });

  it("report view shows category counts from the API", () => {
    const report = walkthrough.find((e) => e.path === "/reports/workspace")!.response as any;
    const html = renderReport(report);
    expect(html).toContain("negative-deviation: 1");
  });

  it("inline errors render and escape content", () => {
    expect(renderInlineError("WrongStep: <x>")).toContain("WrongStep: &lt;x&gt;");
    expect(renderInlineError(null)).toBe("");
  });
});
