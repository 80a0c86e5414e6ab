/**
 * Pure renderers: state in, HTML string out. Keeping them DOM-free makes the
 * snapshot tests trivial and guarantees the screens show exactly what the
 * API declared — no more, no less.
 */

import { DeviationDoc, DeviationSetDoc, NextDescriptor, ReportDoc } from "./api.js";
import { Conclusion } from "./wizard.js";

export const PERSPECTIVES = ["direct", "risk-opportunity"] as const;
export const RATING_VALUES = [-2, -1, 0, 1, 2] as const;

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderSetBrowser(sets: DeviationSetDoc[], activeMode: string): string {
  const switcher = ["same-seq", "same-any", "similar"]
    .map(
      (mode) =>
        `<button class="mode${mode === activeMode ? " active" : ""}" data-mode="${mode}">${mode}</button>`,
    )
    .join("");
  const rows = sets
    .map(
      (s) => `
    <tr data-set-id="${esc(s.id)}">
      <td><a href="#" class="open-set" data-set-id="${esc(s.id)}">${esc(s.id)}</a></td>
      <td class="frequency">${s.frequency}</td>
      <td>${s.sample_cases.map(esc).join(", ")}</td>
    </tr>`,
    )
    .join("");
  return `
  <section class="set-browser">
    <h2>Deviation sets</h2>
    <div class="mode-switcher">${switcher}</div>
    <table>
      <thead><tr><th>set</th><th>frequency</th><th>sample cases</th></tr></thead>
      <tbody>${rows || '<tr><td colspan="3">no sets yet</td></tr>'}</tbody>
    </table>
  </section>`;
}

export function renderDeviationPanel(deviation: DeviationDoc): string {
  const arrow = (items: string[]) => items.map(esc).join(" → ");
  return `
  <section class="deviation-panel">
    <h3>Deviation ${esc(deviation.id)}</h3>
    <dl>
      <dt>pattern</dt><dd class="pattern">${esc(deviation.pattern)}</dd>
      <dt>skipped</dt><dd>${arrow(deviation.skipped) || "—"}</dd>
      <dt>inserted</dt><dd>${arrow(deviation.inserted) || "—"}</dd>
      <dt>trace</dt><dd class="trace">${arrow(deviation.sequence_signature)}</dd>
      <dt>case</dt><dd>${esc(deviation.case_id)}</dd>
    </dl>
  </section>`;
}

function yesNoField(factor: string, question: string, knockoutOnYes: boolean): string {
  return `
    <fieldset class="factor" data-factor="${esc(factor)}">
      <legend>${esc(question)}</legend>
      <label><input type="radio" name="${esc(factor)}" value="yes"${
        knockoutOnYes ? ' data-knockout="true"' : ""
      }/> yes</label>
      <label><input type="radio" name="${esc(factor)}" value="no"/> no</label>
    </fieldset>`;
}

function ratingGrid(factors: string[], questions: Record<string, string>): string {
  const header = PERSPECTIVES.map((p) => `<th>${p}</th>`).join("");
  const rows = factors
    .map((factor) => {
      const cells = PERSPECTIVES.map(
        (perspective) => `
        <td>
          <select class="rating" data-factor="${esc(factor)}" data-perspective="${perspective}">
            ${RATING_VALUES.map((v) => `<option value="${v}"${v === 0 ? " selected" : ""}>${v > 0 ? "+" + v : v}</option>`).join("")}
          </select>
          <input type="text" class="rating-note" data-factor="${esc(factor)}" data-perspective="${perspective}" placeholder="note"/>
        </td>`,
      ).join("");
      return `<tr data-factor="${esc(factor)}"><th title="${esc(questions[factor] ?? "")}">${esc(factor)}</th>${cells}</tr>`;
    })
    .join("");
  return `
    <table class="rating-grid">
      <thead><tr><th>factor</th>${header}</tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

/**
 * The step screen shows inputs for exactly the factors the API requires for
 * the current step; questions for any other factor are never rendered.
 */
export function renderStepScreen(descriptor: NextDescriptor): string {
  if (descriptor.step == null) {
    return "";
  }
  const factors = descriptor.required_factors;
  const questions = descriptor.questions;
  let body = "";
  if (descriptor.step === 1) {
    body =
      yesNoField("data-quality", questions["data-quality"] ?? "", true) +
      `<label class="evidence">evidence (flag ids, comma separated)
         <input type="text" name="evidence"/></label>`;
  } else if (descriptor.step === 2) {
    body = factors.map((f) => yesNoField(f, questions[f] ?? "", false)).join("") +
      `<fieldset class="factor" data-factor="solely">
         <legend>Is the deviation solely due to those model problems?</legend>
         <label><input type="radio" name="solely" value="yes" data-knockout="true"/> yes</label>
         <label><input type="radio" name="solely" value="no"/> no</label>
       </fieldset>`;
  } else if (descriptor.step === 3) {
    body =
      yesNoField("case-type", questions["case-type"] ?? "", true) +
      `<fieldset class="factor" data-factor="control">
        <legend>${esc(questions["control"] ?? "")}</legend>
        <label><input type="radio" name="control" value="in-control"/> in control</label>
        <label><input type="radio" name="control" value="out-of-control-external" data-knockout="true"/> external conditions</label>
        <label><input type="radio" name="control" value="out-of-control-consequential" data-knockout="true"/> unavoidable consequence</label>
       </fieldset>
       <fieldset class="factor" data-factor="adequate-reaction">
        <legend>Could an adequate reaction have been taken already?</legend>
        <label><input type="radio" name="adequate" value="yes"/> yes</label>
        <label><input type="radio" name="adequate" value="no"/> no</label>
       </fieldset>`;
  } else if (descriptor.step === 4) {
    body = ratingGrid(factors, questions);
  } else if (descriptor.step === 5) {
    body = `
      <label class="reaction">chosen reaction
        <input type="text" name="chosen-reaction" data-question="${esc(questions["reaction-effectiveness"] ?? "")}"/>
      </label>
      <label class="score" data-factor="reaction-effectiveness">effectiveness
        <input type="number" min="0" step="any" name="effectiveness"/>
      </label>
      <label class="score" data-factor="reaction-cost">cost
        <input type="number" min="0" step="any" name="cost"/>
      </label>`;
  }
  // rationale is always available; main.ts makes it mandatory when a
  // selected option carries data-knockout (early conclusions must be argued)
  const rationale =
    descriptor.step === 4
      ? ""
      : `<label class="rationale">rationale
           <textarea name="rationale" rows="2"></textarea>
         </label>`;
  return `
  <section class="step-screen" data-step="${descriptor.step}">
    <h2>Step ${descriptor.step}</h2>
    <form class="step-form">
      ${body}
      ${rationale}
      <p class="inline-error" role="alert" hidden></p>
      <button type="submit">submit step ${descriptor.step}</button>
    </form>
  </section>`;
}

export function renderConclusion(conclusion: Conclusion): string {
  if (conclusion.state === "true-deviation-pending") {
    return `
    <section class="conclusion-card pending">
      <h2>True deviation</h2>
      <p>This deviation survived the individual checks. Aggregate it into a set
         and continue with the impact assessment.</p>
    </section>`;
  }
  const followups = conclusion.followups.map((f) => `<li>${esc(f)}</li>`).join("");
  return `
  <section class="conclusion-card concluded">
    <h2>Conclusion</h2>
    <p class="category">${esc(conclusion.category ?? "")}</p>
    <p class="action">${esc(conclusion.actionKind ?? "")}</p>
    ${followups ? `<ul class="followups">${followups}</ul>` : ""}
  </section>`;
}

export function renderInlineError(message: string | null): string {
  return message ? `<p class="inline-error" role="alert">${esc(message)}</p>` : "";
}

export function renderReport(report: ReportDoc): string {
  const counts = Object.keys(report.category_counts)
    .sort()
    .map((c) => `<li>${esc(c)}: ${report.category_counts[c]}</li>`)
    .join("");
  const rows = report.sets
    .map(
      (r) => `
    <tr>
      <td>${esc(r.set_id)}</td>
      <td>${r.frequency}</td>
      <td>${esc(r.category ?? "—")}</td>
      <td>${esc(r.action ?? "—")}</td>
    </tr>`,
    )
    .join("");
  return `
  <section class="report-view">
    <h2>Report — ${esc(report.workspace_id)}</h2>
    <ul class="category-counts">${counts || "<li>no concluded assessments</li>"}</ul>
    <table>
      <thead><tr><th>set</th><th>frequency</th><th>category</th><th>action</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
  </section>`;
}
