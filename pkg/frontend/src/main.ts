/**
 * Browser entry: wires the set browser, the one-step-at-a-time wizard, and
 * the report view to the API. All categorization comes from the server; this
 * file only builds answer payloads from form inputs and renders responses.
 */

import { ApiError, DeviationSetDoc, FetchHttp, TriageApi } from "./api.js";
import {
  renderConclusion,
  renderDeviationPanel,
  renderInlineError,
  renderReport,
  renderSetBrowser,
  renderStepScreen,
} from "./render.js";
import { Wizard } from "./wizard.js";

const api = new TriageApi(new FetchHttp(""));
const wizard = new Wizard(api);

let currentMode = "same-seq";
let currentSets: DeviationSetDoc[] = [];
let screeningQueue: string[] = [];
let currentSetId: string | null = null;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

async function refreshSets(): Promise<void> {
  try {
    const { sets } = await api.createSets(currentMode);
    currentSets = sets;
    el("browser").innerHTML = renderSetBrowser(sets, currentMode);
  } catch (err) {
    el("browser").innerHTML = renderInlineError(describe(err));
  }
}

function describe(err: unknown): string {
  return err instanceof ApiError ? `${err.errorName}: ${err.detail}` : String(err);
}

async function showDeviation(instanceId: string): Promise<void> {
  const { deviations } = await api.listDeviations();
  const doc = deviations.find((d) => d.id === instanceId);
  el("context").innerHTML = doc ? renderDeviationPanel(doc) : "";
}

async function openSet(setId: string): Promise<void> {
  currentSetId = setId;
  const dset = currentSets.find((s) => s.id === setId);
  try {
    await wizard.begin("set", setId);
    el("context").innerHTML = "";
    renderWizard();
  } catch (err) {
    if (err instanceof ApiError && err.errorName === "MembersNotScreened" && dset) {
      // individual phase first: walk the members one at a time
      screeningQueue = [...dset.members];
      await nextScreening();
    } else {
      el("wizard").innerHTML = renderInlineError(describe(err));
    }
  }
}

async function nextScreening(): Promise<void> {
  const member = screeningQueue.shift();
  if (member === undefined) {
    if (currentSetId) await openSet(currentSetId);
    return;
  }
  await showDeviation(member);
  await wizard.begin("instance", member);
  renderWizard();
}

function collectAnswer(form: HTMLFormElement, step: number): unknown {
  const radio = (name: string) =>
    (form.querySelector(`input[name="${name}"]:checked`) as HTMLInputElement | null)?.value;
  const text = (name: string) =>
    (form.querySelector(`[name="${name}"]`) as HTMLInputElement | HTMLTextAreaElement | null)
      ?.value ?? "";
  if (step === 1) {
    return {
      data_quality_attributable: radio("data-quality") === "yes",
      evidence: text("evidence").split(",").map((s) => s.trim()).filter(Boolean),
      rationale: text("rationale"),
    };
  }
  if (step === 2) {
    return {
      model_correct: radio("model-correctness") !== "yes", // yes = it has mistakes
      model_suitable: radio("model-suitability") === "yes",
      deviation_solely_due_to_model: radio("solely") === "yes",
      rationale: text("rationale"),
    };
  }
  if (step === 3) {
    return {
      case_type_justified: radio("case-type") === "yes",
      control_short_term: radio("control") ?? "in-control",
      adequate_reaction_already_possible: radio("adequate") === "yes",
      rationale: text("rationale"),
    };
  }
  if (step === 4) {
    const ratings: { factor: string; perspective: string; value: number; note: string }[] = [];
    form.querySelectorAll<HTMLSelectElement>("select.rating").forEach((select) => {
      const note = form.querySelector<HTMLInputElement>(
        `input.rating-note[data-factor="${select.dataset.factor}"][data-perspective="${select.dataset.perspective}"]`,
      );
      ratings.push({
        factor: select.dataset.factor ?? "",
        perspective: select.dataset.perspective ?? "",
        value: Number(select.value),
        note: note?.value ?? "",
      });
    });
    return { ratings, override: null };
  }
  return {
    chosen_reaction: text("chosen-reaction"),
    effectiveness_score: Number(text("effectiveness") || "0"),
    cost_score: Number(text("cost") || "0"),
    rationale: text("rationale"),
  };
}

function knockoutSelectedWithoutRationale(form: HTMLFormElement): boolean {
  const knockout = form.querySelector<HTMLInputElement>("input[data-knockout]:checked");
  const rationale = form.querySelector<HTMLTextAreaElement>('[name="rationale"]');
  return Boolean(knockout) && !(rationale?.value ?? "").trim();
}

function renderWizard(): void {
  const host = el("wizard");
  if (wizard.phase === "done" && wizard.conclusion) {
    host.innerHTML = renderConclusion(wizard.conclusion);
    if (wizard.conclusion.state === "true-deviation-pending" && screeningQueue.length >= 0) {
      const button = document.createElement("button");
      button.textContent = screeningQueue.length
        ? "next deviation in set"
        : "continue with the set assessment";
      button.addEventListener("click", () => void nextScreening());
      host.appendChild(button);
    }
    void refreshReport();
    return;
  }
  if (!wizard.descriptor) {
    host.innerHTML = "";
    return;
  }
  host.innerHTML = renderStepScreen(wizard.descriptor);
  const form = host.querySelector<HTMLFormElement>("form.step-form");
  form?.addEventListener("submit", (event) => {
    event.preventDefault();
    const errorLine = form.querySelector<HTMLElement>(".inline-error");
    if (knockoutSelectedWithoutRationale(form)) {
      if (errorLine) {
        errorLine.hidden = false;
        errorLine.textContent = "a concluding answer needs a rationale";
      }
      return;
    }
    const step = wizard.descriptor?.step ?? 0;
    void wizard.submitCurrentStep(collectAnswer(form, step)).then(() => {
      if (wizard.error && errorLine) {
        errorLine.hidden = false;
        errorLine.textContent = wizard.error;
      } else {
        renderWizard();
      }
    });
  });
}

async function refreshReport(): Promise<void> {
  try {
    const report = await api.getReport("workspace");
    el("report").innerHTML = renderReport(report);
  } catch {
    // report view is best-effort; workspace id may differ
  }
}

function init(): void {
  el("browser").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const mode = target.dataset?.mode;
    if (mode) {
      currentMode = mode;
      void refreshSets();
    }
    const setId = target.dataset?.setId;
    if (setId) {
      event.preventDefault();
      void openSet(setId);
    }
  });
  void refreshSets();
  void refreshReport();
}

document.addEventListener("DOMContentLoaded", init);
