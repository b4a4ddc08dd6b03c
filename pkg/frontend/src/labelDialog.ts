// The intervention label dialog. Picking one of the four causes is
// mandatory — there is no close button, escape does nothing, and submit
// stays inert until a cause is selected. The comment is optional.

import type { Cause } from "./protocol.js";

export const CAUSES: ReadonlyArray<{ value: Cause; label: string }> = [
  { value: "overlooked_walker", label: "Overlooked a walker" },
  { value: "overlooked_vehicle", label: "Overlooked a vehicle" },
  { value: "traffic_rule_violation", label: "Traffic rule violation" },
  { value: "boredom", label: "Boredom" },
];

const CAUSE_VALUES = new Set(CAUSES.map((c) => c.value));

export interface Label {
  cause: Cause;
  comment: string;
}

/** Dialog state, kept separate from the DOM so it can be tested alone. */
export class LabelState {
  cause: Cause | null = null;
  comment = "";

  select(cause: string): boolean {
    if (!CAUSE_VALUES.has(cause as Cause)) return false;
    this.cause = cause as Cause;
    return true;
  }

  /** Null until a cause is picked; skipping is not an option. */
  trySubmit(): Label | null {
    if (this.cause === null) return null;
    return { cause: this.cause, comment: this.comment };
  }

  reset(): void {
    this.cause = null;
    this.comment = "";
  }
}

export class LabelDialog {
  readonly state = new LabelState();
  private readonly overlay: HTMLElement;
  private readonly submit: HTMLButtonElement;
  private readonly title: HTMLElement;

  constructor(root: HTMLElement, private onSubmit: (label: Label) => void) {
    this.overlay = document.createElement("div");
    this.overlay.className = "label-overlay hidden";
    const box = document.createElement("div");
    box.className = "label-box";
    this.title = document.createElement("h2");
    box.appendChild(this.title);

    for (const { value, label } of CAUSES) {
      const row = document.createElement("label");
      const radio = document.createElement("input");
      radio.type = "radio";
      radio.name = "cause";
      radio.value = value;
      radio.addEventListener("change", () => {
        this.state.select(value);
        this.submit.disabled = false;
      });
      row.appendChild(radio);
      row.appendChild(document.createTextNode(" " + label));
      box.appendChild(row);
    }

    const comment = document.createElement("textarea");
    comment.placeholder = "optional comment";
    comment.addEventListener("input", () => {
      this.state.comment = comment.value;
    });
    box.appendChild(comment);

    this.submit = document.createElement("button");
    this.submit.textContent = "Label intervention";
    this.submit.disabled = true;
    this.submit.addEventListener("click", () => {
      const label = this.state.trySubmit();
      if (label) this.onSubmit(label);
    });
    box.appendChild(this.submit);

    this.overlay.appendChild(box);
    root.appendChild(this.overlay);
  }

  show(triggerTick: number): void {
    this.state.reset();
    this.submit.disabled = true;
    for (const el of this.overlay.querySelectorAll("input[type=radio]")) {
      (el as HTMLInputElement).checked = false;
    }
    const area = this.overlay.querySelector("textarea");
    if (area) (area as HTMLTextAreaElement).value = "";
    this.title.textContent = `Why did you intervene? (tick ${triggerTick})`;
    this.overlay.classList.remove("hidden");
  }

  hide(): void {
    this.overlay.classList.add("hidden");
  }
}
