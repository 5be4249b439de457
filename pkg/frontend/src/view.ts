import { formatLatency, probabilityRows } from "./format";
import type { PredictResponse } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Card shown after a successful prediction: verdict badge, one
 * probability bar per class, and the model/latency footer. */
export function resultCard(response: PredictResponse): HTMLElement {
  const card = el("div", "result-card");
  card.appendChild(el("span", `verdict verdict-${response.label}`, response.label));

  const bars = el("div", "bars");
  for (const row of probabilityRows(response)) {
    const line = el("div", "bar-row");
    line.appendChild(el("span", "bar-label", row.label));
    const track = el("div", "bar-track");
    const fill = el("div", `bar-fill bar-${row.label}`);
    fill.style.width = `${row.value * 100}%`;
    track.appendChild(fill);
    line.appendChild(track);
    line.appendChild(el("span", "bar-percent", `${row.percent}%`));
    bars.appendChild(line);
  }
  card.appendChild(bars);

  card.appendChild(
    el("p", "result-meta",
       `model ${response.model_version} · ${formatLatency(response.latency_ms)}`),
  );
  return card;
}

export function errorBox(message: string): HTMLElement {
  return el("div", "error-box", message);
}

export function historyEntry(headline: string, response: PredictResponse): HTMLElement {
  const item = el("li", "history-entry");
  item.appendChild(el("span", `verdict verdict-${response.label}`, response.label));
  item.appendChild(el("span", "history-headline", headline));
  const percents = probabilityRows(response)
    .map((row) => `${row.label} ${row.percent}%`)
    .join(" · ");
  item.appendChild(el("span", "history-percents", percents));
  return item;
}
