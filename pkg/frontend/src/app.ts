import { ApiClient, ApiError } from "./api";
import { validateForm } from "./validation";
import { errorBox, historyEntry, resultCard } from "./view";

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

/**
 * Build the single-page UI inside `container` and wire it to `client`.
 * Everything is created programmatically so tests can mount the app
 * into a bare element and drive it through DOM events.
 */
export function mountApp(container: HTMLElement, client: ApiClient): void {
  container.innerHTML = "";

  container.appendChild(el("h1", undefined, "വ്യാജവാർത്ത പരിശോധന"));
  container.appendChild(
    el("p", "tagline", "Checks a Malayalam headline together with its image."),
  );

  const status = el("p", "service-status", "checking service…");
  status.id = "service-status";
  container.appendChild(status);

  const form = el("form");
  form.id = "predict-form";
  form.noValidate = true;

  const headlineLabel = el("label", undefined, "Headline");
  const headline = document.createElement("textarea");
  headline.id = "headline";
  headline.rows = 2;
  headline.placeholder = "വാർത്താ തലക്കെട്ട്…";
  headlineLabel.appendChild(headline);
  form.appendChild(headlineLabel);
  const headlineIssue = el("p", "issue");
  headlineIssue.id = "issue-headline";
  headlineIssue.hidden = true;
  form.appendChild(headlineIssue);

  const imageSet = el("fieldset");
  imageSet.appendChild(el("legend", undefined, "Image (file or URL)"));
  const fileLabel = el("label", undefined, "Upload");
  const fileInput = document.createElement("input");
  fileInput.type = "file";
  fileInput.id = "image-file";
  fileInput.accept = "image/*";
  fileLabel.appendChild(fileInput);
  imageSet.appendChild(fileLabel);
  const urlLabel = el("label", undefined, "or URL");
  const urlInput = document.createElement("input");
  urlInput.type = "url";
  urlInput.id = "image-url";
  urlInput.placeholder = "https://…";
  urlLabel.appendChild(urlInput);
  imageSet.appendChild(urlLabel);
  form.appendChild(imageSet);
  const imageIssue = el("p", "issue");
  imageIssue.id = "issue-image";
  imageIssue.hidden = true;
  form.appendChild(imageIssue);

  const submit = el("button", undefined, "Classify");
  submit.id = "submit";
  submit.type = "submit";
  form.appendChild(submit);
  container.appendChild(form);

  const result = el("section", "result");
  result.id = "result";
  container.appendChild(result);

  const historySection = el("section", "history");
  historySection.appendChild(el("h2", undefined, "This session"));
  const historyList = document.createElement("ol");
  historyList.id = "history-list";
  historySection.appendChild(historyList);
  container.appendChild(historySection);

  client
    .health()
    .then((h) => {
      status.textContent = `service ready · model ${h.model_version}`;
      status.classList.add("status-ok");
    })
    .catch(() => {
      status.textContent = "service unreachable";
      status.classList.add("status-down");
    });

  function showIssues(issues: { field: string; message: string }[]): void {
    const byField: Record<string, string[]> = {};
    for (const issue of issues) {
      (byField[issue.field] ??= []).push(issue.message);
    }
    headlineIssue.textContent = (byField["headline"] ?? []).join("; ");
    headlineIssue.hidden = !byField["headline"];
    imageIssue.textContent = (byField["image"] ?? []).join("; ");
    imageIssue.hidden = !byField["image"];
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const state = {
      headline: headline.value,
      file: (fileInput.files && fileInput.files[0]) ?? null,
      imageUrl: urlInput.value,
    };
    const issues = validateForm(state);
    showIssues(issues);
    if (issues.length > 0) return; // nothing leaves the browser

    submit.disabled = true;
    submit.textContent = "Classifying…";
    result.innerHTML = "";

    const request = state.file
      ? client.predictFile(state.headline, state.file)
      : client.predictUrl(state.headline, state.imageUrl);

    request
      .then((response) => {
        result.appendChild(resultCard(response));
        historyList.prepend(historyEntry(state.headline, response));
      })
      .catch((error: unknown) => {
        // inputs are left untouched so the user can correct and resend
        if (error instanceof ApiError && error.fieldErrors.length > 0) {
          showIssues(
            error.fieldErrors.map((fe) => ({
              field: fe.loc[fe.loc.length - 1] === "headline" ? "headline" : "image",
              message: fe.msg,
            })),
          );
        } else {
          const message =
            error instanceof ApiError
              ? `request failed (${error.status}): ${error.message}`
              : "request failed: service unreachable";
          result.appendChild(errorBox(message));
        }
      })
      .finally(() => {
        submit.disabled = false;
        submit.textContent = "Classify";
      });
  });
}
