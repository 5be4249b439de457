/** Client-side checks mirroring the service's 422 rules, so obviously
 * bad submissions never leave the browser. */

export interface FormState {
  headline: string;
  file: File | null;
  imageUrl: string;
}

export interface FormIssue {
  field: "headline" | "image";
  message: string;
}

export function validateForm(state: FormState): FormIssue[] {
  const issues: FormIssue[] = [];
  if (state.headline.trim() === "") {
    issues.push({ field: "headline", message: "headline must not be empty" });
  }
  const hasFile = state.file !== null;
  const hasUrl = state.imageUrl.trim() !== "";
  if (!hasFile && !hasUrl) {
    issues.push({ field: "image", message: "choose an image file or give an image URL" });
  } else if (hasFile && hasUrl) {
    issues.push({ field: "image", message: "give either a file or a URL, not both" });
  }
  return issues;
}
