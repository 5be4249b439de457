import "./styles.css";
import { ApiClient, resolveBaseUrl } from "./api";
import { mountApp } from "./app";

const root = document.getElementById("app");
if (root) {
  mountApp(root, new ApiClient(resolveBaseUrl()));
}
