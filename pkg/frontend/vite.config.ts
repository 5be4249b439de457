import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    // same-origin /api in dev; point this at wherever `mmfnd serve` runs
    proxy: {
      "/api": "http://127.0.0.1:8000",
    },
  },
  test: {
    environment: "jsdom",
  },
});
