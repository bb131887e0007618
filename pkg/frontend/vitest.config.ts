import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // training tests run a real optimizer on the pure-JS CPU backend
    testTimeout: 3_600_000,
    hookTimeout: 3_600_000,
  },
});
