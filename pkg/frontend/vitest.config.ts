import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["test/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 60_000,
    // the e2e suite spawns one Python service per file; keep files sequential
    fileParallelism: false,
  },
});
