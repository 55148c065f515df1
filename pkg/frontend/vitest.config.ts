import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the integration suite builds a model and runs a real server
    testTimeout: 30_000,
    hookTimeout: 120_000,
    // sequential: the integration test kills its server at the end
    fileParallelism: false,
  },
});
