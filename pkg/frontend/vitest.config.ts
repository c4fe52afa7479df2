import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the studio-loop test trains two tiny checkpoints and boots the service
    testTimeout: 120_000,
    hookTimeout: 600_000,
    // the service subprocess owns shared ports; keep files sequential
    fileParallelism: false,
  },
});
