import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["test/**/*.test.ts"],
    // The integration file drives a real server process; keep files serial
    // so its gateway capacity settings see no cross-file interference.
    fileParallelism: false,
    testTimeout: 20000,
    hookTimeout: 40000,
  },
});
