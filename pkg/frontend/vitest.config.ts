import { defineConfig } from "vitest/config";

// The parity suite spawns the Python service and shells out to the CLI for
// golden output, so individual tests can take a few seconds.
export default defineConfig({
  test: {
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
