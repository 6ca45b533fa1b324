import { defineConfig } from "vite";

// /api/* proxies to a local control plane during development:
//   fnfleet serve --config config/plane.example.json
export default defineConfig({
  server: {
    proxy: {
      "/api": {
        target: "http://127.0.0.1:8700",
        changeOrigin: true,
        rewrite: (path) => path.replace(/^\/api/, ""),
      },
    },
  },
  test: {
    environment: "happy-dom",
  },
});
