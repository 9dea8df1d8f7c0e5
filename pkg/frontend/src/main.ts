import { ConsoleApp } from "./app";
import "./styles.css";

declare global {
  interface Window {
    HUNTFORGE_API?: string;
    HUNTFORGE_ANALYST?: string;
  }
}

const root = document.getElementById("app");
if (root) {
  const app = new ConsoleApp(root, {
    baseUrl: window.HUNTFORGE_API ?? "",
    analyst: window.HUNTFORGE_ANALYST ?? "console",
  });
  void app.init().then(() => app.startPolling());
}
