import { AssessmentClient } from "./api.js";
import { createApp } from "./app.js";
import { MicRecorder } from "./recorder.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const app = createApp(root, new AssessmentClient(""), window.localStorage);

// Microphone recording is wired on top of the core app so environments
// without MediaRecorder (or denied permission) still work via file upload.
if ("mediaDevices" in navigator && typeof MediaRecorder !== "undefined") {
  const recorder = new MicRecorder();
  const button = document.createElement("button");
  button.textContent = "● Record";
  button.className = "record-button";
  button.addEventListener("click", async () => {
    try {
      if (!recorder.active) {
        await recorder.start();
        button.textContent = "■ Stop";
      } else {
        const blob = await recorder.stop();
        app.setAudio(blob);
        button.textContent = "● Record";
      }
    } catch (err) {
      button.textContent = "● Record";
      app.elements.validation.textContent = `microphone unavailable: ${String(err)}`;
    }
  });
  app.elements.submitButton.before(button);
}
