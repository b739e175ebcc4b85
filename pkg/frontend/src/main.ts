/** Browser bootstrap: hash routing, token storage, DOM event delegation.
 * All logic lives in the controller and the pure renderers; this file only
 * connects them to the page. */

import { ApiError, Client } from "./api.js";
import { Dashboard, type Sink } from "./dashboard.js";
import { renderLogin, renderSessionList, type Tab } from "./view.js";

const root = document.getElementById("app")!;
const client = new Client("", localStorage.getItem("nesy-token"));
let dash: Dashboard | null = null;

const sink: Sink = {
  html: (markup) => {
    root.innerHTML = markup;
  },
  login: (message) => {
    root.innerHTML = renderLogin(message);
  },
  notice: (message) => {
    const box = document.createElement("div");
    box.className = "failure";
    box.textContent = message;
    root.prepend(box);
    setTimeout(() => box.remove(), 4000);
  },
  save: (name, bytes) => {
    const url = URL.createObjectURL(
      new Blob([bytes], { type: "application/x-ipynb+json" }),
    );
    const a = document.createElement("a");
    a.href = url;
    a.download = name;
    a.click();
    URL.revokeObjectURL(url);
  },
};

function value(role: string): string {
  const el = root.querySelector<HTMLInputElement | HTMLTextAreaElement>(
    `[data-role="${role}"]`,
  );
  return el ? el.value : "";
}

async function showList(): Promise<void> {
  dash?.stop();
  dash = null;
  try {
    root.innerHTML = renderSessionList(await client.listSessions());
  } catch (err) {
    if (err instanceof ApiError && err.status === 401) {
      root.innerHTML = renderLogin(err.message);
      return;
    }
    throw err;
  }
}

async function showSession(id: string): Promise<void> {
  dash?.stop();
  dash = new Dashboard(client, sink, id);
  await dash.refresh();
}

function route(): void {
  const match = location.hash.match(/^#\/session\/(\w+)$/);
  if (match) void showSession(match[1]!);
  else void showList();
}

root.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest<HTMLElement>(
    "[data-action], [data-tab]",
  );
  if (!target) return;
  event.preventDefault();

  const tab = target.dataset.tab as Tab | undefined;
  if (tab) {
    dash?.setTab(tab);
    return;
  }
  switch (target.dataset.action) {
    case "login":
      localStorage.setItem("nesy-token", value("token"));
      client.setToken(value("token"));
      route();
      break;
    case "create":
      void client
        .createSession(value("task"))
        .then((made) => {
          location.hash = `#/session/${made.session_id}`;
        })
        .catch((err) => sink.notice(String(err)));
      break;
    case "open":
      location.hash = `#/session/${target.dataset.session}`;
      break;
    case "new-task":
      location.hash = "#/";
      break;
    case "approve-graph":
      void dash?.approve("graph");
      break;
    case "revise-graph":
      void dash?.revise(value("feedback"));
      break;
    case "approve-sensor":
      void dash?.approve("sensor");
      break;
    case "edit-sensor":
      void dash?.edit(value("sensor-editor"));
      break;
    case "submit-mapping":
      void dash?.mapping(value("mapping-text"));
      break;
    case "download":
      void dash?.download();
      break;
  }
});

window.addEventListener("hashchange", route);
route();
