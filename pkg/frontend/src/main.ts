import { Client } from "./api.js";
import { App } from "./app.js";

const view = document.getElementById("view");
const banner = document.getElementById("banner");
if (!view || !banner) throw new Error("explorer shell is missing #view or #banner");

new App(new Client(""), view, banner).start();
